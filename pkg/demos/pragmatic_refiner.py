"""
Training the pragmatic style refiner
====================================

A small MLP maps (utterance, context, prototype-similarity) features to 50
persona labels. Per-label thresholds are tuned on a held-out split, and a
centroid-only classifier serves as the baseline.
"""

import time

import numpy as np

from charstyle import refiner
from charstyle.toy import synthetic_refiner_data

labels = refiner.default_labels()
print({cat: len(labs) for cat, labs in labels.by_category().items()})

# a separable synthetic set: each example is the sum of its label directions plus noise
data = synthetic_refiner_data(1200, n_labels=len(labels), dim=64, seed=0, noise=0.2)
cents = data.centroids(labels)
examples = [refiner.make_example(data.utterances[i], cents, labels, data.contexts[i], data.gold[i])
            for i in range(len(data.gold))]

train_idx, tune_idx = refiner.split_indices(len(examples), 0.15, seed=0)
train = refiner.oversample_rare_labels([examples[i] for i in train_idx], 23, labels)
tune = [examples[i] for i in tune_idx]
print("train examples: %d -> %d after oversampling" % (len(train_idx), len(train)))

t0 = time.perf_counter()
model = refiner.train_refiner(train, refiner.RefinerConfig(hidden_width=128, seed=0))
print("trained %d epochs in %.1fs" % (len(model.history), time.perf_counter() - t0))

x, y = refiner.stack_features(tune), refiner.stack_gold(tune)
probs = model.predict_proba(x)
th = refiner.optimize_thresholds_from_probs(probs, y)
print("macro-F1 fixed 0.5: %.3f" % refiner.macro_f1(probs >= 0.5, y).macro_f1)
print("macro-F1 tuned:     %.3f" % refiner.macro_f1(probs >= th, y).macro_f1)

utt = np.stack([e.utterance_embedding for e in tune])
base = refiner.centroid_baseline(utt, cents, labels, threshold=0.5)
print("centroid baseline:  %.3f" % refiner.macro_f1(base, y).macro_f1)

# ablation: the same network with the prototype block zeroed
ablated = refiner.train_refiner(train, refiner.RefinerConfig(hidden_width=128, seed=0, use_prototypes=False))
p2 = ablated.predict_proba(x)
print("no prototypes:      %.3f" % refiner.macro_f1(p2 >= refiner.optimize_thresholds_from_probs(p2, y), y).macro_f1)

# a label profile for a batch of utterances
_, dec = refiner.predict(model, x, th)
print(refiner.profile_from_decisions(dec, labels, "tune-set", top_k=5).activations)
