"""
Assembling style vectors and measuring N-shot stability
=======================================================

Build the toy workspace, train the refiner, assemble a structured style
vector per character and check how quickly vectors extracted from N-utterance
samples converge to the full-corpus vector.
"""

import tempfile

from charstyle import refiner
from charstyle.pipeline import Pipeline, PipelineConfig
from charstyle.style_vector import composite_similarity, nshot_stability
from charstyle.toy import write_toy_workspace

root = tempfile.mkdtemp(prefix="charstyle-demo-")
pipe = Pipeline(PipelineConfig.load(write_toy_workspace(root, seed=0)))

examples = pipe.gold_examples()
cfg = pipe.refiner_config()
model = refiner.train_refiner(examples, cfg)
val = [examples[i] for i in model.val_indices]
thresholds = refiner.optimize_thresholds(model, val)

styles = {c: pipe.style_vector(c, model, thresholds) for c in pipe.config.characters}
for char, s in styles.items():
    print(char, "| keywords:", " ".join(s.lexicon.tokens[:8]))
    print("     | pragmatic:", s.pragmatic.activations)
    print("     | syntax:", s.syntactic.top(3))

cross = composite_similarity(styles["mika"], styles["sora"], pipe.embeddings)
print("\nmika vs sora composite similarity: %.3f" % cross.composite)

corpus = pipe.corpora["mika"]
extractor = pipe.extractor("mika", model, thresholds)
curve = nshot_stability(extractor, corpus, [2, 5, 10, 20, len(corpus)], extractor.extract(corpus),
                        pipe.embeddings, seed=0, trials=5)
print()
print(curve.to_csv())
print("converged at N =", curve.convergence_n)
