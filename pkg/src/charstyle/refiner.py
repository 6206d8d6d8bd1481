"""Context-aware multi-label style refiner.

A one-hidden-layer ReLU network maps ``[utterance ; context ; prototypes]`` to
one logit per style label. The prototype block holds the cosine similarity of
the utterance embedding to each label centroid. Training minimizes
label-weighted binary cross-entropy with Adam and early stopping on the
validation loss; decision thresholds are then tuned per label for F1.
"""

from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus_io import EmbeddingTable
from .errors import StyleError

log = logging.getLogger(__name__)

DEFAULT_GRID = np.round(np.arange(1, 100) / 100.0, 2)
MODEL_MAGIC = b"CSREFINE"
MODEL_VERSION = 1


class TrainingError(StyleError):
    pass


class RefinerWarning(UserWarning):
    pass


# -- labels ----------------------------------------------------------------------


@dataclass(frozen=True)
class LabelSet:
    labels: tuple[str, ...]
    categories: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise StyleError("style labels must be unique")
        if len(self.categories) != len(self.labels):
            raise StyleError("every label needs a category")

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise StyleError(f"unknown style label {label!r}") from None

    def by_category(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for lab, cat in zip(self.labels, self.categories):
            out.setdefault(cat, []).append(lab)
        return out

    def multi_hot(self, active: Sequence[str]) -> np.ndarray:
        vec = np.zeros(len(self), dtype=np.int8)
        for lab in active:
            vec[self.index(lab)] = 1
        return vec

    def names(self, row) -> list[str]:
        return [lab for lab, on in zip(self.labels, row) if on]

    @classmethod
    def parse(cls, text: str) -> "LabelSet":
        cats, labs = [], []
        for line in text.splitlines():
            if line.strip():
                cat, lab = line.split("\t")
                cats.append(cat.strip())
                labs.append(lab.strip())
        return cls(tuple(labs), tuple(cats))


def default_labels() -> LabelSet:
    """The 50-label persona taxonomy in four categories."""
    text = resources.files("charstyle").joinpath("data/style_labels.tsv").read_text("utf-8")
    return LabelSet.parse(text)


# -- features ----------------------------------------------------------------------


@dataclass
class RefinerExample:
    utterance_embedding: np.ndarray
    context_embedding: np.ndarray
    prototype_features: np.ndarray
    gold_labels: np.ndarray | None = None
    id: str = ""
    context_missing: bool = False

    def features(self) -> np.ndarray:
        return np.concatenate([self.utterance_embedding, self.context_embedding,
                               self.prototype_features])


def _unit_scaled(mat: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Rows divided by their largest magnitude, and their squared norms.

    The rescaling keeps squared norms in ``[1, dim]``, so tiny or huge rows
    neither underflow nor overflow.
    """
    peak = np.max(np.abs(mat), axis=1)
    if np.any(peak == 0):
        raise StyleError(f"zero-norm {what} vector")
    mat = mat / peak[:, None]
    return mat, np.einsum("ij,ij->i", mat, mat)


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosines between rows of ``a`` and rows of ``b``.

    Computed as ``dot / sqrt(|a|^2 |b|^2)`` with one summation order, so a row
    compared with an identical row gives exactly 1.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    a, aa = _unit_scaled(a, "input")
    b, bb = _unit_scaled(b, "centroid")
    dots = np.einsum("ik,jk->ij", a, b)
    return np.clip(dots / np.sqrt(np.outer(aa, bb)), -1.0, 1.0)


def prototype_features(utterance_embedding, centroids: EmbeddingTable,
                       labels: LabelSet) -> np.ndarray:
    return cosine_matrix(utterance_embedding, centroids.matrix(labels.labels))[0]


def label_centroids(exemplars: Mapping[str, Sequence[np.ndarray]]) -> EmbeddingTable:
    """Average per-label exemplar embeddings into centroid vectors."""
    entries = {}
    for label, vecs in exemplars.items():
        if len(vecs) == 0:
            raise StyleError(f"no exemplars for label {label!r}")
        entries[label] = np.mean(np.asarray(vecs, dtype=np.float64), axis=0)
    dim = next(iter(entries.values())).size
    return EmbeddingTable(dim, entries)


def make_example(utterance_embedding, centroids: EmbeddingTable, labels: LabelSet,
                 context_embedding=None, gold: Sequence[str] | np.ndarray | None = None,
                 id: str = "") -> RefinerExample:
    """Assemble one refiner input; a missing context becomes a zero vector (flagged)."""
    utt = np.asarray(utterance_embedding, dtype=np.float64)
    missing = context_embedding is None
    ctx = np.zeros_like(utt) if missing else np.asarray(context_embedding, dtype=np.float64)
    if ctx.shape != utt.shape:
        raise StyleError("context and utterance embeddings differ in dimension")
    if gold is not None and not isinstance(gold, np.ndarray):
        gold = labels.multi_hot(gold)
    return RefinerExample(utt, ctx, prototype_features(utt, centroids, labels), gold, id, missing)


def stack_features(examples: Sequence[RefinerExample]) -> np.ndarray:
    return np.stack([e.features() for e in examples])


def stack_gold(examples: Sequence[RefinerExample]) -> np.ndarray:
    if any(e.gold_labels is None for e in examples):
        raise StyleError("gold labels missing on some examples")
    return np.stack([e.gold_labels for e in examples]).astype(np.float64)


def _as_features(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        return np.atleast_2d(data.astype(np.float64, copy=False))
    if isinstance(data, RefinerExample):
        return data.features()[None, :]
    return stack_features(data)


def oversample_rare_labels(examples: Sequence[RefinerExample], min_count: int = 23,
                           labels: LabelSet | None = None) -> list[RefinerExample]:
    """Duplicate examples of under-represented labels until each has ``min_count``.

    Labels are visited in taxonomy order; for each one the examples carrying it
    are copied round-robin (in input order) until the label's running count
    reaches ``min_count``. Copies of multi-label examples also raise the counts
    of their other labels. Nothing is ever removed.
    """
    out = list(examples)
    if not out:
        return out
    gold = stack_gold(out).astype(np.int64)
    counts = gold.sum(axis=0)
    names = labels.labels if labels is not None else [str(i) for i in range(gold.shape[1])]
    for j in range(gold.shape[1]):
        carriers = np.flatnonzero(gold[:, j])
        if carriers.size == 0:
            warnings.warn(f"label {names[j]!r} has no examples; cannot oversample",
                          RefinerWarning, stacklevel=2)
            continue
        k = 0
        while counts[j] < min_count:
            src = carriers[k % carriers.size]
            out.append(examples[src])
            counts += gold[src]
            k += 1
    return out


# -- model -------------------------------------------------------------------------


@dataclass
class RefinerConfig:
    hidden_width: int = 256
    learning_rate: float = 1e-3
    max_epochs: int = 200
    patience: int = 10
    batch_size: int = 64
    seed: int = 0
    val_fraction: float = 0.15
    use_prototypes: bool = True


@dataclass
class RefinerModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    label_weights: np.ndarray
    use_prototypes: bool = True
    trained: bool = False
    history: list[tuple[float, float]] = field(default_factory=list)
    val_indices: np.ndarray | None = None

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_width(self) -> int:
        return self.w1.shape[1]

    @property
    def n_labels(self) -> int:
        return self.w2.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def _prepare(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.input_dim:
            raise StyleError(f"feature dimension {x.shape[1]} does not match model input {self.input_dim}")
        if not self.use_prototypes:
            x = x.copy()
            x[:, self.input_dim - self.n_labels:] = 0.0
        return x

    def logits(self, x) -> np.ndarray:
        x = self._prepare(_as_features(x))
        return np.maximum(x @ self.w1 + self.b1, 0.0) @ self.w2 + self.b2

    def predict_proba(self, x) -> np.ndarray:
        return _sigmoid(self.logits(x))

    # binary layout: magic, version, 4 x uint32 header, then little-endian float64 arrays
    def to_bytes(self) -> bytes:
        flags = int(self.use_prototypes) | (int(self.trained) << 1)
        head = MODEL_MAGIC + struct.pack("<5I", MODEL_VERSION, self.input_dim,
                                         self.hidden_width, self.n_labels, flags)
        body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                        for a in (self.w1, self.b1, self.w2, self.b2, self.label_weights))
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "RefinerModel":
        if not data.startswith(MODEL_MAGIC):
            raise StyleError("not a refiner model file")
        off = len(MODEL_MAGIC)
        version, d_in, hidden, n_lab, flags = struct.unpack_from("<5I", data, off)
        if version != MODEL_VERSION:
            raise StyleError(f"unsupported model file version {version}")
        off += 20
        arrays = []
        for shape in ((d_in, hidden), (hidden,), (hidden, n_lab), (n_lab,), (n_lab,)):
            n = int(np.prod(shape))
            arrays.append(np.frombuffer(data, dtype="<f8", count=n, offset=off)
                          .astype(np.float64).reshape(shape))
            off += 8 * n
        if off != len(data):
            raise StyleError("model file has trailing bytes")
        return cls(*arrays, use_prototypes=bool(flags & 1), trained=bool(flags & 2))

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "RefinerModel":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"model file not found: {path}")
        return cls.from_bytes(path.read_bytes())


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_model(input_dim: int, n_labels: int, hidden_width: int, seed: int,
               label_weights=None, use_prototypes: bool = True) -> RefinerModel:
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, np.sqrt(2.0 / input_dim), size=(input_dim, hidden_width))
    w2 = rng.normal(0.0, np.sqrt(1.0 / hidden_width), size=(hidden_width, n_labels))
    lw = np.ones(n_labels) if label_weights is None else np.asarray(label_weights, dtype=np.float64)
    return RefinerModel(w1, np.zeros(hidden_width), w2, np.zeros(n_labels), lw,
                        use_prototypes=use_prototypes)


def weighted_bce(logits: np.ndarray, gold: np.ndarray, weights: np.ndarray) -> float:
    """Mean over examples and labels of ``w_label * BCE(sigmoid(logit), gold)``."""
    per = np.maximum(logits, 0.0) - logits * gold + np.log1p(np.exp(-np.abs(logits)))
    return float(np.mean(per * weights))


def loss_and_grads(model: RefinerModel, x: np.ndarray, gold: np.ndarray):
    x = model._prepare(x)
    pre = x @ model.w1 + model.b1
    h = np.maximum(pre, 0.0)
    z = h @ model.w2 + model.b2
    loss = weighted_bce(z, gold, model.label_weights)
    dz = model.label_weights * (_sigmoid(z) - gold) / z.size
    dh = (dz @ model.w2.T) * (pre > 0)
    grads = {"w1": x.T @ dh, "b1": dh.sum(axis=0), "w2": h.T @ dz, "b2": dz.sum(axis=0)}
    return loss, grads


def inverse_frequency_weights(gold: np.ndarray) -> np.ndarray:
    """1 / count per label (absent labels treated as count 1), rescaled to mean 1."""
    w = 1.0 / np.maximum(gold.sum(axis=0), 1.0)
    return w / w.mean()


def split_indices(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * val_fraction))
    if n_val < 2 or n - n_val < 2:
        raise StyleError(f"need at least 2 examples in each split, got {n - n_val}/{n_val}")
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def train_refiner(examples: Sequence[RefinerExample], config: RefinerConfig | None = None) -> RefinerModel:
    """Fit a refiner on a seeded train/validation split of ``examples``.

    The returned model keeps the parameters with the lowest validation loss
    and records the validation indices in ``val_indices``. ``max_epochs=0``
    returns the initialized network with ``trained=False``.

    Raises:
        TrainingError: the loss became non-finite.
    """
    config = config or RefinerConfig()
    x = stack_features(examples)
    y = stack_gold(examples)
    train_idx, val_idx = split_indices(len(examples), config.val_fraction, config.seed)
    xt, yt, xv, yv = x[train_idx], y[train_idx], x[val_idx], y[val_idx]

    model = init_model(x.shape[1], y.shape[1], config.hidden_width, config.seed,
                       inverse_frequency_weights(yt), config.use_prototypes)
    model.val_indices = val_idx
    if config.max_epochs <= 0:
        warnings.warn("max_epochs is 0: returning an untrained model", RefinerWarning, stacklevel=2)
        return model

    rng = np.random.default_rng([config.seed, 1])
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = {k: np.zeros_like(v) for k, v in model.params().items()}
    v = {k: np.zeros_like(p) for k, p in model.params().items()}
    step = 0
    best = (np.inf, {k: p.copy() for k, p in model.params().items()})
    stale = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(len(xt))
        train_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads = loss_and_grads(model, xt[batch], yt[batch])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss} at epoch {epoch}, step {step}; "
                                    f"max |w1|={np.abs(model.w1).max():.3g}, "
                                    f"max |w2|={np.abs(model.w2).max():.3g}")
            train_loss += loss * len(batch)
            step += 1
            for k, g in grads.items():
                m[k] = beta1 * m[k] + (1 - beta1) * g
                v[k] = beta2 * v[k] + (1 - beta2) * g * g
                mhat = m[k] / (1 - beta1 ** step)
                vhat = v[k] / (1 - beta2 ** step)
                getattr(model, k)[...] -= config.learning_rate * mhat / (np.sqrt(vhat) + eps)
        val_loss = weighted_bce(model.logits(xv), yv, model.label_weights)
        model.history.append((train_loss / len(xt), val_loss))
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        if val_loss < best[0]:
            best = (val_loss, {k: p.copy() for k, p in model.params().items()})
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                log.info("early stop at epoch %d (best val loss %.5f)", epoch, best[0])
                break
    for k, p in best[1].items():
        getattr(model, k)[...] = p
    model.trained = True
    return model


# -- decisions and metrics ------------------------------------------------------------


def predict(model: RefinerModel, features, thresholds) -> tuple[np.ndarray, np.ndarray]:
    """Label probabilities and multi-hot decisions (``prob >= threshold``).

    Raises:
        StyleError: ``model`` was never trained.
    """
    if not model.trained:
        raise StyleError("untrained model requested for prediction")
    probs = model.predict_proba(features)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if thresholds.shape != (model.n_labels,):
        raise StyleError(f"expected {model.n_labels} thresholds, got {thresholds.shape}")
    return probs, (probs >= thresholds).astype(np.int8)


def _f1_counts(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return np.divide(2 * tp, denom, out=np.zeros(np.shape(tp), dtype=np.float64),
                     where=denom > 0)


def optimize_thresholds_from_probs(probs: np.ndarray, gold: np.ndarray, grid=None) -> np.ndarray:
    """Per-label threshold maximizing F1; ties go to the lowest threshold."""
    grid = DEFAULT_GRID if grid is None else np.sort(np.asarray(grid, dtype=np.float64))
    if grid.size == 0:
        raise StyleError("threshold grid is empty")
    gold = np.asarray(gold).astype(bool)
    best_t = np.full(probs.shape[1], grid[0])
    best_f = np.full(probs.shape[1], -1.0)
    for t in grid:
        dec = probs >= t
        tp = (dec & gold).sum(axis=0)
        fp = (dec & ~gold).sum(axis=0)
        fn = (~dec & gold).sum(axis=0)
        f1 = _f1_counts(tp, fp, fn)
        better = f1 > best_f
        best_f[better] = f1[better]
        best_t[better] = t
    return best_t


def optimize_thresholds(model: RefinerModel, validation_examples, grid=None) -> np.ndarray:
    gold = stack_gold(validation_examples)
    return optimize_thresholds_from_probs(model.predict_proba(validation_examples), gold, grid)


@dataclass(frozen=True)
class ClassificationReport:
    labels: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.f1))

    def to_tsv(self) -> str:
        lines = ["Label\tP\tR\tF1\tSup"]
        for i, lab in enumerate(self.labels):
            lines.append(f"{lab}\t{self.precision[i]:.2f}\t{self.recall[i]:.2f}\t"
                         f"{self.f1[i]:.2f}\t{int(self.support[i])}")
        lines.append(f"macro\t\t\t{self.macro_f1:.4f}\t{int(self.support.sum())}")
        return "\n".join(lines) + "\n"


def macro_f1(decisions, gold, labels: LabelSet | Sequence[str] | None = None) -> ClassificationReport:
    """Per-label precision/recall/F1 (0/0 taken as 0) and their unweighted mean."""
    dec = np.atleast_2d(np.asarray(decisions)).astype(bool)
    gold = np.atleast_2d(np.asarray(gold)).astype(bool)
    if dec.shape != gold.shape:
        raise StyleError(f"decision shape {dec.shape} != gold shape {gold.shape}")
    tp = (dec & gold).sum(axis=0)
    fp = (dec & ~gold).sum(axis=0)
    fn = (~dec & gold).sum(axis=0)
    zeros = np.zeros(dec.shape[1])
    precision = np.divide(tp, tp + fp, out=zeros.copy(), where=(tp + fp) > 0)
    recall = np.divide(tp, tp + fn, out=zeros.copy(), where=(tp + fn) > 0)
    names = tuple(labels) if labels is not None else tuple(str(i) for i in range(dec.shape[1]))
    return ClassificationReport(names, precision, recall, _f1_counts(tp, fp, fn), tp + fn)


def centroid_baseline(utterance_embeddings, label_centroids: EmbeddingTable, labels: LabelSet,
                      threshold: float) -> np.ndarray:
    """Label fires when cosine(utterance, centroid) >= ``threshold``; no context used."""
    sims = cosine_matrix(utterance_embeddings, label_centroids.matrix(labels.labels))
    return (sims >= threshold).astype(np.int8)


# -- thresholds file -------------------------------------------------------------------


def format_thresholds(thresholds, labels: LabelSet) -> str:
    return "".join(f"{lab}\t{float(t)!r}\n" for lab, t in zip(labels, thresholds))


def parse_thresholds(text: str, labels: LabelSet) -> np.ndarray:
    values = {}
    for line in text.splitlines():
        if line.strip():
            lab, t = line.split("\t")
            values[lab] = float(t)
    missing = [lab for lab in labels if lab not in values]
    if missing:
        raise StyleError(f"thresholds missing for: {', '.join(missing)}")
    return np.array([values[lab] for lab in labels])


# -- profiles ----------------------------------------------------------------------------


@dataclass(frozen=True)
class StyleProfile:
    character: str
    activations: dict[str, float]
    top_k: int = 5

    @property
    def empty(self) -> bool:
        return not self.activations

    @property
    def labels(self) -> list[str]:
        return list(self.activations)


def profile_from_decisions(decisions: np.ndarray, labels: LabelSet, character: str,
                           top_k: int = 5) -> StyleProfile:
    """Activation rate per label; the ``top_k`` labels that fire at all, highest first."""
    decisions = np.atleast_2d(decisions)
    if decisions.shape[0] == 0:
        raise StyleError("empty corpus: no utterances to profile")
    rates = decisions.mean(axis=0)
    order = sorted(range(len(labels)), key=lambda i: (-rates[i], i))
    acts = {labels.labels[i]: float(rates[i]) for i in order[:top_k] if rates[i] > 0}
    return StyleProfile(character, acts, top_k)


def corpus_profile(model: RefinerModel, corpus_features, thresholds, labels: LabelSet,
                   character: str = "", top_k: int = 5) -> StyleProfile:
    feats = _as_features(corpus_features) if len(corpus_features) else np.zeros((0, model.input_dim))
    if feats.shape[0] == 0:
        raise StyleError("empty corpus: no utterances to profile")
    _, dec = predict(model, feats, thresholds)
    return profile_from_decisions(dec, labels, character, top_k)
