"""The structured style vector and its N-shot stability analysis."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus_io import Corpus, EmbeddingTable
from .errors import StyleError
from .lexical import TfPmiEntry, TfPmiLexicon, UnigramDistribution, build_lexicon
from .refiner import LabelSet, StyleProfile, profile_from_decisions
from .syntactic import RuleMapping, SyntacticVector, map_to_style_vector
from .treebank import ParseTree, count_productions

COMPONENTS = ("lexical", "pragmatic", "syntactic")


@dataclass(frozen=True)
class StructuredStyleVector:
    character: str
    lexicon: TfPmiLexicon
    syntactic: SyntacticVector
    pragmatic: StyleProfile

    @property
    def empty(self) -> bool:
        return self.lexicon.empty and self.pragmatic.empty and self.syntactic.empty

    def to_dict(self) -> dict:
        return {
            "character": self.character,
            "lexical": {
                "capacity": self.lexicon.capacity,
                "entries": [
                    {"token": e.token, "count": e.count_in_style, "pmi": e.pmi, "score": e.score}
                    for e in self.lexicon.entries
                ],
            },
            "syntactic": {
                "dimensions": list(self.syntactic.dimension_names),
                "values": [float(v) for v in self.syntactic.values],
                "empty": self.syntactic.empty,
            },
            "pragmatic": {
                "top_k": self.pragmatic.top_k,
                "activations": [[k, v] for k, v in self.pragmatic.activations.items()],
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "StructuredStyleVector":
        char = d["character"]
        lex = d["lexical"]
        lexicon = TfPmiLexicon(
            char,
            [TfPmiEntry(e["token"], e["count"], e["pmi"], e["score"]) for e in lex["entries"]],
            lex["capacity"],
        )
        syn = d["syntactic"]
        syntactic = SyntacticVector(tuple(syn["dimensions"]), np.array(syn["values"], dtype=np.float64),
                                    syn["empty"])
        prag = d["pragmatic"]
        pragmatic = StyleProfile(char, {k: v for k, v in prag["activations"]}, prag["top_k"])
        return cls(char, lexicon, syntactic, pragmatic)

    @classmethod
    def from_json(cls, text: str) -> "StructuredStyleVector":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, StructuredStyleVector):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def assemble(lexicon: TfPmiLexicon, syntactic: SyntacticVector, pragmatic: StyleProfile,
             character: str | None = None) -> StructuredStyleVector:
    """Bundle the three components; they must all describe the same character.

    The syntactic vector carries no character name, so ``character`` defaults
    to the lexicon's.
    """
    character = lexicon.character if character is None else character
    names = {lexicon.character, pragmatic.character, character}
    if len(names) != 1:
        raise StyleError(f"character mismatch across components: {sorted(names)}")
    return StructuredStyleVector(character, lexicon, syntactic, pragmatic)


# -- similarity ------------------------------------------------------------------------


def cosine(a, b) -> float:
    """Cosine similarity; NaN when either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise StyleError(f"vector shapes differ: {a.shape} vs {b.shape}")
    pa, pb = float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0))
    if pa == 0.0 or pb == 0.0:
        return math.nan
    # max-abs rescaling avoids underflow; sqrt(aa * bb) keeps self-cosine at exactly 1
    a, b = a / pa, b / pb
    aa, bb = float(a @ a), float(b @ b)
    return min(1.0, max(-1.0, float(a @ b) / math.sqrt(aa * bb)))


def centroid_of(keys: Sequence[str], embeddings: EmbeddingTable) -> np.ndarray:
    """Mean embedding of ``keys`` (summed in sorted key order, so order-independent)."""
    keys = sorted(keys)
    missing = [k for k in keys if k not in embeddings]
    if missing:
        raise StyleError(f"keys missing from embedding table: {', '.join(missing)}")
    if not keys:
        return np.zeros(embeddings.dimension)
    return np.mean(embeddings.matrix(keys), axis=0)


@dataclass(frozen=True)
class SimilarityBreakdown:
    lexical_sim: float
    pragmatic_sim: float
    syntactic_sim: float
    composite: float
    flagged: tuple[str, ...] = ()


def composite_similarity(sample: StructuredStyleVector, reference: StructuredStyleVector,
                         embeddings: EmbeddingTable,
                         weights: Mapping[str, float] | None = None) -> SimilarityBreakdown:
    """Component-wise cosines and their (weighted) mean.

    Lexical and pragmatic components are compared through the centroid of
    their token / label embeddings; the syntactic vectors are compared
    directly. A component with a zero-norm side is flagged, reported as NaN
    and left out of the composite.
    """
    if sample.syntactic.dimension_names != reference.syntactic.dimension_names:
        raise StyleError("syntactic vectors use different dimensions")
    weights = dict(weights or {c: 1.0 for c in COMPONENTS})
    sims = {
        "lexical": cosine(centroid_of(sample.lexicon.tokens, embeddings),
                          centroid_of(reference.lexicon.tokens, embeddings)),
        "pragmatic": cosine(centroid_of(sample.pragmatic.labels, embeddings),
                            centroid_of(reference.pragmatic.labels, embeddings)),
        "syntactic": cosine(sample.syntactic.values, reference.syntactic.values),
    }
    flagged = tuple(c for c in COMPONENTS if math.isnan(sims[c]))
    used = [c for c in COMPONENTS if c not in flagged and weights.get(c, 0.0) > 0]
    if used:
        wsum = sum(weights[c] for c in used)
        composite = sum(weights[c] * sims[c] for c in used) / wsum
    else:
        composite = math.nan
    return SimilarityBreakdown(sims["lexical"], sims["pragmatic"], sims["syntactic"],
                               composite, flagged)


# -- N-shot stability ---------------------------------------------------------------


@dataclass
class StyleExtractor:
    """Everything needed to extract a full style vector from any utterance subset.

    ``trees`` and ``decisions`` are keyed by utterance id; ``decisions`` are the
    refiner's thresholded multi-hot outputs, computed once for the whole corpus.
    """

    global_dist: UnigramDistribution
    mapping: RuleMapping
    trees: Mapping[str, ParseTree]
    decisions: Mapping[str, np.ndarray]
    labels: LabelSet
    max_global_prob: float = 0.10
    min_style_prob: float = 0.0001
    capacity: int = 25
    top_k: int = 5

    def extract(self, corpus: Corpus) -> StructuredStyleVector:
        ids = [u.id for u in corpus.utterances]
        missing = [i for i in ids if i not in self.trees or i not in self.decisions]
        if missing:
            raise StyleError(f"no tree or refiner output for utterances: {', '.join(missing[:10])}")
        lexicon = build_lexicon(corpus, self.global_dist, self.max_global_prob,
                                self.min_style_prob, self.capacity)
        table = count_productions(self.trees[i] for i in ids)
        syntactic = map_to_style_vector(table, self.mapping)
        decisions = np.stack([self.decisions[i] for i in ids]) if ids else np.zeros((0, len(self.labels)))
        profile = profile_from_decisions(decisions, self.labels, corpus.character, self.top_k)
        return StructuredStyleVector(corpus.character, lexicon, syntactic, profile)


@dataclass
class StabilityCurve:
    points: list[tuple[int, SimilarityBreakdown]] = field(default_factory=list)
    convergence_n: int | None = None

    def to_csv(self) -> str:
        lines = ["N,lexical,pragmatic,syntactic,composite"]
        for n, b in self.points:
            lines.append(f"{n},{b.lexical_sim:.6f},{b.pragmatic_sim:.6f},"
                         f"{b.syntactic_sim:.6f},{b.composite:.6f}")
        return "\n".join(lines) + "\n"


def nshot_stability(extractor: StyleExtractor, corpus: Corpus, sizes: Sequence[int],
                    reference: StructuredStyleVector, embeddings: EmbeddingTable,
                    seed: int = 0, trials: int = 5, weights: Mapping[str, float] | None = None,
                    delta: float = 0.005, replace: bool = False) -> StabilityCurve:
    """Similarity of style vectors extracted from N-utterance samples to ``reference``.

    Each N is sampled ``trials`` times (seeded per (N, trial)); the component
    similarities are averaged over trials. ``convergence_n`` is the smallest N
    whose composite lies within ``delta`` of the composite at the largest N.
    """
    sizes = list(sizes)
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise StyleError("sample sizes must be non-empty and strictly increasing")
    if trials < 1:
        raise StyleError("trials must be at least 1")
    if sizes[0] < 1 or (not replace and sizes[-1] > len(corpus)):
        raise StyleError(f"sample size {sizes[-1]} exceeds corpus size {len(corpus)}")
    curve = StabilityCurve()
    for n in sizes:
        rows = []
        for t in range(trials):
            rng = np.random.default_rng([seed, n, t])
            idx = rng.choice(len(corpus), size=n, replace=replace)
            sample = corpus.subset(corpus.utterances[i] for i in np.sort(idx))
            b = composite_similarity(extractor.extract(sample), reference, embeddings, weights)
            rows.append((b.lexical_sim, b.pragmatic_sim, b.syntactic_sim, b.composite))
        mean = np.mean(np.array(rows), axis=0)
        flagged = tuple(c for c, v in zip(COMPONENTS, mean[:3]) if math.isnan(v))
        curve.points.append((n, SimilarityBreakdown(*map(float, mean), flagged)))
    final = curve.points[-1][1].composite
    for n, b in curve.points:
        if abs(b.composite - final) <= delta:
            curve.convergence_n = n
            break
    return curve
