"""TF-PMI lexical style scores and the per-character keyword lexicon.

PMI is measured in bits against a pooled global unigram distribution, and the
term-frequency factor uses the natural log of the in-style count::

    pmi(w, t)   = log2(P(w|t) / P(w))
    score(w, t) = (1 + ln count_t(w)) * pmi(w, t)

Probabilities are raw maximum-likelihood estimates; there is no smoothing.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus_io import Corpus
from .errors import StyleError


@dataclass(frozen=True)
class UnigramDistribution:
    counts: Counter

    def __post_init__(self):
        if not isinstance(self.counts, Counter):
            object.__setattr__(self, "counts", Counter(self.counts))
        if any(c < 0 for c in self.counts.values()):
            raise StyleError("unigram counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def count(self, token: str) -> int:
        return self.counts.get(token, 0)

    def probability(self, token: str) -> float:
        return self.count(token) / self.total

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "UnigramDistribution":
        return cls(Counter(tokens))

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "UnigramDistribution":
        return cls.from_tokens(corpus.tokens())


@dataclass(frozen=True)
class TfPmiEntry:
    token: str
    count_in_style: int
    pmi: float
    score: float


@dataclass
class TfPmiLexicon:
    character: str
    entries: list[TfPmiEntry] = field(default_factory=list)
    capacity: int = 25

    @property
    def empty(self) -> bool:
        return not self.entries

    @property
    def tokens(self) -> list[str]:
        return [e.token for e in self.entries]

    def to_tsv(self) -> str:
        lines = ["rank\ttoken\tcount\tpmi\tscore"]
        for rank, e in enumerate(self.entries, start=1):
            lines.append(f"{rank}\t{e.token}\t{e.count_in_style}\t{e.pmi:.6f}\t{e.score:.6f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str, character: str, capacity: int = 25) -> "TfPmiLexicon":
        entries = []
        for line in text.splitlines()[1:]:
            if not line.strip():
                continue
            _, token, count, pmi_, score = line.split("\t")
            entries.append(TfPmiEntry(token, int(count), float(pmi_), float(score)))
        return cls(character, entries, capacity)


def global_distribution(corpora: Sequence[Corpus]) -> UnigramDistribution:
    """Pool unigram counts over all (already balanced) corpora."""
    counts = Counter()
    for corpus in corpora:
        counts.update(corpus.tokens())
    if not counts:
        raise StyleError("cannot build a global distribution from an empty pool")
    return UnigramDistribution(counts)


def _probabilities(token, style, global_):
    cs = style.count(token)
    if cs <= 0:
        raise StyleError(f"token {token!r} does not occur in the style distribution")
    cg = global_.count(token)
    if cg <= 0:
        raise StyleError(f"token {token!r} does not occur in the global distribution")
    return cs, cs / style.total, cg / global_.total


def pmi(token: str, style: UnigramDistribution, global_: UnigramDistribution) -> float:
    _, p_style, p_global = _probabilities(token, style, global_)
    return math.log2(p_style / p_global)


def tf_pmi_score(token: str, style: UnigramDistribution, global_: UnigramDistribution) -> float:
    value = pmi(token, style, global_)
    return (1.0 + math.log(style.count(token))) * value


def _rank_key(e: TfPmiEntry):
    return (-e.score, -e.count_in_style, e.token)


def build_lexicon(style: Corpus, global_: UnigramDistribution, max_global_prob: float = 0.10,
                  min_style_prob: float = 0.0001, capacity: int = 25) -> TfPmiLexicon:
    """Rank the style corpus vocabulary by TF-PMI and keep the top ``capacity``.

    Tokens with global probability above ``max_global_prob`` (too common) or
    in-style probability below ``min_style_prob`` (too rare) are excluded
    before ranking. Ties are broken by higher in-style count, then by token.
    An empty result is allowed; check ``lexicon.empty``.
    """
    if capacity < 1:
        raise StyleError("lexicon capacity must be positive")
    dist = UnigramDistribution.from_corpus(style)
    if dist.total == 0:
        return TfPmiLexicon(style.character, [], capacity)
    entries = []
    for token, count in dist.counts.items():
        _, p_style, p_global = _probabilities(token, dist, global_)
        if p_global > max_global_prob or p_style < min_style_prob:
            continue
        value = math.log2(p_style / p_global)
        entries.append(TfPmiEntry(token, count, value, (1.0 + math.log(count)) * value))
    entries.sort(key=_rank_key)
    return TfPmiLexicon(style.character, entries[:capacity], capacity)
