"""Loading, filtering and balancing of pre-tokenized style corpora.

Corpus files hold one utterance per line, tab separated::

    id <TAB> character [<TAB> context_id] <TAB> tok1 tok2 tok3 ...

Tokens arrive already segmented; nothing here tokenizes raw text.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CorpusError


@dataclass(frozen=True)
class Utterance:
    id: str
    tokens: tuple[str, ...]
    character: str
    context_id: str | None = None


@dataclass(frozen=True)
class Corpus:
    character: str
    utterances: tuple[Utterance, ...]
    token_count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        object.__setattr__(
            self, "token_count", sum(len(u.tokens) for u in self.utterances)
        )

    def __len__(self):
        return len(self.utterances)

    def tokens(self):
        for u in self.utterances:
            yield from u.tokens

    def subset(self, utterances: Iterable[Utterance]) -> "Corpus":
        return Corpus(self.character, tuple(utterances))


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]

    def __contains__(self, token):
        return token in self.words


@dataclass
class EmbeddingTable:
    dimension: int
    entries: dict[str, np.ndarray]

    def __post_init__(self):
        if self.dimension <= 0:
            raise CorpusError("embedding dimension must be positive")
        for key, vec in self.entries.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (self.dimension,):
                raise CorpusError(
                    f"embedding {key!r} has length {vec.size}, expected {self.dimension}"
                )
            if not np.all(np.isfinite(vec)):
                raise CorpusError(f"embedding {key!r} has non-finite values")
            self.entries[key] = vec

    def __contains__(self, key):
        return key in self.entries

    def __getitem__(self, key) -> np.ndarray:
        return self.entries[key]

    def matrix(self, keys: Sequence[str]) -> np.ndarray:
        missing = [k for k in keys if k not in self.entries]
        if missing:
            raise KeyError(f"keys missing from embedding table: {', '.join(missing)}")
        if not keys:
            return np.zeros((0, self.dimension))
        return np.stack([self.entries[k] for k in keys])


class FilterReport(NamedTuple):
    removed_tokens: int
    dropped_utterances: tuple[str, ...]


# -- readers / writers -------------------------------------------------------


def _read_lines(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def parse_corpus_lines(lines: Iterable[str], character: str | None = None,
                       source: str = "<corpus>") -> Corpus:
    utterances = []
    seen: dict[str, int] = {}
    duplicates = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) == 3:
            uid, char, tok_field = fields
            ctx = None
        elif len(fields) == 4:
            uid, char, ctx, tok_field = fields
            ctx = ctx or None
        else:
            raise CorpusError(
                f"{source}: line {lineno}: expected 3 or 4 tab-separated fields, "
                f"got {len(fields)}"
            )
        tokens = tuple(t for t in tok_field.split(" ") if t)
        if not uid or not char or not tokens:
            raise CorpusError(f"{source}: line {lineno}: empty id, character or tokens")
        if character is not None and char != character:
            continue
        if uid in seen:
            duplicates.append(uid)
            continue
        seen[uid] = lineno
        utterances.append(Utterance(uid, tokens, char, ctx))
    if duplicates:
        raise CorpusError(f"{source}: duplicate utterance id(s): {', '.join(duplicates)}")
    if not utterances:
        raise CorpusError(f"{source}: empty corpus")
    name = character if character is not None else utterances[0].character
    return Corpus(name, tuple(utterances))


def load_corpus(path, character: str | None = None) -> Corpus:
    """Read a corpus file.

    Args:
        path: corpus file in the tab-separated format described in the module
            docstring.
        character: keep only records for this character. ``None`` keeps all
            records and names the corpus after the first one.

    Raises:
        FileNotFoundError: the file does not exist.
        CorpusError: malformed line (the message names the line number),
            duplicate ids, or no records left.
    """
    return parse_corpus_lines(_read_lines(path), character, source=str(path))


def format_corpus(corpus: Corpus) -> str:
    out = []
    for u in corpus.utterances:
        out.append("\t".join([u.id, u.character, u.context_id or "", " ".join(u.tokens)]))
    return "\n".join(out) + "\n"


def write_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(format_corpus(corpus), encoding="utf-8")


def load_stopwords(path) -> StopwordList:
    words = {w.strip() for w in _read_lines(path)}
    words.discard("")
    return StopwordList(frozenset(words))


def load_punctuation(path) -> frozenset[str]:
    """One punctuation character (or token) per line."""
    chars = set()
    for line in _read_lines(path):
        chars.update(line.strip())
    return frozenset(chars)


def load_embeddings(path) -> EmbeddingTable:
    """Read ``key<TAB>v1 v2 ... vD`` records (any whitespace after the key)."""
    entries = {}
    dim = None
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        if "\t" in line:
            key, rest = line.split("\t", 1)
        else:
            key, _, rest = line.partition(" ")
        try:
            vec = np.array([float(x) for x in rest.split()], dtype=np.float64)
        except ValueError as exc:
            raise CorpusError(f"{path}: line {lineno}: {exc}") from None
        if dim is None:
            dim = vec.size
        if vec.size != dim or dim == 0:
            raise CorpusError(f"{path}: line {lineno}: expected {dim} values, got {vec.size}")
        if key in entries:
            raise CorpusError(f"{path}: line {lineno}: duplicate key {key!r}")
        entries[key] = vec
    if dim is None:
        raise CorpusError(f"{path}: empty embedding table")
    return EmbeddingTable(dim, entries)


def write_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, vec in table.entries.items():
            fh.write(key + "\t" + " ".join(repr(float(x)) for x in vec) + "\n")


# -- transforms --------------------------------------------------------------


def is_punctuation(token: str, punctuation: frozenset[str] | None = None) -> bool:
    if punctuation is not None:
        return all(ch in punctuation for ch in token)
    return all(unicodedata.category(ch).startswith("P") for ch in token)


def filter_tokens(corpus: Corpus, stopwords: StopwordList | None = None,
                  drop_punctuation: bool = True,
                  punctuation: frozenset[str] | None = None) -> tuple[Corpus, FilterReport]:
    """Remove stopwords and (optionally) pure-punctuation tokens.

    Utterances left without tokens are dropped; their ids come back in the
    report. Without a ``punctuation`` set, a token counts as punctuation when
    every code point has a Unicode ``P*`` category.
    """
    stop = stopwords.words if stopwords is not None else frozenset()
    kept = []
    dropped = []
    removed = 0
    for u in corpus.utterances:
        toks = tuple(
            t for t in u.tokens
            if t not in stop and not (drop_punctuation and is_punctuation(t, punctuation))
        )
        removed += len(u.tokens) - len(toks)
        if toks:
            kept.append(u if len(toks) == len(u.tokens) else
                        Utterance(u.id, toks, u.character, u.context_id))
        else:
            dropped.append(u.id)
    return corpus.subset(kept), FilterReport(removed, tuple(dropped))


def _downsample(corpus: Corpus, target: int, rng: np.random.Generator) -> Corpus:
    if corpus.token_count <= target:
        return corpus
    order = rng.permutation(len(corpus))
    chosen = np.zeros(len(corpus), dtype=bool)
    total = 0
    for i in order:
        n = len(corpus.utterances[i].tokens)
        if total + n <= target:
            chosen[i] = True
            total += n
            if total == target:
                break
    return corpus.subset(u for u, keep in zip(corpus.utterances, chosen) if keep)


def balance_corpora(corpora: Sequence[Corpus], ratios: Sequence[float], seed: int = 0,
                    unit_tokens: float | None = None) -> list[Corpus]:
    """Down-sample corpora so their token counts follow ``ratios``.

    The ratio unit defaults to the largest value every corpus can afford
    (``min(tokens_i / ratio_i)``), so the limiting corpus is kept whole. An
    explicit ``unit_tokens`` asks for ``ratio_i * unit_tokens`` tokens from each
    corpus and fails for corpora that are too small.

    Utterances are drawn uniformly without replacement; a drawn utterance that
    would overshoot the target is skipped, so each realized count lands within
    one utterance's length below its target. Kept utterances stay in their
    original order. Corpora are never up-sampled.
    """
    if len(ratios) != len(corpora):
        raise CorpusError(f"got {len(ratios)} ratios for {len(corpora)} corpora")
    if any(r <= 0 for r in ratios):
        raise CorpusError("balance ratios must be positive")
    if unit_tokens is None:
        unit_tokens = min(c.token_count / r for c, r in zip(corpora, ratios))
    out = []
    for i, (corpus, ratio) in enumerate(zip(corpora, ratios)):
        target = int(round(ratio * unit_tokens))
        if corpus.token_count < target:
            raise CorpusError(
                f"corpus {corpus.character!r} has {corpus.token_count} tokens, "
                f"needs {target} for ratio {ratio}"
            )
        rng = np.random.default_rng([seed, i])
        out.append(_downsample(corpus, target, rng))
    return out
