"""Config-driven wiring of the extraction modules, shared by the CLI and demos.

A config is one JSON document. Relative paths resolve against the config
file's directory. Any string entry of ``paths`` can be overridden through an
environment variable ``CHARSTYLE_PATH_<KEY>`` (for the per-character
``treebanks`` map: ``CHARSTYLE_PATH_TREEBANKS_<CHARACTER>``).
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import corpus_io, lexical, refiner, syntactic, treebank
from .corpus_io import Corpus, EmbeddingTable
from .errors import StyleError
from .style_vector import StructuredStyleVector, StyleExtractor, assemble

BASELINE = "__baseline__"

DEFAULTS = {
    "seed": 0,
    "characters": [],
    "paths": {},
    "lexicon": {
        "max_global_prob": 0.10,
        "min_style_prob": 0.0001,
        "capacity": 25,
        "drop_punctuation": True,
        "balance_ratios": {},
        "balance_before_filter": False,
    },
    "syntax": {"top_k": 15, "include_lexical": False},
    "refiner": {
        "hidden_width": 256,
        "learning_rate": 0.001,
        "max_epochs": 200,
        "patience": 10,
        "batch_size": 64,
        "val_fraction": 0.15,
        "use_prototypes": True,
        "min_count": 23,
        "centroid_threshold": 0.5,
    },
    "profile": {"top_k": 5},
    "stability": {"sizes": [5, 10, 25], "trials": 5, "delta": 0.005, "weights": None},
    "dataset": {"targets": {}, "label_filter": None, "mask": []},
    "eval": {"tau": 0.75, "taus": [0.70, 0.75, 0.80], "h_kind": "harmonic",
             "high_fidelity_floor": 0.75},
}


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "paths":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class PipelineConfig:
    data: dict
    root: Path

    @classmethod
    def load(cls, path, env=None) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config not found: {path}")
        try:
            raw = json.loads(path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise StyleError(f"{path}: invalid JSON ({exc})") from None
        cfg = cls(_merge(DEFAULTS, raw), path.resolve().parent)
        cfg.apply_env(os.environ if env is None else env)
        if not cfg.data["characters"]:
            raise StyleError("config lists no characters")
        return cfg

    def apply_env(self, env) -> None:
        paths = self.data["paths"]
        for key, value in list(paths.items()):
            if isinstance(value, dict):
                for char in value:
                    name = f"CHARSTYLE_PATH_{key.upper()}_{char.upper()}"
                    if name in env:
                        value[char] = env[name]
            else:
                name = f"CHARSTYLE_PATH_{key.upper()}"
                if name in env:
                    paths[key] = env[name]

    def validate(self) -> None:
        """Check that every configured path exists.

        Raises:
            FileNotFoundError: naming the first missing entry, e.g.
                ``corpus not found: /data/c.tsv``.
        """
        for key, value in sorted(self.data["paths"].items()):
            chars = sorted(value) if isinstance(value, dict) else [None]
            for char in chars:
                p = self.path(key, char, required=False)
                if p is not None and not p.exists():
                    what = f"{key}[{char}]" if char else key
                    raise FileNotFoundError(f"{what} not found: {p}")

    def __getitem__(self, key):
        return self.data[key]

    def path(self, key, char=None, required=True) -> Path | None:
        value = self.data["paths"].get(key)
        if isinstance(value, dict):
            value = value.get(char)
        if value is None:
            if required:
                what = f"{key}[{char}]" if char else key
                raise StyleError(f"config has no path for {what}")
            return None
        p = Path(value)
        return p if p.is_absolute() else self.root / p

    @property
    def characters(self) -> list[str]:
        return list(self.data["characters"])

    @property
    def seed(self) -> int:
        return int(self.data["seed"])


@dataclass
class Pipeline:
    config: PipelineConfig
    _cache: dict = field(default_factory=dict)

    # -- corpora and lexicon ---------------------------------------------------------

    @cached_property
    def raw_corpora(self) -> dict[str, Corpus]:
        path = self.config.path("corpus")
        return {c: corpus_io.load_corpus(path, c) for c in self.config.characters}

    @cached_property
    def corpora(self) -> dict[str, Corpus]:
        """Filtered and balanced corpora (filtering first unless configured otherwise)."""
        opts = self.config["lexicon"]
        stop_path = self.config.path("stopwords", required=False)
        stop = corpus_io.load_stopwords(stop_path) if stop_path else None
        punct_path = self.config.path("punctuation", required=False)
        punct = corpus_io.load_punctuation(punct_path) if punct_path else None
        chars = self.config.characters

        def filt(cs):
            return [corpus_io.filter_tokens(c, stop, opts["drop_punctuation"], punct)[0] for c in cs]

        def bal(cs):
            ratios = [float(opts["balance_ratios"].get(ch, 1.0)) for ch in chars]
            return corpus_io.balance_corpora(cs, ratios, seed=self.config.seed)

        cs = [self.raw_corpora[c] for c in chars]
        cs = filt(bal(cs)) if opts["balance_before_filter"] else bal(filt(cs))
        return dict(zip(chars, cs))

    @cached_property
    def global_dist(self) -> lexical.UnigramDistribution:
        return lexical.global_distribution(list(self.corpora.values()))

    def lexicon(self, char: str, capacity: int | None = None) -> lexical.TfPmiLexicon:
        opts = self.config["lexicon"]
        return lexical.build_lexicon(self.corpora[char], self.global_dist, opts["max_global_prob"],
                                     opts["min_style_prob"], capacity or opts["capacity"])

    # -- syntax -------------------------------------------------------------------------

    @cached_property
    def mapping(self) -> syntactic.RuleMapping:
        return syntactic.load_mapping(self.config.path("mapping", required=False))

    def treebank_for(self, name: str) -> list[tuple[str | None, treebank.ParseTree]]:
        """Trees for a character, or the baseline treebank for :data:`BASELINE`."""
        key = ("trees", name)
        if key not in self._cache:
            if name == BASELINE:
                path = self.config.path("baseline_treebank")
            else:
                path = self.config.path("treebanks", name)
            self._cache[key] = treebank.read_treebank(path)
        return self._cache[key]

    def production_table(self, name: str) -> treebank.ProductionTable:
        incl = self.config["syntax"]["include_lexical"]
        return treebank.count_productions((t for _, t in self.treebank_for(name)), incl)

    def trees_by_id(self, char: str) -> dict[str, treebank.ParseTree]:
        entries = self.treebank_for(char)
        if all(uid is not None for uid, _ in entries):
            return {uid: t for uid, t in entries}
        ids = [u.id for u in self.raw_corpora[char].utterances]
        if len(ids) != len(entries):
            raise StyleError(f"treebank for {char!r} has {len(entries)} trees but the corpus has "
                             f"{len(ids)} utterances; add ids to align them")
        return {uid: t for uid, (_, t) in zip(ids, entries)}

    def syntactic_vector(self, char: str) -> syntactic.SyntacticVector:
        return syntactic.map_to_style_vector(self.production_table(char), self.mapping)

    # -- refiner --------------------------------------------------------------------------

    @cached_property
    def labels(self) -> refiner.LabelSet:
        return refiner.default_labels()

    @cached_property
    def utterance_embeddings(self) -> EmbeddingTable:
        return corpus_io.load_embeddings(self.config.path("utterance_embeddings"))

    @cached_property
    def context_embeddings(self) -> EmbeddingTable | None:
        p = self.config.path("context_embeddings", required=False)
        return corpus_io.load_embeddings(p) if p else None

    @cached_property
    def label_centroids(self) -> EmbeddingTable:
        return corpus_io.load_embeddings(self.config.path("label_centroids"))

    def example(self, uid: str, context_id: str | None, gold=None) -> refiner.RefinerExample:
        if uid not in self.utterance_embeddings:
            raise StyleError(f"no utterance embedding for {uid!r}")
        ctx = None
        if context_id and self.context_embeddings is not None and context_id in self.context_embeddings:
            ctx = self.context_embeddings[context_id]
        return refiner.make_example(self.utterance_embeddings[uid], self.label_centroids,
                                    self.labels, ctx, gold, uid)

    def gold_examples(self) -> list[refiner.RefinerExample]:
        """``id<TAB>label,label[<TAB>context_id]`` records from the gold file."""
        path = self.config.path("refiner_gold")
        if not path.exists():
            raise FileNotFoundError(f"gold label file not found: {path}")
        out = []
        for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise StyleError(f"{path}: line {lineno}: expected 'id<TAB>labels[<TAB>context]'")
            labels = [x for x in parts[1].split(",") if x]
            if not labels:
                raise StyleError(f"{path}: line {lineno}: no gold labels")
            out.append(self.example(parts[0], parts[2] if len(parts) == 3 else None, labels))
        return out

    def refiner_config(self) -> refiner.RefinerConfig:
        opts = self.config["refiner"]
        return refiner.RefinerConfig(
            hidden_width=opts["hidden_width"], learning_rate=opts["learning_rate"],
            max_epochs=opts["max_epochs"], patience=opts["patience"],
            batch_size=opts["batch_size"], seed=self.config.seed,
            val_fraction=opts["val_fraction"], use_prototypes=opts["use_prototypes"])

    def corpus_decisions(self, char: str, model: refiner.RefinerModel,
                         thresholds: np.ndarray) -> dict[str, np.ndarray]:
        corpus = self.raw_corpora[char]
        feats = refiner.stack_features([self.example(u.id, u.context_id) for u in corpus.utterances])
        _, dec = refiner.predict(model, feats, thresholds)
        return {u.id: row for u, row in zip(corpus.utterances, dec)}

    def profile(self, char: str, model, thresholds) -> refiner.StyleProfile:
        dec = self.corpus_decisions(char, model, thresholds)
        ids = [u.id for u in self.corpora[char].utterances]
        rows = np.stack([dec[i] for i in ids])
        return refiner.profile_from_decisions(rows, self.labels, char,
                                              self.config["profile"]["top_k"])

    # -- assembly -------------------------------------------------------------------------

    def style_vector(self, char: str, model, thresholds) -> StructuredStyleVector:
        return assemble(self.lexicon(char), self.syntactic_vector(char),
                        self.profile(char, model, thresholds), char)

    def extractor(self, char: str, model, thresholds) -> StyleExtractor:
        opts = self.config["lexicon"]
        return StyleExtractor(
            global_dist=self.global_dist, mapping=self.mapping, trees=self.trees_by_id(char),
            decisions=self.corpus_decisions(char, model, thresholds), labels=self.labels,
            max_global_prob=opts["max_global_prob"], min_style_prob=opts["min_style_prob"],
            capacity=opts["capacity"], top_k=self.config["profile"]["top_k"])

    @cached_property
    def embeddings(self) -> EmbeddingTable:
        return corpus_io.load_embeddings(self.config.path("embeddings"))
