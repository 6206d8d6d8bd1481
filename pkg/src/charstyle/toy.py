"""Deterministic synthetic workspace: two characters, trees, embeddings, labels.

Everything here is generated from a seed so the end-to-end pipeline can run
without external data. The utterance embedding space is built from one
orthonormal direction per style label, which makes the refiner task linearly
separable by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus_io import EmbeddingTable, write_embeddings
from .refiner import LabelSet, default_labels

# -- synthetic refiner data ------------------------------------------------------------


@dataclass
class SyntheticRefinerData:
    utterances: np.ndarray
    contexts: np.ndarray
    gold: np.ndarray
    directions: np.ndarray

    def centroids(self, labels: LabelSet) -> EmbeddingTable:
        return EmbeddingTable(self.directions.shape[1],
                              {lab: self.directions[i] for i, lab in enumerate(labels.labels)})


def label_directions(n_labels: int, dim: int, seed: int) -> np.ndarray:
    """``n_labels`` orthonormal rows in ``dim`` dimensions."""
    if dim < n_labels:
        raise ValueError("dim must be at least n_labels for orthonormal directions")
    q, _ = np.linalg.qr(np.random.default_rng([seed, 7]).standard_normal((dim, n_labels)))
    return q.T.copy()


def synthetic_refiner_data(n: int, n_labels: int = 50, dim: int = 64, seed: int = 0,
                           noise: float = 0.05, max_active: int = 3) -> SyntheticRefinerData:
    """Examples whose embedding is the sum of their active label directions plus noise."""
    rng = np.random.default_rng(seed)
    dirs = label_directions(n_labels, dim, seed)
    gold = np.zeros((n, n_labels), dtype=np.int8)
    for i in range(n):
        k = rng.integers(1, max_active + 1)
        gold[i, rng.choice(n_labels, size=k, replace=False)] = 1
    utt = gold @ dirs + noise * rng.standard_normal((n, dim))
    ctx = 0.1 * rng.standard_normal((n, dim))
    return SyntheticRefinerData(utt, ctx, gold, dirs)


# -- toy characters -----------------------------------------------------------------------

# Each template only produces productions listed in the bundled rule mapping.
TEMPLATES = {
    "A": "(TOP (IP (NP (PN {pn})) (VP (VV {vv}) (NP (NN {nn})))))",
    "B": "(TOP (CP (IP (NP (NN {nn})) (VP (ADVP (AD {ad})) (VP (VA {va})))) (SP {sp}) (PU ！)))",
    "C": "(TOP (IP (INTJ (IJ {ij})) (PU ，) (VP (VV {vv}) (NP (NN {nn})))))",
    "D": "(TOP (IP (NP (NN {nn}) (CC 和) (NN {nn2})) (VP (VA {va}))))",
    "E": "(TOP (IP (NP (PN {pn})) (VP (VV {vv}) (NP (DNP (ADJP (JJ {jj})) (DEG 的)) (NP (NN {nn}))))))",
    "F": "(TOP (IP (VP (VV {vv}) (NP (NN {nn}))) (PU 。)))",
    "G": "(TOP (IP (ADVP (AD {ad})) (VP (VV 认为) (IP (NP (NN {nn})) (VP (VA {va}))))))",
    "H": "(TOP (CP (IP (NP (PN {pn})) (VP (VV {vv}) (NP (NN {nn})))) (SP {sp})))",
    "I": "(TOP (IP (NP (PN {pn})) (VP (PP (P 在) (NP (NN {nn}))) (VP (VV {vv})))))",
    "J": "(TOP (IP (VP (VV {vv}) (NP (NN {nn}))) (SP {sp})))",
}

CHARACTERS = {
    "mika": {
        "templates": {"B": 4, "C": 3, "D": 2, "E": 2, "F": 2, "A": 1},
        "pn": ["我", "你", "沐沐"], "nn": ["猫", "鱼", "蛋糕", "布丁", "星星", "糖果"],
        "vv": ["吃", "玩", "喜欢", "抱"], "va": ["可爱", "开心", "好吃"],
        "ad": ["超级", "好", "最"], "sp": ["呀", "喵", "啦"], "ij": ["嘿嘿", "哇", "喵呜"],
        "jj": ["小", "软"],
        "persona": {"cute": 0.66, "energetic": 0.57, "playful": 0.41, "kind": 0.31, "naive": 0.22},
    },
    "sora": {
        "templates": {"G": 4, "H": 3, "I": 3, "J": 2, "A": 2, "D": 1},
        "pn": ["我", "你", "我们"], "nn": ["问题", "道理", "时间", "书", "答案", "规律"],
        "vv": ["思考", "阅读", "分析", "讨论"], "va": ["重要", "合理", "复杂"],
        "ad": ["其实", "或许", "大概", "确实"], "sp": ["吧", "呢"], "ij": ["嗯"],
        "jj": ["新"],
        "persona": {"rational": 0.7, "serious": 0.5, "curious": 0.4, "cautious": 0.3, "modest": 0.2},
    },
}

BASELINE = {
    "templates": {"A": 3, "F": 2, "H": 2, "I": 2, "D": 1},
    "pn": ["我", "他", "她"], "nn": ["工作", "天气", "城市", "朋友", "饭"],
    "vv": ["去", "看", "做", "有"], "va": ["好", "忙"], "ad": ["很"], "sp": ["了"],
    "ij": ["啊"], "jj": ["大"],
}

NEUTRALS = [
    "今天天气不错。", "我想去买点东西。", "这个问题需要再想想。", "谢谢你的帮助。",
    "明天见。", "我有点累了。", "这本书很好看。", "我们一起吃饭吧。",
]

STYLIZED = {
    "mika": ("{text}喵～", "可爱活泼，句尾加语气词"),
    "sora": ("其实，{text}", "理性克制，先给出判断"),
}

STOPWORDS = ["的", "了", "和", "在"]


def _sample_tree(rng, spec) -> str:
    names = sorted(spec["templates"])
    weights = np.array([spec["templates"][n] for n in names], dtype=np.float64)
    template = TEMPLATES[names[rng.choice(len(names), p=weights / weights.sum())]]
    slots = {}
    for key in ("pn", "nn", "vv", "va", "ad", "sp", "ij", "jj"):
        slots[key] = spec[key][rng.integers(len(spec[key]))]
    others = [w for w in spec["nn"] if w != slots["nn"]]
    slots["nn2"] = others[rng.integers(len(others))]
    return template.format(**slots)


def _leaves(tree: str) -> list[str]:
    return [part.rstrip(")") for part in tree.split() if not part.startswith("(")]


def write_toy_workspace(root, seed: int = 0, n_utterances: int = 50, n_gold: int = 1000,
                        dim: int = 64) -> Path:
    """Write a self-contained workspace under ``root`` and return its config path."""
    root = Path(root)
    (root / "trees").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng([seed, 101])
    labels = default_labels()
    dirs = label_directions(len(labels), dim, seed)

    corpus_lines, utt_emb, ctx_emb, vocab = [], {}, {}, set()
    for ci, (char, spec) in enumerate(CHARACTERS.items()):
        tree_lines = []
        persona = {labels.index(k): p for k, p in spec["persona"].items()}
        for i in range(n_utterances):
            uid = f"{char[0]}{i + 1:03d}"
            tree = _sample_tree(rng, spec)
            tokens = _leaves(tree)
            vocab.update(tokens)
            ctx = f"ctx-{uid}" if i % 2 else ""
            corpus_lines.append("\t".join([uid, char, ctx, " ".join(tokens)]))
            tree_lines.append(f"{uid}\t{tree}")
            active = [j for j, p in persona.items() if rng.random() < p] or [min(persona)]
            utt_emb[uid] = dirs[active].sum(axis=0) + 0.05 * rng.standard_normal(dim)
            if ctx:
                ctx_emb[ctx] = 0.1 * rng.standard_normal(dim)
        (root / "trees" / f"{char}.trees").write_text("\n".join(tree_lines) + "\n", "utf-8")
    (root / "corpus.tsv").write_text("\n".join(corpus_lines) + "\n", "utf-8")

    base_lines = [_sample_tree(rng, BASELINE) for _ in range(2 * n_utterances)]
    (root / "trees" / "baseline.trees").write_text("\n".join(base_lines) + "\n", "utf-8")

    data = synthetic_refiner_data(n_gold, len(labels), dim, seed)
    gold_lines = []
    for i in range(n_gold):
        gid, cid = f"g{i:04d}", f"ctx-g{i:04d}"
        utt_emb[gid] = data.utterances[i]
        ctx_emb[cid] = data.contexts[i]
        gold_lines.append(f"{gid}\t{','.join(labels.names(data.gold[i]))}\t{cid}")
    (root / "gold.tsv").write_text("\n".join(gold_lines) + "\n", "utf-8")

    write_embeddings(EmbeddingTable(dim, utt_emb), root / "utterance_embeddings.tsv")
    write_embeddings(EmbeddingTable(dim, ctx_emb), root / "context_embeddings.tsv")
    write_embeddings(data.centroids(labels), root / "label_centroids.tsv")

    erng = np.random.default_rng([seed, 202])
    keys = sorted(vocab) + list(labels.labels)
    write_embeddings(EmbeddingTable(16, {k: erng.standard_normal(16) for k in keys}),
                     root / "embeddings.tsv")
    (root / "stopwords.txt").write_text("\n".join(STOPWORDS) + "\n", "utf-8")

    neutral_lines, stylized_lines = [], []
    counts = {"mika": 20, "sora": 16}
    k = 0
    for char, n in counts.items():
        fmt, cot = STYLIZED[char]
        persona = list(CHARACTERS[char]["persona"])
        for i in range(n):
            pid = f"p{k:03d}"
            text = NEUTRALS[k % len(NEUTRALS)]
            neutral_lines.append(f"{pid}\t{text}")
            chosen = persona[: 1 + i % 3]
            stylized_lines.append("\t".join([pid, char, fmt.format(text=text), cot, ",".join(chosen)]))
            k += 1
    neutral_lines.append(f"p{k:03d}\t{NEUTRALS[0]}")
    (root / "neutral.tsv").write_text("\n".join(neutral_lines) + "\n", "utf-8")
    (root / "stylized.tsv").write_text("\n".join(stylized_lines) + "\n", "utf-8")

    srng = np.random.default_rng([seed, 303])
    score_lines = ["id,model,semantic,style_raw"]
    for model, sem_mu, sty_mu in (("prompted", 0.86, 0.62), ("finetuned", 0.78, 0.85),
                                  ("copy", 0.97, 0.40)):
        for i in range(40):
            sem = float(np.clip(srng.normal(sem_mu, 0.06), 0, 1))
            sty = float(np.clip(srng.normal(sty_mu, 0.06), 0, 1))
            score_lines.append(f"{model}-{i:02d},{model},{sem:.4f},{sty:.4f}")
    (root / "scores.csv").write_text("\n".join(score_lines) + "\n", "utf-8")

    config = {
        "seed": seed,
        "characters": list(CHARACTERS),
        "paths": {
            "corpus": "corpus.tsv",
            "treebanks": {c: f"trees/{c}.trees" for c in CHARACTERS},
            "baseline_treebank": "trees/baseline.trees",
            "stopwords": "stopwords.txt",
            "embeddings": "embeddings.tsv",
            "utterance_embeddings": "utterance_embeddings.tsv",
            "context_embeddings": "context_embeddings.tsv",
            "label_centroids": "label_centroids.tsv",
            "refiner_gold": "gold.tsv",
            "neutrals": "neutral.tsv",
            "stylized": "stylized.tsv",
            "scored_samples": "scores.csv",
        },
        "stability": {"sizes": [5, 10, 20, 30], "trials": 3},
        "dataset": {"targets": {"mika": 30, "sora": 20}},
    }
    path = root / "config.json"
    path.write_text(json.dumps(config, ensure_ascii=False, indent=2) + "\n", "utf-8")
    return path
