"""Style-transfer metrics: semantic/style cosines, gated style score, H-score,
threshold sensitivity and the semantic-style Pareto frontier."""

from __future__ import annotations

import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import StyleError

DEFAULT_TAU = 0.75
DEFAULT_TAUS = (0.70, 0.75, 0.80)
REPORT_HEADER = ("Model", "Semantic", "Style(Raw)", "H-Score", "Valid Style", "N")


@dataclass(frozen=True)
class ScoredSample:
    id: str
    semantic: float
    style_raw: float
    model: str = "all"

    def __post_init__(self):
        if not (math.isfinite(self.semantic) and math.isfinite(self.style_raw)):
            raise StyleError(f"sample {self.id!r} has non-finite scores")


@dataclass(frozen=True)
class ParetoPoint:
    semantic: float
    style: float
    label: str = ""


def _cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise StyleError(f"embedding dimensions differ: {a.shape} vs {b.shape}")
    pa, pb = float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0))
    if pa == 0.0 or pb == 0.0:
        raise StyleError("zero-norm embedding")
    # max-abs rescaling avoids underflow; sqrt(aa * bb) keeps self-cosine at exactly 1
    a, b = a / pa, b / pb
    aa, bb = float(a @ a), float(b @ b)
    return min(1.0, max(-1.0, float(a @ b) / math.sqrt(aa * bb)))


def semantic_score(generated_embedding, neutral_embedding) -> float:
    return _cosine(generated_embedding, neutral_embedding)


def style_score(generated_embedding, style_centroid) -> float:
    return _cosine(generated_embedding, style_centroid)


def valid_style_score(sample: ScoredSample, tau: float = DEFAULT_TAU) -> float:
    """Raw style score if semantic similarity is strictly above ``tau``, else 0."""
    return sample.style_raw if sample.semantic > tau else 0.0


def h_score(semantic: float, style_raw: float, kind: str = "harmonic") -> float:
    """Combined semantic/style score.

    ``kind`` selects the mean: ``harmonic`` (default), ``geometric`` or
    ``arithmetic``. None of them reproduces every published H value exactly,
    so reports label which one was used.
    """
    if semantic < 0 or style_raw < 0:
        raise StyleError("h_score needs non-negative inputs")
    if kind == "harmonic":
        s = semantic + style_raw
        # b / (a + b) stays in [0, 1]: no underflow, and a == b gives exactly a
        return 0.0 if s == 0 else 2.0 * semantic * (style_raw / s)
    if kind == "geometric":
        return math.sqrt(semantic * style_raw)
    if kind == "arithmetic":
        return (semantic + style_raw) / 2.0
    raise StyleError(f"unknown h_score kind {kind!r}")


def tau_sensitivity(samples: Sequence[ScoredSample], taus: Iterable[float] = DEFAULT_TAUS
                    ) -> dict[float, float]:
    """Mean per-sample gated style score for each threshold."""
    taus = list(taus)
    if not taus:
        raise StyleError("need at least one tau")
    if not samples:
        raise StyleError("no samples to evaluate")
    return {t: math.fsum(valid_style_score(s, t) for s in samples) / len(samples) for t in taus}


def format_tau_table(rows: dict[str, dict[float, float]]) -> str:
    taus = sorted({t for r in rows.values() for t in r})
    lines = ["Model," + ",".join(f"tau={t:.2f}" for t in taus)]
    for model, r in rows.items():
        lines.append(model + "," + ",".join(f"{r[t]:.3f}" for t in taus))
    return "\n".join(lines) + "\n"


def dominates(q: ParetoPoint, p: ParetoPoint) -> bool:
    return (q.semantic >= p.semantic and q.style >= p.style
            and (q.semantic > p.semantic or q.style > p.style))


def pareto_frontier(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated points (higher is better on both axes), semantic descending.

    Exact duplicates do not dominate each other, so both are kept.
    """
    keep = [p for p in points if not any(dominates(q, p) for q in points)]
    return sorted(keep, key=lambda p: (-p.semantic, -p.style, p.label))


def high_fidelity_filter(points: Sequence[ParetoPoint], floor: float = 0.75) -> list[ParetoPoint]:
    return [p for p in points if p.semantic >= floor]


@dataclass(frozen=True)
class MetricReport:
    model: str
    semantic: float
    style_raw: float
    h_score: float
    valid_style: float
    tau: float
    n: int
    h_kind: str = "harmonic"

    def row(self) -> list[str]:
        return [self.model, f"{self.semantic:.4f}", f"{self.style_raw:.4f}",
                f"{self.h_score:.4f}", f"{self.valid_style:.4f}", str(self.n)]


def aggregate_report(samples: Sequence[ScoredSample], tau: float = DEFAULT_TAU,
                     h_kind: str = "harmonic", model: str | None = None) -> MetricReport:
    """Means of the four metrics over one sample set.

    The H-score column averages per-sample H values; negative cosines are
    clipped to 0 for that column only.
    """
    if not samples:
        raise StyleError("no samples to aggregate")
    n = len(samples)
    mean = lambda xs: math.fsum(xs) / n  # noqa: E731
    return MetricReport(
        model=model if model is not None else samples[0].model,
        semantic=mean(s.semantic for s in samples),
        style_raw=mean(s.style_raw for s in samples),
        h_score=mean(h_score(max(s.semantic, 0.0), max(s.style_raw, 0.0), h_kind) for s in samples),
        valid_style=mean(valid_style_score(s, tau) for s in samples),
        tau=tau,
        n=n,
        h_kind=h_kind,
    )


def group_by_model(samples: Iterable[ScoredSample]) -> "OrderedDict[str, list[ScoredSample]]":
    groups: OrderedDict[str, list[ScoredSample]] = OrderedDict()
    for s in samples:
        groups.setdefault(s.model, []).append(s)
    return groups


def format_report(reports: Sequence[MetricReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in reports:
        w.writerow(r.row())
    if reports:
        buf.write(f"# valid style gate: semantic > {reports[0].tau}; "
                  f"H-score: per-sample {reports[0].h_kind} mean (unverified definition)\n")
    return buf.getvalue()


def format_frontier(points: Sequence[ParetoPoint]) -> str:
    front = set(id(p) for p in pareto_frontier(points))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "semantic", "style", "on_frontier"])
    for p in sorted(points, key=lambda p: (-p.semantic, -p.style, p.label)):
        w.writerow([p.label, f"{p.semantic:.4f}", f"{p.style:.4f}", int(id(p) in front)])
    return buf.getvalue()


def _read_csv(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def load_scored_samples(path) -> list[ScoredSample]:
    """CSV with columns ``id, semantic, style_raw`` and optionally ``model``."""
    rows = _read_csv(path)
    out = []
    for i, r in enumerate(rows, start=2):
        try:
            out.append(ScoredSample(r["id"], float(r["semantic"]), float(r["style_raw"]),
                                    r.get("model") or "all"))
        except (KeyError, TypeError, ValueError) as exc:
            raise StyleError(f"{path}: line {i}: bad scored sample ({exc})") from None
    return out


def load_points(path) -> list[ParetoPoint]:
    """CSV with columns ``label, semantic, style``."""
    rows = _read_csv(path)
    try:
        return [ParetoPoint(float(r["semantic"]), float(r["style"]), r["label"]) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise StyleError(f"{path}: bad point row ({exc})") from None
