"""(Neutral, Stylized) training pairs, oversampling and prompt rendering."""

from __future__ import annotations

import csv
import io
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import StyleError
from .style_vector import StructuredStyleVector

MAX_COT_CHARS = 100
DATASET_FIELDS = ("id", "character", "neutral", "stylized", "cot", "labels")


class DatasetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NeutralRecord:
    id: str
    text: str


@dataclass(frozen=True)
class StylizedRecord:
    id: str
    character: str
    text: str
    cot_trace: str | None = None
    pragmatic_labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class TrainingPair:
    id: str
    character: str
    neutral: str
    stylized: str
    cot_trace: str | None = None
    pragmatic_labels: tuple[str, ...] = ()


@dataclass
class AlignmentReport:
    unaligned_neutral: list[str] = field(default_factory=list)
    unaligned_stylized: list[str] = field(default_factory=list)


def build_pairs(neutrals: Sequence[NeutralRecord], stylized: Sequence[StylizedRecord]
                ) -> tuple[list[TrainingPair], AlignmentReport]:
    """Join neutral and stylized records on their shared id, one to one.

    Records without a partner are left out and listed in the report.

    Raises:
        StyleError: an id occurs twice on either side, which would give some
            record two partners.
    """
    for side, records in (("neutral", neutrals), ("stylized", stylized)):
        dup = [i for i, c in Counter(r.id for r in records).items() if c > 1]
        if dup:
            raise StyleError(f"duplicate {side} id(s) break the 1:1 alignment: {', '.join(sorted(dup))}")
    by_id = {r.id: r for r in neutrals}
    report = AlignmentReport()
    pairs = []
    matched = set()
    for s in stylized:
        n = by_id.get(s.id)
        if n is None:
            report.unaligned_stylized.append(s.id)
            continue
        matched.add(s.id)
        pairs.append(TrainingPair(s.id, s.character, n.text, s.text, s.cot_trace,
                                  tuple(s.pragmatic_labels)))
    report.unaligned_neutral = [r.id for r in neutrals if r.id not in matched]
    return pairs, report


@dataclass(frozen=True)
class OversamplePlan:
    targets: Mapping[str, int]

    @classmethod
    def from_rates(cls, source_counts: Mapping[str, int], rates: Mapping[str, float]) -> "OversamplePlan":
        return cls({c: int(round(n * rates.get(c, 1.0))) for c, n in source_counts.items()})


@dataclass(frozen=True)
class OversampleRow:
    character: str
    source: int
    target: int

    @property
    def rate(self) -> float:
        return self.target / self.source

    @property
    def increase_pct(self) -> float:
        return 100.0 * (self.target - self.source) / self.source


def oversample_report(source_counts: Mapping[str, int], plan: OversamplePlan) -> list[OversampleRow]:
    """Per-character rates plus a trailing ``Total`` row."""
    rows = []
    for char, n in source_counts.items():
        target = plan.targets.get(char, n)
        if target < n:
            raise StyleError(f"target {target} for {char!r} is below its source count {n}")
        rows.append(OversampleRow(char, n, target))
    rows.append(OversampleRow("Total", sum(r.source for r in rows), sum(r.target for r in rows)))
    return rows


def format_oversample_report(rows: Sequence[OversampleRow]) -> str:
    lines = ["Character\tSynthetic Pairs\tAfter Oversampling\tRate\tIncrease"]
    for r in rows:
        lines.append(f"{r.character}\t{r.source}\t{r.target}\t{r.rate:.2f}\t+{r.increase_pct:.2f}%")
    return "\n".join(lines) + "\n"


def oversample_pairs(pairs: Sequence[TrainingPair], plan: OversamplePlan, seed: int = 0,
                     label_filter: Iterable[str] | None = None) -> list[TrainingPair]:
    """Duplicate pairs until every character in ``plan`` reaches its target exactly.

    The pairs of a character are visited round-robin in a seeded shuffled
    order. With ``label_filter`` only pairs whose pragmatic labels intersect
    the filter are eligible for duplication. Copies keep the original text
    and get ids suffixed with ``~k``. Output: the input pairs in order, then the
    copies, character by character in plan order.
    """
    label_filter = set(label_filter) if label_filter is not None else None
    groups: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(pairs):
        groups[p.character].append(i)
    out = list(pairs)
    for ci, (char, target) in enumerate(plan.targets.items()):
        members = groups.get(char, [])
        if target < len(members):
            raise StyleError(f"target {target} for {char!r} is below its source count {len(members)}")
        need = target - len(members)
        if need == 0:
            continue
        eligible = [i for i in members
                    if label_filter is None or label_filter & set(pairs[i].pragmatic_labels)]
        if not eligible:
            raise StyleError(f"no eligible pairs to oversample for {char!r}")
        order = np.random.default_rng([seed, ci]).permutation(len(eligible))
        copies = Counter()
        for k in range(need):
            src = pairs[eligible[order[k % len(eligible)]]]
            copies[src.id] += 1
            out.append(replace(src, id=f"{src.id}~{copies[src.id]}"))
    return out


# -- prompt rendering -------------------------------------------------------------------

DEFAULT_TEMPLATE = (
    ("character", "Target Character: {character}"),
    ("pragmatic", "Pragmatic Styles: {pragmatic}"),
    ("lexical", "Lexical Keywords: {lexical}"),
    ("syntactic", "Syntactic Profile: {syntactic}"),
    ("neutral", "Neutral Content: {neutral}"),
)
MASKABLE = frozenset({"lexical", "syntactic", "pragmatic"})


def load_template(path) -> tuple[tuple[str, str], ...]:
    """Template file: one ``field<TAB>line format`` per line, in output order."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"template file not found: {path}")
    out = []
    for line in path.read_text("utf-8").splitlines():
        if line.strip():
            key, fmt = line.split("\t", 1)
            out.append((key.strip(), fmt))
    return tuple(out)


def render_instruction_prompt(s: StructuredStyleVector, neutral: str,
                              mask: Iterable[str] = (), template=DEFAULT_TEMPLATE,
                              syntactic_top: int = 5) -> str:
    """Instruction prompt for one rewrite; masked components drop their whole line."""
    mask = set(mask)
    if not mask <= MASKABLE:
        raise StyleError(f"cannot mask {sorted(mask - MASKABLE)}")
    values = {
        "character": s.character,
        "pragmatic": ", ".join(s.pragmatic.labels),
        "lexical": ", ".join(s.lexicon.tokens),
        "syntactic": ", ".join(f"{n}={v:.3f}" for n, v in s.syntactic.top(syntactic_top)),
        "neutral": neutral,
    }
    return "\n".join(fmt.format(**values) for key, fmt in template if key not in mask)


def render_cot_target(trace: str, stylized: str) -> str:
    """``<think>trace</think>`` followed by a newline and the stylized text."""
    n = len(trace)
    if n > MAX_COT_CHARS:
        raise StyleError(f"CoT trace too long: {n} > {MAX_COT_CHARS} characters")
    if n == 0:
        warnings.warn("empty CoT trace", DatasetWarning, stacklevel=2)
    return f"<think>{trace}</think>\n{stylized}"


# -- validation ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    id: str
    kind: str
    detail: str = ""


def validate_dataset(pairs: Sequence[TrainingPair]) -> list[Violation]:
    """Structural checks; returns every violation found instead of raising.

    Kinds: ``empty_field`` (id, character, neutral or stylized blank),
    ``duplicate_id``, ``one_to_one`` (a text field that is not a single string
    or packs several lines) and ``cot_too_long``.
    """
    out = []
    seen = set()
    for p in pairs:
        for name in ("character", "neutral", "stylized"):
            value = getattr(p, name)
            if not isinstance(value, str):
                out.append(Violation(p.id, "one_to_one", f"{name} is {type(value).__name__}"))
            elif not value.strip():
                out.append(Violation(p.id, "empty_field", name))
            elif name != "character" and ("\n" in value or "\t" in value):
                out.append(Violation(p.id, "one_to_one", f"{name} holds several records"))
        if not p.id:
            out.append(Violation(p.id, "empty_field", "id"))
        elif p.id in seen:
            out.append(Violation(p.id, "duplicate_id"))
        seen.add(p.id)
        if p.cot_trace is not None and len(p.cot_trace) > MAX_COT_CHARS:
            out.append(Violation(p.id, "cot_too_long", f"{len(p.cot_trace)} > {MAX_COT_CHARS}"))
    return out


# -- file formats ---------------------------------------------------------------------------


def format_dataset(pairs: Sequence[TrainingPair]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
    writer.writerow(DATASET_FIELDS)
    for p in pairs:
        writer.writerow([p.id, p.character, p.neutral, p.stylized, p.cot_trace or "",
                         ",".join(p.pragmatic_labels)])
    return buf.getvalue()


def parse_dataset(text: str) -> list[TrainingPair]:
    reader = csv.DictReader(io.StringIO(text), delimiter="\t")
    if tuple(reader.fieldnames or ()) != DATASET_FIELDS:
        raise StyleError(f"dataset header must be {DATASET_FIELDS}, got {reader.fieldnames}")
    return [
        TrainingPair(r["id"], r["character"], r["neutral"], r["stylized"], r["cot"] or None,
                     tuple(x for x in r["labels"].split(",") if x))
        for r in reader
    ]


def _lines(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    return [ln for ln in path.read_text("utf-8").splitlines() if ln.strip()]


def load_neutrals(path) -> list[NeutralRecord]:
    """``id<TAB>text`` per line."""
    out = []
    for lineno, line in enumerate(_lines(path), start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise StyleError(f"{path}: line {lineno}: expected 'id<TAB>text'")
        out.append(NeutralRecord(*parts))
    return out


def load_stylized(path) -> list[StylizedRecord]:
    """``id<TAB>character<TAB>text[<TAB>cot[<TAB>label,label]]`` per line."""
    out = []
    for lineno, line in enumerate(_lines(path), start=1):
        parts = line.split("\t")
        if not 3 <= len(parts) <= 5:
            raise StyleError(f"{path}: line {lineno}: expected 3 to 5 tab-separated fields")
        parts += [""] * (5 - len(parts))
        uid, char, text, cot, labels = parts
        out.append(StylizedRecord(uid, char, text, cot or None,
                                  tuple(x for x in labels.split(",") if x)))
    return out
