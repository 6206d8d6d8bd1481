"""PCFG rule statistics and the aggregated syntactic style vector.

Rule probabilities are normalized per left-hand side. Rules that are
over-represented in a style corpus relative to a baseline corpus are ranked by
a log-likelihood ratio, and rule counts are pooled into interpretable
dimensions through a rule-to-dimension dictionary (shipped in
``data/rule_dimensions.tsv``).
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import StyleError
from .treebank import Production, ProductionTable

PR_FLOOR = 1e-8


@dataclass(frozen=True)
class PcfgModel:
    probabilities: dict[Production, float]
    lhs_totals: dict[str, int]

    def __getitem__(self, rule: Production) -> float:
        return self.probabilities[rule]

    def get(self, rule: Production, default: float = 0.0) -> float:
        return self.probabilities.get(rule, default)

    def __contains__(self, rule):
        return rule in self.probabilities


def pcfg_probabilities(table: ProductionTable) -> PcfgModel:
    """Relative-frequency estimate P(A -> a) = count(A -> a) / count(A -> *)."""
    if not table.counts:
        raise StyleError("empty table: no productions to estimate")
    totals: dict[str, int] = defaultdict(int)
    for rule, c in table.items():
        totals[rule.lhs] += c
    probs = {rule: c / totals[rule.lhs] for rule, c in table.items()}
    return PcfgModel(probs, dict(totals))


def probability_ratio(style: PcfgModel, base: PcfgModel, rule: Production,
                      floor: float = PR_FLOOR) -> float:
    """P_style(rule) / P_base(rule); a baseline probability of zero is floored."""
    if rule not in style:
        raise StyleError(f"rule {rule} not in style model")
    return style[rule] / max(base.get(rule, 0.0), floor)


def log_likelihood_ratio(k1: int, n1: int, k2: int, n2: int, mu: float | None = None) -> float:
    """2 * [k1 ln(k1 / (n1 mu)) + k2 ln(k2 / (n2 mu))].

    ``mu`` defaults to the pooled rate (k1 + k2) / (n1 + n2). Terms with a zero
    count contribute nothing. With integer counts and the pooled rate the
    ratios are formed exactly, so equal rates give exactly 0.
    """
    if n1 <= 0 or n2 <= 0:
        raise StyleError("LLR needs positive totals n1 and n2")
    if k1 < 0 or k2 < 0 or k1 > n1 or k2 > n2:
        raise StyleError(f"invalid counts k1={k1}, n1={n1}, k2={k2}, n2={n2}")
    if mu is None:
        if k1 + k2 == 0:
            return 0.0
        exact = all(isinstance(x, (int, np.integer)) for x in (k1, n1, k2, n2))
        if exact:
            pooled = Fraction(int(k1 + k2), int(n1 + n2))
            terms = [(k, Fraction(int(k), int(n)) / pooled) for k, n in ((k1, n1), (k2, n2)) if k]
            return 2.0 * sum(k * math.log(ratio) for k, ratio in terms)
        mu = (k1 + k2) / (n1 + n2)
    if not 0.0 < mu <= 1.0:
        raise StyleError(f"mu must lie in (0, 1], got {mu}")
    total = 0.0
    for k, n in ((k1, n1), (k2, n2)):
        if k:
            total += k * math.log(k / (n * mu))
    return 2.0 * total


@dataclass(frozen=True)
class RuleStat:
    rule: Production
    freq: int
    p: float
    pr: float
    llr: float
    pr_floored: bool = False


RANK_HEADER = ("Rule", "Freq.", "P", "PR", "LLR")


def rank_rules(style: ProductionTable, base: ProductionTable, top_k: int | None = 15,
               floor: float = PR_FLOOR) -> list[RuleStat]:
    """Style-corpus rules ordered by LLR against the baseline (then frequency, then rule text)."""
    if not style.counts or not base.counts:
        raise StyleError("empty table: rule ranking needs non-empty style and baseline tables")
    p_style = pcfg_probabilities(style)
    p_base = pcfg_probabilities(base)
    n1, n2 = style.total, base.total
    rows = []
    for rule, k1 in style.items():
        k2 = base[rule]
        rows.append(RuleStat(
            rule=rule,
            freq=k1,
            p=p_style[rule],
            pr=probability_ratio(p_style, p_base, rule, floor),
            llr=log_likelihood_ratio(k1, n1, k2, n2),
            pr_floored=rule not in p_base,
        ))
    rows.sort(key=lambda r: (-r.llr, -r.freq, str(r.rule)))
    return rows if top_k is None else rows[:top_k]


def format_rule_table(rows: list[RuleStat]) -> str:
    lines = ["\t".join(RANK_HEADER)]
    for r in rows:
        pr = f"{r.pr:.2f}" + ("*" if r.pr_floored else "")
        lines.append(f"{r.rule}\t{r.freq}\t{r.p:.4f}\t{pr}\t{r.llr:.2f}")
    return "\n".join(lines) + "\n"


# -- dimension mapping ---------------------------------------------------------


@dataclass(frozen=True)
class RuleMapping:
    dimension_names: tuple[str, ...]
    rule_to_dims: dict[Production, frozenset[int]]

    def __post_init__(self):
        if len(set(self.dimension_names)) != len(self.dimension_names):
            raise StyleError("dimension names must be unique")
        n = len(self.dimension_names)
        for rule, dims in self.rule_to_dims.items():
            if any(not 0 <= d < n for d in dims):
                raise StyleError(f"rule {rule} maps to an unknown dimension index")

    def __len__(self):
        return len(self.dimension_names)

    def __contains__(self, rule):
        return rule in self.rule_to_dims

    @classmethod
    def from_pairs(cls, pairs) -> "RuleMapping":
        names: list[str] = []
        index: dict[str, int] = {}
        rules: dict[Production, set[int]] = defaultdict(set)
        for rule, dim in pairs:
            if not isinstance(rule, Production):
                rule = Production.parse(rule)
            if dim not in index:
                index[dim] = len(names)
                names.append(dim)
            rules[rule].add(index[dim])
        return cls(tuple(names), {r: frozenset(d) for r, d in rules.items()})

    @classmethod
    def parse(cls, text: str, source: str = "<mapping>") -> "RuleMapping":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[1].strip():
                raise StyleError(f"{source}: line {lineno}: expected 'rule<TAB>dimension'")
            pairs.append((parts[0].strip(), parts[1].strip()))
        return cls.from_pairs(pairs)


def load_mapping(path=None) -> RuleMapping:
    """Load a rule/dimension file; ``None`` loads the bundled dictionary."""
    if path is None:
        text = resources.files("charstyle").joinpath("data/rule_dimensions.tsv").read_text("utf-8")
        return RuleMapping.parse(text, "rule_dimensions.tsv")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"mapping file not found: {path}")
    return RuleMapping.parse(path.read_text("utf-8"), str(path))


@dataclass(frozen=True)
class SyntacticVector:
    dimension_names: tuple[str, ...]
    values: np.ndarray
    empty: bool = False

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.dimension_names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.dimension_names, self.values)}

    def top(self, k: int = 5) -> list[tuple[str, float]]:
        order = sorted(range(len(self.values)), key=lambda i: (-self.values[i], i))
        return [(self.dimension_names[i], float(self.values[i])) for i in order[:k]
                if self.values[i] > 0]


def dimension_masses(table: ProductionTable, mapping: RuleMapping) -> np.ndarray:
    """Raw per-dimension counts; a rule listed under several dimensions counts in each."""
    mass = np.zeros(len(mapping), dtype=np.int64)
    for rule, c in table.items():
        for d in mapping.rule_to_dims.get(rule, ()):
            mass[d] += c
    return mass


def map_to_style_vector(table: ProductionTable, mapping: RuleMapping) -> SyntacticVector:
    """Share of mapped production mass falling in each dimension.

    Unmapped rules are ignored entirely. When nothing maps, the vector is all
    zeros and ``empty`` is set.
    """
    mass = dimension_masses(table, mapping)
    total = int(mass.sum())
    if total == 0:
        return SyntacticVector(mapping.dimension_names, np.zeros(len(mapping)), empty=True)
    return SyntacticVector(mapping.dimension_names, mass / total)


@dataclass(frozen=True)
class CoverageReport:
    total_rules: int
    mapped_rules: int
    coverage_pct: float
    empty: bool = False


def coverage_from_counts(total: int, mapped: int) -> CoverageReport:
    if total == 0:
        return CoverageReport(0, 0, 0.0, empty=True)
    if not 0 <= mapped <= total:
        raise StyleError(f"mapped count {mapped} outside [0, {total}]")
    return CoverageReport(total, mapped, 100.0 * mapped / total)


def coverage(table: ProductionTable, mapping: RuleMapping) -> CoverageReport:
    """Fraction of production occurrences (not rule types) covered by ``mapping``."""
    mapped = sum(c for rule, c in table.items() if rule in mapping)
    return coverage_from_counts(table.total, mapped)
