"""Bracketed constituency trees and context-free production counts."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import StyleError, TreeParseError

ARROW = "→"


@dataclass(frozen=True)
class ParseTree:
    label: str
    children: tuple["ParseTree", ...] = ()
    token: str | None = None

    def __post_init__(self):
        if not self.label:
            raise StyleError("tree labels must be non-empty")
        if (self.token is None) == (not self.children):
            raise StyleError(f"node {self.label!r} must have either a token or children")

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.token]
        return [t for c in self.children for t in c.leaves()]

    def walk(self) -> Iterator["ParseTree"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def to_bracketed(self) -> str:
        if self.is_leaf:
            return f"({self.label} {self.token})"
        return f"({self.label} " + " ".join(c.to_bracketed() for c in self.children) + ")"

    __str__ = to_bracketed


@dataclass(frozen=True, order=True)
class Production:
    lhs: str
    rhs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if not self.lhs or not self.rhs:
            raise StyleError("production needs a left-hand side and a non-empty right-hand side")

    def __str__(self):
        return f"{self.lhs} {ARROW} {' '.join(self.rhs)}"

    @classmethod
    def parse(cls, text: str) -> "Production":
        """Inverse of ``str``; accepts ``->`` as well as the arrow character."""
        if ARROW in text:
            lhs, _, rhs = text.partition(ARROW)
        elif "->" in text:
            lhs, _, rhs = text.partition("->")
        else:
            raise StyleError(f"not a production: {text!r}")
        return cls(lhs.strip(), tuple(rhs.split()))


@dataclass
class ProductionTable:
    counts: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, rule: Production) -> int:
        return self.counts.get(rule, 0)

    def __contains__(self, rule):
        return rule in self.counts

    def items(self):
        return self.counts.items()

    def scaled(self, k: int) -> "ProductionTable":
        return ProductionTable(Counter({r: c * k for r, c in self.counts.items()}))

    @classmethod
    def from_mapping(cls, counts) -> "ProductionTable":
        """Build from ``{Production | str: count}``."""
        out = Counter()
        for rule, c in counts.items():
            if not isinstance(rule, Production):
                rule = Production.parse(rule)
            if c < 1:
                raise StyleError(f"count for {rule} must be positive, got {c}")
            out[rule] += int(c)
        return cls(out)


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message, pos=None):
        pos = self.pos if pos is None else pos
        return TreeParseError(message, len(self.text[:pos].encode("utf-8")))

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def atom(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and not (
            self.text[self.pos].isspace() or self.text[self.pos] in "()"
        ):
            self.pos += 1
        return self.text[start:self.pos]

    def node(self) -> ParseTree:
        start = self.pos
        if self.pos >= len(self.text) or self.text[self.pos] != "(":
            raise self.error("expected '('")
        self.pos += 1
        self.skip_ws()
        label = self.atom()
        if not label:
            raise self.error("empty constituent" if self.peek() == ")" else "missing label", start)
        self.skip_ws()
        children = []
        token = None
        while True:
            ch = self.peek()
            if ch is None:
                raise self.error("unbalanced parentheses: unexpected end of input")
            if ch == ")":
                self.pos += 1
                break
            if ch == "(":
                if token is not None:
                    raise self.error("token followed by a subtree")
                children.append(self.node())
            else:
                if token is not None or children:
                    raise self.error("unexpected token")
                token = self.atom()
            self.skip_ws()
        if token is None and not children:
            raise self.error("empty constituent", start)
        return ParseTree(label, tuple(children), token)

    def peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else None


def parse_bracketed_tree(text: str) -> ParseTree:
    """Parse one Penn-style bracketed tree such as ``(IP (NP (PN 我)) (VP (VV 走)))``.

    Raises:
        TreeParseError: unbalanced parentheses, an empty constituent, or
            anything after the closing bracket. ``offset`` points at the
            problem in UTF-8 bytes.
    """
    reader = _Reader(text)
    reader.skip_ws()
    tree = reader.node()
    reader.skip_ws()
    if reader.pos != len(text):
        raise reader.error("trailing characters after tree")
    return tree


def extract_productions(tree: ParseTree, include_lexical: bool = False) -> list[Production]:
    """Pre-order list of the productions used in ``tree``.

    Preterminal-to-word rules are only included when ``include_lexical`` is set.
    """
    out = []
    for node in tree.walk():
        if node.is_leaf:
            if include_lexical:
                out.append(Production(node.label, (node.token,)))
        else:
            out.append(Production(node.label, tuple(c.label for c in node.children)))
    return out


def count_productions(trees: Iterable[ParseTree], include_lexical: bool = False) -> ProductionTable:
    counts = Counter()
    for tree in trees:
        counts.update(extract_productions(tree, include_lexical))
    return ProductionTable(counts)


def read_treebank(path) -> list[tuple[str | None, ParseTree]]:
    """Read one tree per line; blank lines are skipped.

    A line may carry an utterance id before a tab (``u17<TAB>(IP ...)``); the id
    is ``None`` otherwise.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"treebank not found: {path}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            uid = None
            if "\t" in line:
                uid, line = line.split("\t", 1)
            try:
                out.append((uid, parse_bracketed_tree(line)))
            except TreeParseError as exc:
                raise TreeParseError(f"{path}: line {lineno}: {exc.reason}", exc.offset) from None
    return out
