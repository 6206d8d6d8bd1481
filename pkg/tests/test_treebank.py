from collections import Counter

import pytest
from hypothesis import given, strategies as st

from charstyle.errors import TreeParseError
from charstyle.treebank import (ParseTree, Production, ProductionTable, count_productions,
                                extract_productions, parse_bracketed_tree, read_treebank)

P = Production.parse


def test_single_production():
    t = parse_bracketed_tree("(NP (NR 辛梅尔))")
    assert t.label == "NP"
    assert len(t.children) == 1
    leaf = t.children[0]
    assert (leaf.label, leaf.token) == ("NR", "辛梅尔")


def test_unbalanced_reports_end_offset():
    text = "(NP (NR x)"
    with pytest.raises(TreeParseError, match="unbalanced") as exc:
        parse_bracketed_tree(text)
    assert exc.value.offset == len(text.encode("utf-8"))


def test_offset_counts_utf8_bytes():
    text = "(NP (NR 辛梅尔)"
    with pytest.raises(TreeParseError) as exc:
        parse_bracketed_tree(text)
    assert exc.value.offset == len(text.encode("utf-8"))


@pytest.mark.parametrize("bad, reason", [
    ("(NP ())", "empty constituent"),
    ("(NP)", "empty constituent"),
    ("(NP (NR x)) junk", "trailing"),
    ("NP", "expected"),
])
def test_malformed(bad, reason):
    with pytest.raises(TreeParseError, match=reason):
        parse_bracketed_tree(bad)


def test_three_level_tree():
    t = parse_bracketed_tree("(IP (NP (PN 我)) (VP (VV 走)))")
    assert t.leaves() == ["我", "走"]
    depth = lambda n: 1 if n.is_leaf else 1 + max(depth(c) for c in n.children)  # noqa: E731
    assert depth(t) == 3


def test_roundtrip_bracketed():
    s = "(IP (NP (PN 我)) (VP (VV 走)))"
    assert parse_bracketed_tree(s).to_bracketed() == s


def test_extract_internal_only():
    assert extract_productions(parse_bracketed_tree("(NP (NR x))")) == [P("NP → NR")]
    t = parse_bracketed_tree("(IP (NP (PN 我)) (VP (VV 走)))")
    assert extract_productions(t) == [P("IP → NP VP"), P("NP → PN"), P("VP → VV")]


def test_extract_lexical():
    t = parse_bracketed_tree("(IP (NP (PN 我)) (VP (VV 走)))")
    assert extract_productions(t, include_lexical=True) == [
        P("IP → NP VP"), P("NP → PN"), P("PN → 我"), P("VP → VV"), P("VV → 走")]


def test_count_duplicates():
    t = parse_bracketed_tree("(NP (NR x))")
    table = count_productions([t, t])
    assert table.counts == Counter({P("NP → NR"): 2})
    assert table.total == 2


def test_count_empty():
    table = count_productions([])
    assert table.total == 0 and len(table) == 0


FIVE = [
    "(TOP (IP (NP (PN 我)) (VP (VV 喜欢) (NP (NN 猫)))))",
    "(TOP (CP (IP (NP (NN 猫)) (VP (ADVP (AD 超级)) (VP (VA 可爱)))) (SP 呀) (PU ！)))",
    "(TOP (IP (INTJ (IJ 嘿嘿)) (PU ，) (VP (VV 吃) (NP (NN 鱼)))))",
    "(TOP (IP (NP (NN 猫) (CC 和) (NN 鱼)) (VP (VA 可爱))))",
    "(TOP (IP (VP (VV 玩) (NP (NN 星星))) (PU 。)))",
]


def test_five_tree_fixture_hand_count():
    table = count_productions(parse_bracketed_tree(s) for s in FIVE)
    expected = {
        "TOP → IP": 4, "TOP → CP": 1, "IP → NP VP": 3, "NP → PN": 1, "VP → VV NP": 3,
        "NP → NN": 4, "CP → IP SP PU": 1, "VP → ADVP VP": 1, "ADVP → AD": 1, "VP → VA": 2,
        "IP → INTJ PU VP": 1, "INTJ → IJ": 1, "NP → NN CC NN": 1, "IP → VP PU": 1,
    }
    assert table.counts == Counter({P(k): v for k, v in expected.items()})


def test_production_parse_ascii_arrow():
    assert P("NP -> DNP NP") == Production("NP", ("DNP", "NP"))
    assert str(P("NP -> DNP NP")) == "NP → DNP NP"


def test_read_treebank_with_ids(tmp_path):
    p = tmp_path / "t.trees"
    p.write_text("u1\t(NP (NR x))\n\n(NP (PN y))\n", encoding="utf-8")
    out = read_treebank(p)
    assert [uid for uid, _ in out] == ["u1", None]


def test_read_treebank_error_names_line(tmp_path):
    p = tmp_path / "t.trees"
    p.write_text("(NP (NR x))\n(NP (NR x)\n", encoding="utf-8")
    with pytest.raises(TreeParseError, match="line 2"):
        read_treebank(p)


def test_leaf_invariant():
    with pytest.raises(Exception):
        ParseTree("NP", (), None)


labels = st.sampled_from(["NP", "VP", "IP", "NN", "VV", "PN", "AD"])
words = st.text(alphabet="abc我你喵", min_size=1, max_size=3)
trees = st.recursive(
    st.builds(lambda l, w: ParseTree(l, (), w), labels, words),
    lambda kids: st.builds(lambda l, cs: ParseTree(l, tuple(cs), None), labels,
                           st.lists(kids, min_size=1, max_size=3)),
    max_leaves=12,
)


@given(trees)
def test_parse_format_roundtrip(tree):
    assert parse_bracketed_tree(tree.to_bracketed()) == tree


@given(trees)
def test_production_count_matches_internal_nodes(tree):
    internal = sum(1 for n in tree.walk() if not n.is_leaf)
    lexical = sum(1 for n in tree.walk() if n.is_leaf)
    assert len(extract_productions(tree)) == internal
    assert len(extract_productions(tree, True)) == internal + lexical


@given(st.lists(trees, max_size=4), st.integers(1, 4))
def test_scaled_table(ts, k):
    t = count_productions(ts)
    assert t.scaled(k).total == k * t.total
    assert ProductionTable.from_mapping({str(r): c for r, c in t.items()}) == t
