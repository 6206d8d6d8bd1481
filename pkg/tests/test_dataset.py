import pytest
from hypothesis import given, strategies as st

from charstyle import dataset
from charstyle.dataset import (DatasetWarning, NeutralRecord, OversamplePlan, StylizedRecord,
                               TrainingPair, build_pairs, oversample_pairs, oversample_report,
                               render_cot_target, render_instruction_prompt, validate_dataset)
from charstyle.errors import StyleError

from test_style_vector import style


def neutrals(n):
    return [NeutralRecord(f"p{i}", f"中性句子{i}") for i in range(n)]


def stylized(n, char="mika"):
    return [StylizedRecord(f"p{i}", char, f"风格句子{i}喵", "可爱", ("cute",)) for i in range(n)]


def test_five_aligned():
    pairs, rep = build_pairs(neutrals(5), stylized(5))
    assert len(pairs) == 5
    assert rep.unaligned_neutral == [] and rep.unaligned_stylized == []
    assert pairs[2].neutral == "中性句子2" and pairs[2].stylized == "风格句子2喵"


def test_two_neutrals_for_one_stylized():
    with pytest.raises(StyleError, match="1:1"):
        build_pairs(neutrals(2) + [NeutralRecord("p0", "又一个")], stylized(1))


def test_unaligned_neutral_reported():
    pairs, rep = build_pairs(neutrals(4), stylized(3))
    assert len(pairs) == 3
    assert rep.unaligned_neutral == ["p3"]


PAPER_ROWS = [("Muice", 2206, 3118, 1.41), ("Haruhi", 933, 1058, 1.13), ("Ayaka", 1358, 1464, 1.08),
              ("Hutao", 816, 851, 1.04), ("Zhongli", 473, 506, 1.07)]


def test_oversample_report_rates():
    counts = {c: s for c, s, _, _ in PAPER_ROWS}
    plan = OversamplePlan({c: t for c, _, t, _ in PAPER_ROWS})
    rows = oversample_report(counts, plan)
    for row, (_, _, _, rate) in zip(rows, PAPER_ROWS):
        assert abs(row.rate - rate) < 0.005
    total = rows[-1]
    assert (total.character, total.source, total.target) == ("Total", 5786, 6997)
    assert abs(total.increase_pct - 20.93) < 0.01
    text = dataset.format_oversample_report(rows)
    assert "Muice\t2206\t3118\t1.41\t+41.34%" in text


def test_target_equals_source():
    rows = oversample_report({"a": 10}, OversamplePlan({"a": 10}))
    assert rows[0].rate == 1.0
    pairs, _ = build_pairs(neutrals(3), stylized(3))
    assert oversample_pairs(pairs, OversamplePlan({"mika": 3})) == pairs


def test_target_below_source():
    with pytest.raises(StyleError, match="below"):
        oversample_report({"a": 10}, OversamplePlan({"a": 9}))


@given(st.integers(1, 12), st.integers(0, 30), st.integers(0, 1000))
def test_oversample_hits_target_exactly(n, extra, seed):
    pairs, _ = build_pairs(neutrals(n), stylized(n))
    out = oversample_pairs(pairs, OversamplePlan({"mika": n + extra}), seed=seed)
    assert len(out) == n + extra
    assert out[:n] == pairs
    assert len({p.id for p in out}) == len(out)
    assert validate_dataset(out) == []
    assert out == oversample_pairs(pairs, OversamplePlan({"mika": n + extra}), seed=seed)


def test_label_filter():
    pairs = [TrainingPair("a", "m", "n", "s", None, ("cute",)),
             TrainingPair("b", "m", "n", "s", None, ("kind",))]
    out = oversample_pairs(pairs, OversamplePlan({"m": 5}), label_filter={"kind"})
    assert all(p.id.startswith("b~") for p in out[2:])
    with pytest.raises(StyleError, match="eligible"):
        oversample_pairs(pairs, OversamplePlan({"m": 5}), label_filter={"evil"})


S = style()


def test_prompt_all_fields_in_order():
    lines = render_instruction_prompt(S, "今天天气不错。").splitlines()
    prefixes = [ln.split(":")[0] for ln in lines]
    assert prefixes == ["Target Character", "Pragmatic Styles", "Lexical Keywords",
                        "Syntactic Profile", "Neutral Content"]
    assert lines[2] == "Lexical Keywords: 只是, 而已, 仅"


def test_prompt_full_mask():
    out = render_instruction_prompt(S, "x", mask={"lexical", "syntactic", "pragmatic"})
    assert out == "Target Character: frieren\nNeutral Content: x"


def test_prompt_mask_syntactic_is_line_removal():
    full = render_instruction_prompt(S, "x").splitlines()
    masked = render_instruction_prompt(S, "x", mask={"syntactic"})
    assert masked == "\n".join(ln for ln in full if not ln.startswith("Syntactic Profile"))


def test_prompt_bad_mask():
    with pytest.raises(StyleError):
        render_instruction_prompt(S, "x", mask={"neutral"})


def test_custom_template(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("character\t角色：{character}\nneutral\t原文：{neutral}\n", encoding="utf-8")
    out = render_instruction_prompt(S, "你好", template=dataset.load_template(p))
    assert out == "角色：frieren\n原文：你好"


def test_cot_concatenation():
    assert render_cot_target("角色傲娇，先否定再让步", "哼…") == "<think>角色傲娇，先否定再让步</think>\n哼…"


def test_cot_empty_flagged():
    with pytest.warns(DatasetWarning):
        assert render_cot_target("", "s") == "<think></think>\ns"


def test_cot_too_long():
    with pytest.raises(StyleError, match="101 > 100"):
        render_cot_target("a" * 101, "s")
    assert render_cot_target("a" * 100, "s").startswith("<think>")


def test_validate_clean_and_defects():
    pairs, _ = build_pairs(neutrals(4), stylized(4))
    assert validate_dataset(pairs) == []
    bad = [TrainingPair("p0", "m", "n", "")]
    assert [v.kind for v in validate_dataset(bad)] == ["empty_field"]
    mixed = [
        TrainingPair("a", "m", "n", "s"),
        TrainingPair("a", "m", "n", "s"),
        TrainingPair("b", "m", "", "s"),
        TrainingPair("c", "m", "n", "s", "x" * 101),
    ]
    kinds = sorted(v.kind for v in validate_dataset(mixed))
    assert kinds == ["cot_too_long", "duplicate_id", "empty_field"]


def test_validate_one_to_one():
    v = validate_dataset([TrainingPair("a", "m", "n", "s1\ns2")])
    assert [x.kind for x in v] == ["one_to_one"]


def test_dataset_file_roundtrip(tmp_path):
    pairs, _ = build_pairs(neutrals(3), stylized(3))
    text = dataset.format_dataset(pairs)
    assert text.splitlines()[0] == "id\tcharacter\tneutral\tstylized\tcot\tlabels"
    assert dataset.parse_dataset(text) == pairs


def test_loaders(tmp_path):
    (tmp_path / "n.tsv").write_text("p0\t你好\n", encoding="utf-8")
    (tmp_path / "s.tsv").write_text("p0\tmika\t你好喵\n", encoding="utf-8")
    pairs, _ = build_pairs(dataset.load_neutrals(tmp_path / "n.tsv"),
                           dataset.load_stylized(tmp_path / "s.tsv"))
    assert pairs == [TrainingPair("p0", "mika", "你好", "你好喵")]
    (tmp_path / "bad.tsv").write_text("p0\n", encoding="utf-8")
    with pytest.raises(StyleError, match="line 1"):
        dataset.load_neutrals(tmp_path / "bad.tsv")
