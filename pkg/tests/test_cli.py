import hashlib
import json
import shutil
from pathlib import Path

import pytest

from charstyle.cli import main
from charstyle.style_vector import StructuredStyleVector

DATA = Path(__file__).parent / "data"
ORDER = ["lexicon", "syntax", "refine", "assemble", "stability", "dataset", "eval"]


def digest_tree(root: Path, skip=("out",)):
    h = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.relative_to(root).parts[0] not in skip:
            h[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return h


@pytest.fixture(scope="module")
def ran(toy_workspace, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_out")
    before = digest_tree(toy_workspace.parent)
    for cmd in ORDER:
        assert main(["--config", str(toy_workspace), "--out-dir", str(out), cmd]) == 0, cmd
    return toy_workspace, out, before


def run(cfg, out, *args):
    return main(["--config", str(cfg), "--out-dir", str(out), *args])


def test_all_commands_produce_artifacts(ran):
    cfg, out, _ = ran
    for char in ("mika", "sora"):
        for name in (f"lexicon_{char}.tsv", f"rules_{char}.tsv", f"syntactic_{char}.tsv",
                     f"coverage_{char}.tsv", f"style_{char}.json", f"stability_{char}.csv"):
            assert (out / name).exists(), name
        s = StructuredStyleVector.from_json((out / f"style_{char}.json").read_text("utf-8"))
        assert s.character == char
    for name in ("refiner.model", "thresholds.tsv", "refiner_report.tsv", "dataset.tsv",
                 "prompts.jsonl", "report.csv", "tau.csv", "frontier.csv"):
        assert (out / name).exists(), name


def test_inputs_not_mutated(ran):
    cfg, _, before = ran
    assert digest_tree(cfg.parent) == before


def test_toy_coverage_full(ran):
    _, out, _ = ran
    for char in ("mika", "sora"):
        row = (out / f"coverage_{char}.tsv").read_text("utf-8").splitlines()[1].split("\t")
        assert row[-1] == "100.00"


def test_rules_table_layout(ran):
    _, out, _ = ran
    assert (out / "rules_mika.tsv").read_text("utf-8").splitlines()[0] == "Rule\tFreq.\tP\tPR\tLLR"


def test_refine_separable_report(ran):
    _, out, _ = ran
    summary = json.loads((out / "refiner_summary.json").read_text("utf-8"))
    assert summary["macro_f1_optimized"] >= 0.95
    assert summary["macro_f1_optimized"] >= summary["macro_f1_fixed_0.5"]


def test_top_k_passthrough(ran, tmp_path):
    cfg, _, _ = ran
    assert run(cfg, tmp_path, "lexicon", "--character", "mika", "--top-k", "5") == 0
    assert len((tmp_path / "lexicon_mika.tsv").read_text("utf-8").splitlines()) == 1 + 5


def test_missing_corpus_exit_2(ran, tmp_path, monkeypatch, capsys):
    cfg, _, _ = ran
    monkeypatch.setenv("CHARSTYLE_PATH_CORPUS", str(tmp_path / "nope.tsv"))
    assert run(cfg, tmp_path, "lexicon") == 2
    assert "corpus not found" in capsys.readouterr().err


def test_empty_treebank_exit_1(ran, tmp_path, monkeypatch, capsys):
    cfg, _, _ = ran
    empty = tmp_path / "empty.trees"
    empty.write_text("", encoding="utf-8")
    monkeypatch.setenv("CHARSTYLE_PATH_TREEBANKS_MIKA", str(empty))
    assert run(cfg, tmp_path, "syntax", "--character", "mika") == 1
    assert "empty table" in capsys.readouterr().err


def test_no_train_exit_1(ran, tmp_path, capsys):
    cfg, _, _ = ran
    with pytest.warns(UserWarning):
        assert run(cfg, tmp_path, "refine", "--no-train") == 1
    assert "untrained model requested for prediction" in capsys.readouterr().err


def test_refine_deterministic(ran, tmp_path):
    cfg, out, _ = ran
    assert run(cfg, tmp_path, "refine") == 0
    assert (tmp_path / "refiner.model").read_bytes() == (out / "refiner.model").read_bytes()


def test_eval_points_fixture(ran, tmp_path):
    cfg, _, _ = ran
    assert run(cfg, tmp_path, "eval", "--points", str(DATA / "auto_results_points.csv")) == 0
    rows = (tmp_path / "frontier.csv").read_text("utf-8").splitlines()[1:]
    front = [r for r in rows if r.endswith(",1")]
    assert len(front) == 3


def test_stability_too_large(ran, tmp_path, capsys):
    cfg, out, _ = ran
    args = ["--model", str(out / "refiner.model"), "--thresholds", str(out / "thresholds.tsv")]
    assert run(cfg, tmp_path, "stability", "--sizes", "5,1000", *args) == 1
    assert "exceeds" in capsys.readouterr().err


def test_dataset_without_styles_is_io_error(ran, tmp_path):
    cfg, _, _ = ran
    assert run(cfg, tmp_path, "dataset") == 2


def test_assemble_without_model_is_io_error(ran, tmp_path, capsys):
    cfg, _, _ = ran
    assert run(cfg, tmp_path, "assemble") == 2
    assert "model file not found" in capsys.readouterr().err


def test_unknown_character(ran, tmp_path):
    cfg, _, _ = ran
    assert run(cfg, tmp_path, "lexicon", "--character", "nobody") == 1


def test_bad_config(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "missing.json"), "lexicon"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    assert main(["--config", str(bad), "lexicon"]) == 1


def test_global_flags_after_subcommand(ran, tmp_path):
    cfg, _, _ = ran
    assert main(["lexicon", "--config", str(cfg), "--out-dir", str(tmp_path), "--seed", "3"]) == 0
    assert (tmp_path / "lexicon_mika.tsv").exists()


def test_seed_changes_sampling(ran, tmp_path):
    cfg, out, _ = ran
    copy = tmp_path / "ws"
    shutil.copytree(cfg.parent, copy, ignore=shutil.ignore_patterns("out"))
    assert main(["--config", str(copy / "config.json"), "--out-dir", str(tmp_path / "o"),
                 "--seed", "0", "lexicon"]) == 0
    assert (tmp_path / "o" / "lexicon_mika.tsv").read_bytes() == (out / "lexicon_mika.tsv").read_bytes()
