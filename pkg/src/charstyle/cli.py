"""Command-line entry point: ``charstyle <subcommand> [options]``.

Exit codes: 0 on success, 1 when inputs fail validation, 2 on I/O failure.
Every command writes into ``--out-dir`` and is byte-for-byte reproducible for
a fixed config and seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset, evaluation, refiner, syntactic
from .errors import StyleError
from .pipeline import BASELINE, Pipeline, PipelineConfig
from .style_vector import StructuredStyleVector, nshot_stability

log = logging.getLogger("charstyle")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, "utf-8")
    log.info("wrote %s", path)


def _write_json(path: Path, obj) -> None:
    _write(path, json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


def _characters(args, pipe: Pipeline) -> list[str]:
    chars = args.character or pipe.config.characters
    unknown = [c for c in chars if c not in pipe.config.characters]
    if unknown:
        raise StyleError(f"unknown character(s): {', '.join(unknown)}")
    return chars


def _load_refiner(args, pipe: Pipeline):
    model = refiner.RefinerModel.load(args.model or args.out_dir / "refiner.model")
    tpath = Path(args.thresholds or args.out_dir / "thresholds.tsv")
    if not tpath.exists():
        raise FileNotFoundError(f"threshold file not found: {tpath}")
    return model, refiner.parse_thresholds(tpath.read_text("utf-8"), pipe.labels)


# -- subcommands ---------------------------------------------------------------------


def cmd_lexicon(args, pipe: Pipeline) -> None:
    for char in _characters(args, pipe):
        lex = pipe.lexicon(char, capacity=args.top_k)
        _write(args.out_dir / f"lexicon_{char}.tsv", lex.to_tsv())
        print(f"lexicon {char}: {len(lex.entries)} entries"
              + (" (empty: no token passed the filters)" if lex.empty else ""))


def cmd_syntax(args, pipe: Pipeline) -> None:
    top_k = args.top_k or pipe.config["syntax"]["top_k"]
    if args.baseline is not None and args.baseline not in pipe.config.characters:
        raise StyleError(f"unknown baseline character {args.baseline!r}")
    base = pipe.production_table(args.baseline or BASELINE)
    for char in _characters(args, pipe):
        table = pipe.production_table(char)
        rows = syntactic.rank_rules(table, base, top_k)
        _write(args.out_dir / f"rules_{char}.tsv", syntactic.format_rule_table(rows))
        vec = syntactic.map_to_style_vector(table, pipe.mapping)
        _write(args.out_dir / f"syntactic_{char}.tsv",
               "dimension\tvalue\n" + "".join(f"{n}\t{v:.6f}\n" for n, v in vec.as_dict().items()))
        cov = syntactic.coverage(table, pipe.mapping)
        _write(args.out_dir / f"coverage_{char}.tsv",
               "Character\tTotal Rules\tMapped Rules\tCoverage (%)\n"
               f"{char}\t{cov.total_rules}\t{cov.mapped_rules}\t{cov.coverage_pct:.2f}\n")
        print(f"syntax {char}: {len(table)} rule types, coverage {cov.coverage_pct:.2f}%")


def cmd_refine(args, pipe: Pipeline) -> None:
    examples = pipe.gold_examples()
    cfg = pipe.refiner_config()
    opts = pipe.config["refiner"]
    train_idx, tune_idx = refiner.split_indices(len(examples), cfg.val_fraction, cfg.seed)
    train = refiner.oversample_rare_labels([examples[i] for i in train_idx],
                                           opts["min_count"], pipe.labels)
    tune = [examples[i] for i in tune_idx]
    if args.no_train:
        cfg.max_epochs = 0
    model = refiner.train_refiner(train, cfg)

    x_tune, y_tune = refiner.stack_features(tune), refiner.stack_gold(tune)
    fixed = np.full(len(pipe.labels), 0.5)
    probs, dec_fixed = refiner.predict(model, x_tune, fixed)
    thresholds = refiner.optimize_thresholds_from_probs(probs, y_tune)
    dec_opt = (probs >= thresholds).astype(np.int8)
    report = refiner.macro_f1(dec_opt, y_tune, pipe.labels)
    fixed_f1 = refiner.macro_f1(dec_fixed, y_tune, pipe.labels).macro_f1
    utt = np.stack([e.utterance_embedding for e in tune])
    centroid = refiner.centroid_baseline(utt, pipe.label_centroids, pipe.labels,
                                         opts["centroid_threshold"])
    centroid_f1 = refiner.macro_f1(centroid, y_tune, pipe.labels).macro_f1

    model.save(args.out_dir / "refiner.model")
    _write(args.out_dir / "thresholds.tsv", refiner.format_thresholds(thresholds, pipe.labels))
    _write(args.out_dir / "refiner_report.tsv", report.to_tsv())
    _write_json(args.out_dir / "refiner_summary.json", {
        "train_examples": len(train_idx),
        "train_after_oversampling": len(train),
        "tune_examples": len(tune),
        "epochs": len(model.history),
        "macro_f1_optimized": round(report.macro_f1, 6),
        "macro_f1_fixed_0.5": round(fixed_f1, 6),
        "macro_f1_centroid_baseline": round(centroid_f1, 6),
    })
    print(f"refine: macro-F1 {report.macro_f1:.4f} (fixed 0.5: {fixed_f1:.4f}, "
          f"centroid baseline: {centroid_f1:.4f})")


def cmd_assemble(args, pipe: Pipeline) -> None:
    model, thresholds = _load_refiner(args, pipe)
    for char in _characters(args, pipe):
        s = pipe.style_vector(char, model, thresholds)
        _write(args.out_dir / f"style_{char}.json", s.to_json())
        print(f"assemble {char}: {len(s.lexicon.entries)} keywords, "
              f"pragmatic {', '.join(s.pragmatic.labels) or '(none)'}")


def cmd_stability(args, pipe: Pipeline) -> None:
    opts = pipe.config["stability"]
    sizes = [int(x) for x in args.sizes.split(",")] if args.sizes else list(opts["sizes"])
    trials = args.trials or opts["trials"]
    model, thresholds = _load_refiner(args, pipe)
    for char in _characters(args, pipe):
        corpus = pipe.corpora[char]
        extractor = pipe.extractor(char, model, thresholds)
        reference = extractor.extract(corpus)
        curve = nshot_stability(extractor, corpus, sizes, reference, pipe.embeddings,
                                seed=pipe.config.seed, trials=trials, weights=opts["weights"],
                                delta=opts["delta"])
        _write(args.out_dir / f"stability_{char}.csv", curve.to_csv())
        print(f"stability {char}: converges at N={curve.convergence_n}")


def cmd_dataset(args, pipe: Pipeline) -> None:
    opts = pipe.config["dataset"]
    neutrals = dataset.load_neutrals(pipe.config.path("neutrals"))
    stylized = dataset.load_stylized(pipe.config.path("stylized"))
    pairs, alignment = dataset.build_pairs(neutrals, stylized)
    counts = {}
    for p in pairs:
        counts[p.character] = counts.get(p.character, 0) + 1
    plan = dataset.OversamplePlan({c: int(opts["targets"].get(c, n)) for c, n in counts.items()})
    rows = dataset.oversample_report(counts, plan)
    final = dataset.oversample_pairs(pairs, plan, seed=pipe.config.seed,
                                     label_filter=opts["label_filter"])
    violations = dataset.validate_dataset(final)

    template_path = pipe.config.path("template", required=False)
    template = dataset.load_template(template_path) if template_path else dataset.DEFAULT_TEMPLATE
    mask = args.mask.split(",") if args.mask else list(opts["mask"])
    styles = {}
    for char in counts:
        spath = args.out_dir / f"style_{char}.json"
        if not spath.exists():
            raise FileNotFoundError(f"style vector not found: {spath} (run assemble first)")
        styles[char] = StructuredStyleVector.from_json(spath.read_text("utf-8"))
    prompts = []
    for p in final:
        prompts.append(json.dumps({
            "id": p.id,
            "prompt": dataset.render_instruction_prompt(styles[p.character], p.neutral, mask, template),
            "target": dataset.render_cot_target(p.cot_trace or "", p.stylized),
        }, ensure_ascii=False))

    _write(args.out_dir / "dataset.tsv", dataset.format_dataset(final))
    _write(args.out_dir / "oversampling.tsv", dataset.format_oversample_report(rows))
    _write(args.out_dir / "prompts.jsonl", "\n".join(prompts) + "\n")
    _write(args.out_dir / "validation.tsv", "id\tkind\tdetail\n"
           + "".join(f"{v.id}\t{v.kind}\t{v.detail}\n" for v in violations))
    print(f"dataset: {len(pairs)} aligned pairs, {len(final)} after oversampling, "
          f"{len(alignment.unaligned_neutral)} unaligned neutral, {len(violations)} violations")
    if violations:
        raise StyleError(f"dataset failed validation with {len(violations)} violation(s)")


def cmd_eval(args, pipe: Pipeline) -> None:
    opts = pipe.config["eval"]
    tau = args.tau if args.tau is not None else opts["tau"]
    samples = evaluation.load_scored_samples(args.scores or pipe.config.path("scored_samples"))
    groups = evaluation.group_by_model(samples)
    reports = [evaluation.aggregate_report(g, tau, opts["h_kind"], m) for m, g in groups.items()]
    taus = {m: evaluation.tau_sensitivity(g, opts["taus"]) for m, g in groups.items()}
    if args.points:
        points = evaluation.load_points(args.points)
    else:
        points = [evaluation.ParetoPoint(r.semantic, r.style_raw, r.model) for r in reports]
    front = evaluation.pareto_frontier(points)
    _write(args.out_dir / "report.csv", evaluation.format_report(reports))
    _write(args.out_dir / "tau.csv", evaluation.format_tau_table(taus))
    _write(args.out_dir / "frontier.csv", evaluation.format_frontier(points))
    print(f"eval: {len(samples)} samples in {len(reports)} model(s); "
          f"frontier: {', '.join(p.label for p in front)}")


COMMANDS = {
    "lexicon": cmd_lexicon, "syntax": cmd_syntax, "refine": cmd_refine,
    "assemble": cmd_assemble, "stability": cmd_stability, "dataset": cmd_dataset,
    "eval": cmd_eval,
}


def build_parser() -> argparse.ArgumentParser:
    def add_globals(p, suppress):
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--config", type=Path, default=d(Path("charstyle.json")),
                       help="JSON pipeline config (default: ./charstyle.json)")
        p.add_argument("--seed", type=int, default=d(None), help="override the config seed")
        p.add_argument("--out-dir", type=Path, default=d(None),
                       help="output directory (default: <config dir>/out)")
        p.add_argument("-v", "--verbose", action="store_true", default=d(False))

    parser = argparse.ArgumentParser(prog="charstyle",
                                     description="Structured character-style extraction toolkit.")
    add_globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def char_arg(p):
        p.add_argument("--character", action="append",
                       help="restrict to this character (repeatable; default: all)")

    def refiner_args(p):
        p.add_argument("--model", type=Path, help="refiner model (default: <out-dir>/refiner.model)")
        p.add_argument("--thresholds", type=Path,
                       help="threshold file (default: <out-dir>/thresholds.tsv)")

    p = sub.add_parser("lexicon", parents=[common], help="TF-PMI keyword lexicons")
    char_arg(p)
    p.add_argument("--top-k", type=int, help="lexicon capacity (default from config)")

    p = sub.add_parser("syntax", parents=[common], help="PCFG rule ranking and syntactic vectors")
    char_arg(p)
    p.add_argument("--baseline", help="character whose treebank is the baseline "
                                      "(default: the configured baseline treebank)")
    p.add_argument("--top-k", type=int, help="number of ranked rules to keep")

    p = sub.add_parser("refine", parents=[common], help="train the pragmatic style refiner")
    p.add_argument("--no-train", action="store_true",
                   help="skip training (prediction then fails; useful for checks)")

    p = sub.add_parser("assemble", parents=[common], help="assemble style vectors")
    char_arg(p)
    refiner_args(p)

    p = sub.add_parser("stability", parents=[common], help="N-shot stability curves")
    char_arg(p)
    refiner_args(p)
    p.add_argument("--sizes", help="comma-separated sample sizes")
    p.add_argument("--trials", type=int, help="samples per size")

    p = sub.add_parser("dataset", parents=[common], help="build the rewrite training dataset")
    p.add_argument("--mask", help="comma-separated style components to leave out of prompts")

    p = sub.add_parser("eval", parents=[common], help="metric report, tau table, Pareto frontier")
    p.add_argument("--scores", type=Path, help="scored-sample CSV (default from config)")
    p.add_argument("--points", type=Path, help="CSV of (label, semantic, style) points for the frontier")
    p.add_argument("--tau", type=float, help="semantic gate for Valid Style")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = PipelineConfig.load(args.config)
        if args.seed is not None:
            config.data["seed"] = args.seed
        config.validate()
        args.out_dir = args.out_dir or config.root / "out"
        pipe = Pipeline(config)
        COMMANDS[args.command](args, pipe)
    except StyleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
