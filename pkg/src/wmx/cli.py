"""Command-line interface.

Subcommands cover single-watermark embed/extract, two-watermark ensembles,
augmentation suites, residual visualization, the evaluation harness, and the
discrete toy capacity study. Usage errors exit with status 2 (argparse
conventions); runtime failures print a diagnostic and exit with status 1.
"""

import argparse
import json
import sys

import numpy as np

from . import harness, toymodel
from .augment import SUITE_NAMES, apply_suite, get_suite
from .ecc import parse_code_spec
from .ensemble import EnsembleSpec, ensemble_embed, ensemble_extract
from .image import psnr, read_png, residual as make_residual, export_residual, write_png
from .watermark import (METHOD_IDS, WatermarkerSpec, embed, extract,
                        secret_from_hex, secret_to_hex)


def _add_corpus_flags(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus", help="directory of PNG files")
    src.add_argument("--synthetic", type=int, metavar="N",
                     help="use N generated test images instead of a directory")
    p.add_argument("--size", type=int, default=256,
                   help="synthetic image side length (default 256)")
    p.add_argument("--max-side", type=int, default=512,
                   help="downscale corpus images above this long side (default 512)")


def _add_report_flags(p):
    p.add_argument("--out", help="write the report CSV here")
    p.add_argument("--json", help="write the JSON mirror here")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1, help="trials per image (default 1)")


def _add_spec_flags(p, prefix=""):
    flag = f"--{prefix}" if prefix else "--"
    p.add_argument(f"{flag}method", required=True, choices=METHOD_IDS)
    p.add_argument(f"{flag}key", type=int, default=0)
    p.add_argument(f"{flag}capacity", type=int, default=32)
    p.add_argument(f"{flag}step", type=float, default=None,
                   help="quantization step (method default if omitted)")
    p.add_argument(f"{flag}block", type=int, default=None,
                   help="block size (method default if omitted)")


def _spec_from(args, prefix=""):
    pre = f"{prefix}_" if prefix else ""
    return WatermarkerSpec(
        method_id=getattr(args, f"{pre}method"),
        key=getattr(args, f"{pre}key"),
        capacity_bits=getattr(args, f"{pre}capacity"),
        quantization_step=getattr(args, f"{pre}step"),
        block_size=getattr(args, f"{pre}block"),
    )


def _ensemble_from(args) -> EnsembleSpec:
    code = parse_code_spec(args.code) if args.code else None
    return EnsembleSpec(_spec_from(args, "first"), _spec_from(args, "second"),
                        mode=args.mode, strength=args.strength, code=code)


def _add_ensemble_flags(p):
    _add_spec_flags(p, "first-")
    _add_spec_flags(p, "second-")
    p.add_argument("--mode", choices=("series", "parallel"), default="series")
    p.add_argument("--strength", type=float, default=None,
                   help="PSNR clip strength; omit for no clipping")
    p.add_argument("--code", default=None,
                   help="error-correcting code, e.g. 'extended_hamming(3)'")


def _corpus_from(args) -> harness.Corpus:
    if args.corpus is not None:
        return harness.load_corpus(args.corpus, max_side=args.max_side)
    return harness.synthetic_corpus(count=args.synthetic, size=args.size, seed=args.seed)


def _emit(report, args):
    report.write(csv_path=args.out, json_path=args.json)
    if not args.out:
        sys.stdout.write(report.to_csv())
    summary = {k: v for k, v in report.metadata.items()
               if isinstance(v, float) or k in ("corpus_id", "mean")}
    print(f"# {json.dumps(summary, sort_keys=True, default=float)}", file=sys.stderr)


# -- subcommand handlers -----------------------------------------------------


def _cmd_embed(args):
    spec = _spec_from(args)
    cover = read_png(args.input)
    secret = secret_from_hex(args.secret, spec.capacity_bits)
    marked = embed(spec, cover, secret)
    write_png(marked, args.output)
    print(f"psnr {psnr(marked, cover):.6f}")
    return 0


def _cmd_extract(args):
    spec = _spec_from(args)
    bits = extract(spec, read_png(args.input))
    print(secret_to_hex(bits))
    return 0


def _cmd_ensemble(args):
    spec = _ensemble_from(args)
    cover = read_png(args.input)
    secret = secret_from_hex(args.secret, spec.capacity_bits)
    marked = ensemble_embed(spec, cover, secret)
    write_png(marked, args.output)
    print(f"psnr {psnr(marked, cover):.6f}")
    return 0


def _cmd_ensemble_extract(args):
    spec = _ensemble_from(args)
    message = ensemble_extract(spec, read_png(args.input))
    if message is None:
        print("decode failure: error pattern outside the code's radius", file=sys.stderr)
        return 1
    print(secret_to_hex(message))
    return 0


def _cmd_augment(args):
    img = read_png(args.input)
    out = apply_suite(img, get_suite(args.suite), args.seed)
    write_png(out, args.output)
    return 0


def _cmd_residual(args):
    marked = read_png(args.input)
    cover = read_png(args.reference)
    res = make_residual(marked, cover)
    write_png(export_residual(res, mode=args.mode, gain=args.gain), args.output)
    return 0


def _cmd_eval_accuracy(args):
    report = harness.eval_accuracy(_spec_from(args), _corpus_from(args),
                                   trials_per_image=args.trials, seed=args.seed)
    _emit(report, args)
    return 0


def _cmd_eval_robust(args):
    report = harness.eval_robustness(_spec_from(args), _corpus_from(args), args.suite,
                                     trials_per_image=args.trials, seed=args.seed)
    _emit(report, args)
    return 0


def _parse_method_list(parser, text):
    names = [m.strip() for m in text.split(",") if m.strip()]
    if not names:
        parser.error("--methods must name at least one method")
    for name in names:
        if name not in METHOD_IDS:
            parser.error(f"unknown method {name!r}; valid methods: {', '.join(METHOD_IDS)}")
    return names


def _cmd_eval_coexist(args, parser):
    names = _parse_method_list(parser, args.methods)
    keys = [int(k) for k in args.keys.split(",")] if args.keys else list(range(1, len(names) + 1))
    if len(keys) != len(names):
        parser.error("--keys must list one key per method")
    methods = [WatermarkerSpec(n, key=k, capacity_bits=args.capacity)
               for n, k in zip(names, keys)]
    report = harness.coexistence_matrix(methods, _corpus_from(args), seed=args.seed,
                                        trials_per_image=args.trials)
    _emit(report, args)
    return 0


def _cmd_eval_tradeoff(args):
    spec = _ensemble_from(args)
    strengths = [None if s.strip().lower() == "none" else float(s)
                 for s in args.strengths.split(",")]
    suites = [s.strip() for s in args.suites.split(",") if s.strip()] if args.suites else []
    report = harness.tradeoff_sweep(spec, strengths, _corpus_from(args), suites=suites,
                                    seed=args.seed, trials_per_image=args.trials)
    _emit(report, args)
    return 0


def _cmd_eval_psnr_dist(args):
    spec = _ensemble_from(args)
    report = harness.psnr_distribution(spec, _corpus_from(args), seed=args.seed,
                                       trials_per_image=args.trials,
                                       threshold=args.threshold)
    _emit(report, args)
    return 0


def _parse_rule(parser, text):
    if text == "adjacent":
        return "adjacent", 1
    if text.startswith("ball"):
        radius = text[4:] or "1"
        try:
            return "ball_overlap", int(radius)
        except ValueError:
            pass
    parser.error(f"unknown rule {text!r}; use 'adjacent' or 'ball<radius>' like 'ball1'")


def _cmd_toy(args, parser):
    rule, radius = _parse_rule(parser, args.rule)
    try:
        h, w = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        parser.error(f"--size must look like '1x1', got {args.size!r}")
    center = tuple(int(v) for v in args.center.split(",")) if args.center else None
    cfg = toymodel.ToyConfig(channels=args.channels, height=h, width=w,
                             levels=args.levels, center=center, min_psnr=args.min_psnr,
                             value_range=args.range, conflict_rule=rule,
                             conflict_radius=radius)
    result = toymodel.watermark_sets(cfg)
    sets = [s["points"] for s in result["maximal_sets"]]
    if len(sets) >= 2:
        result["composition_of_top_two"] = toymodel.toy_coexistence(sets[0], sets[1], cfg)
    text = json.dumps(result, indent=2, default=list) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"# rule={result['rule']} ball={result['ball_size']} max={result['max_size']} "
          f"capacity={result['capacity_bits']:.4f} bits", file=sys.stderr)
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wmx",
                                     description="blind watermark coexistence toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a secret into one image")
    _add_spec_flags(p)
    p.add_argument("--secret", required=True, help="hex string sized to the capacity")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("extract", help="extract a secret from one image")
    _add_spec_flags(p)
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("ensemble", help="embed two watermarks at once")
    _add_ensemble_flags(p)
    p.add_argument("--secret", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("ensemble-extract", help="extract an ensembled message")
    _add_ensemble_flags(p)
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=_cmd_ensemble_extract)

    p = sub.add_parser("augment", help="apply a named degradation suite")
    p.add_argument("--suite", required=True, choices=SUITE_NAMES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("residual", help="visualize marked minus cover")
    p.add_argument("--in", dest="input", required=True, help="watermarked image")
    p.add_argument("--ref", dest="reference", required=True, help="cover image")
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--mode", choices=("rgb", "ycbcr", "fourier"), default="rgb")
    p.add_argument("--gain", type=float, default=10.0)
    p.set_defaults(func=_cmd_residual)

    ev = sub.add_parser("eval", help="run a harness experiment")
    evsub = ev.add_subparsers(dest="experiment", required=True)

    p = evsub.add_parser("accuracy", help="clean full-secret accuracy")
    _add_spec_flags(p)
    _add_corpus_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_eval_accuracy)

    p = evsub.add_parser("robust", help="full-secret accuracy under a suite")
    _add_spec_flags(p)
    p.add_argument("--suite", required=True, choices=SUITE_NAMES)
    _add_corpus_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_eval_robust)

    p = evsub.add_parser("coexist", help="ordered-pair coexistence matrix")
    p.add_argument("--methods", required=True,
                   help=f"comma-separated from: {', '.join(METHOD_IDS)}")
    p.add_argument("--keys", default=None, help="comma-separated keys, one per method")
    p.add_argument("--capacity", type=int, default=32)
    _add_corpus_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=lambda a, _p=parser: _cmd_eval_coexist(a, _p))

    p = evsub.add_parser("tradeoff", help="mode x strength sweep of an ensemble")
    _add_ensemble_flags(p)
    p.add_argument("--strengths", required=True,
                   help="comma-separated strengths; 'none' disables clipping")
    p.add_argument("--suites", default=None, help="comma-separated suite names")
    _add_corpus_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_eval_tradeoff)

    p = evsub.add_parser("psnr-dist", help="series vs parallel PSNR distribution")
    _add_ensemble_flags(p)
    p.add_argument("--threshold", type=float, default=35.0)
    _add_corpus_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=_cmd_eval_psnr_dist)

    p = sub.add_parser("toy", help="exact capacity study on a discrete grid")
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--size", default="1x1", help="HxW, e.g. 1x1")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--rule", default="ball1", help="'adjacent' or 'ball<radius>'")
    p.add_argument("--min-psnr", type=float, default=5.0)
    p.add_argument("--range", type=float, default=1.0)
    p.add_argument("--center", default=None, help="comma-separated grid coordinates")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=lambda a, _p=parser: _cmd_toy(a, _p))

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
