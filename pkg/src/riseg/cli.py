"""Command-line entry point: generate scenes, train the grouping model, run and score suites."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig
from .episode import evaluate_run, format_csv, generate_suite, load_suite, run_suite
from .kde import load_model, save_model
from .training import train_command

log = logging.getLogger("riseg")


def _range(text: str):
    """``"4..6"`` -> (4, 6); ``"5"`` -> (5, 5)."""
    lo, _, hi = text.partition("..")
    try:
        lo_i = int(lo)
        hi_i = int(hi) if hi else lo_i
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected N or LO..HI, got {text!r}") from exc
    if not 1 <= lo_i <= hi_i:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo_i, hi_i


def _config(args) -> RunConfig:
    # raw sections, so a noise override re-derives the sections the file leaves out
    base = json.loads(Path(args.config).read_text()) if args.config else {}
    return RunConfig.from_dict(base, noise_sigma=args.noise_sigma, max_pushes=args.max_pushes, master_seed=args.seed)


def cmd_generate(args) -> int:
    cfg = _config(args)
    scenes = generate_suite(args.count, args.objects, args.seed or 0, args.out, cfg.generator)
    log.info("wrote %d scenes to %s", len(scenes), args.out)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    model = train_command(args.episodes, args.seed or 0, cfg)
    save_model(args.out, model)
    log.info("model: prior_same=%.4f, %s", model.prior_same, model.metadata)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    model = load_model(args.model)
    suite = load_suite(args.suite)
    if not suite:
        log.error("no scene files in %s", args.suite)
        return 2
    _, _, summary = run_suite(suite, model, cfg, args.out)
    print(json.dumps(summary["final"], indent=1, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    rows, summary = evaluate_run(args.run, args.tol_px)
    (Path(args.run) / "metrics_recomputed.csv").write_text(format_csv(rows))
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riseg", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="master seed")
        sp.add_argument("--config", help="run configuration JSON")
        sp.add_argument("--noise-sigma", type=float, default=None, help="flow noise in pixels")
        sp.add_argument("--max-pushes", type=int, default=None)

    g = sub.add_parser("generate", help="write a suite of random scenes")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--objects", type=_range, default=(4, 6), help="N or LO..HI")
    g.add_argument("--out", required=True)
    common(g)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train-kde", help="fit the same-body grouping model")
    t.add_argument("--episodes", type=int, required=True)
    t.add_argument("--out", required=True)
    common(t)
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("run", help="run interactive segmentation on a suite")
    r.add_argument("--suite", required=True)
    r.add_argument("--model", required=True)
    r.add_argument("--out", required=True)
    common(r)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="recompute metrics from a run directory")
    e.add_argument("--run", required=True)
    e.add_argument("--tol-px", type=int, default=None)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
