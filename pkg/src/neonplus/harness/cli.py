"""Command-line entry point.

Exit codes: 0 success, 1 algorithm non-convergence, 2 configuration error,
3 certification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..errors import ConfigurationError
from .config import MODES, build_config, load_document
from .runs import (LEMMA1_COLUMNS, emit_csv, run_extract, run_lemma1, run_minimize, run_sweep,
                   summarize_sweep, write_rows)

EXIT_OK, EXIT_NONCONVERGENCE, EXIT_CONFIG, EXIT_CERTIFICATION = 0, 1, 2, 3

log = logging.getLogger("neonplus")


class _Parser(argparse.ArgumentParser):
    """Usage errors print to stderr and exit with the configuration-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seeds(text):
    """``N`` means N derived seeds; ``a,b,c`` is an explicit list."""
    try:
        parts = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count or comma-separated seeds, got {text!r}")
    if not parts:
        raise argparse.ArgumentTypeError("empty seed list")
    return parts if "," in text else parts[0]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neonplus", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", help="JSON configuration document")
        p.add_argument("--problem", choices=["quadratic", "quartic"])
        p.add_argument("--dim", type=int)
        p.add_argument("--gamma", type=_floats, help="curvature level; comma list for sweep")
        p.add_argument("--eps", type=float)
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--seeds", type=_seeds, help="seed count N, or an explicit list a,b,c")
        p.add_argument("--eta-scale", type=float, help="step size as a fraction of 1/L1")
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)
    return parser


def _overrides(args) -> dict:
    over = {"problem": {}, "params": {}}
    if args.problem:
        over["problem"]["kind"] = args.problem
    if args.dim is not None:
        over["problem"]["dim"] = args.dim
    if args.gamma is not None:
        if args.mode == "sweep":
            over["params"]["gammas"] = args.gamma
        elif len(args.gamma) == 1:
            over["params"]["gamma"] = args.gamma[0]
        else:
            raise ConfigurationError("a list of gammas is only accepted by sweep")
    if args.eps is not None:
        over["params"]["eps"] = args.eps
    if args.eta_scale is not None:
        over["params"]["eta_scale"] = args.eta_scale
    if isinstance(args.seeds, list):
        over["seeds"] = args.seeds
    elif args.seeds is not None or args.seed is not None:
        over["seeds"] = {}
        if args.seeds is not None:
            over["seeds"]["count"] = args.seeds
        if args.seed is not None:
            over["seeds"]["base_seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    if args.jobs is not None:
        over["jobs"] = args.jobs
    return over


def _config(args):
    doc = load_document(args.config) if args.config else {}
    over = _overrides(args)
    # an explicit list replaces a (base_seed, count) block and vice versa
    if "seeds" in over and isinstance(doc.get("seeds"), (list, dict)):
        if isinstance(over["seeds"], list) or isinstance(doc["seeds"], list):
            doc = {k: v for k, v in doc.items() if k != "seeds"}
    cfg = build_config(doc, over, mode=args.mode)
    if cfg.out is None and args.mode in ("extract", "sweep"):
        raise ConfigurationError(f"{args.mode} needs an output path (--out or 'out' in the config)")
    return cfg


def _run(cfg) -> int:
    if cfg.mode == "extract":
        records = run_extract(cfg)
        emit_csv(records, cfg.out)
        failed = [r for r in records if r.outcome.startswith("error")]
        for r in failed:
            log.error("seed %s: %s", r.seed, r.error)
        return EXIT_NONCONVERGENCE if failed else EXIT_OK

    if cfg.mode == "sweep":
        records = run_sweep(cfg)
        emit_csv(records, cfg.out)
        summary = summarize_sweep(records)
        for mode, s in summary.items():
            slope = "absent" if s["slope"] is None else f"{s['slope']:.4f}"
            log.info("%s: medians %s slope %s", mode, s["median_iterations"], slope)
        with open(cfg.out + ".summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
        return EXIT_OK

    if cfg.mode == "verify-lemma1":
        rows = run_lemma1(cfg)
        if cfg.out is None:
            write_rows(sys.stdout, rows, LEMMA1_COLUMNS)
        else:
            emit_csv(rows, cfg.out, LEMMA1_COLUMNS)
        failed = [r for r in rows if r["outcome"] != "pass"]
        log.info("lemma check: %d/%d pass", len(rows) - len(failed), len(rows))
        return EXIT_CERTIFICATION if failed else EXIT_OK

    records, reports = run_minimize(cfg)
    doc = reports[0] if len(reports) == 1 else reports
    text = json.dumps(doc, indent=2, default=float)
    if cfg.out is None:
        sys.stdout.write(text + "\n")
    else:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    outcomes = {r.outcome for r in records}
    if "error:CertificationError" in outcomes:
        return EXIT_CERTIFICATION
    if any(o.startswith("error") for o in outcomes):
        for r in records:
            if r.error:
                log.error("seed %s: %s", r.seed, r.error)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _config(args)
        return _run(cfg)
    except ConfigurationError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_CONFIG


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
