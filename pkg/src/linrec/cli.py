"""Command-line entry point: ``linrec {run,sweep,bounds,gen-matrix,selftest}``.

Exit status is 0 on success, 2 on a configuration error and 3 when a
resource guard refuses the request.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bounds import ldpc_bound, syndrome_bound, truncation_bound, worst_case_noise_bound
from .compressors import LdpcEnsembleSpec, format_alist, sample_ldpc
from .environment import ResourceError
from .gf import FieldSpec
from .harness import (
    SWEEP_AXES,
    ConfigError,
    ExperimentConfig,
    format_config,
    load_config,
    parse_assignments,
    result_row,
    run_experiment,
    sweep,
    write_csv,
)
from .info import Pmf, entropy
from .selftest import SUITES, run_suites

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE = 0, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma separated list of numbers, got {text!r}") from None


def _experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="key=value config file (env./sys./run. keys)")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--trials", type=int, metavar="N")
    p.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    p.add_argument("--threads", type=int, metavar="N", help="worker processes")
    p.add_argument("--mode", choices=("strict", "score"))
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--print-config", action="store_true", help="echo the resolved configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linrec", description="Linear-encoding pattern recognition experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and emit a CSV row")
    _experiment_flags(p)

    p = sub.add_parser("sweep", help="run an experiment per axis value")
    _experiment_flags(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma separated axis values")

    p = sub.add_parser("bounds", help="print achievable-rate bounds over a rate/noise grid")
    p.add_argument("--r", type=int, default=2, help="field order")
    p.add_argument("--rates", default="0.25,0.5,0.75", help="compression rates (rm = rs)")
    p.add_argument("--q", default="0.01,0.05,0.11,0.2", help="noise levels 1 - Q_z(0)")
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("gen-matrix", help="sample a regular LDPC matrix and write it as alist")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dv", type=int, default=3)
    p.add_argument("--dc", type=int, default=6)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--seed", type=int, default=0, metavar="U64")
    p.add_argument("--out", metavar="PATH", help="alist destination (default stdout)")

    p = sub.add_parser("selftest", help="run the oracle suites")
    p.add_argument("suites", nargs="*", metavar="SUITE", help="any of: " + ", ".join(SUITES))
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Defaults, then the config file, then ``--set`` overrides, then dedicated flags."""
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = parse_assignments(args.set, cfg)
    flags = {k: getattr(args, k) for k in ("seed", "trials", "out", "threads", "mode")}
    return cfg.replace(**{k: v for k, v in flags.items() if v is not None})


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_meta(cfg: ExperimentConfig):
    # resolved config, including run.fixed_system, kept next to the CSV
    if cfg.out:
        Path(cfg.out + ".meta").write_text(format_config(cfg))


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return EXIT_OK
    res = run_experiment(cfg)
    _emit(write_csv([result_row(res)]), cfg.out)
    _write_meta(cfg)
    lo, hi = res.ci
    print(f"p_hat={res.p_hat:.6g} [{lo:.4g}, {hi:.4g}] events={res.events} ({res.wall_seconds:.1f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return EXIT_OK
    _emit(write_csv(sweep(cfg, args.axis, _floats(args.values))), cfg.out)
    _write_meta(cfg)
    return EXIT_OK


def cmd_bounds(args) -> int:
    spec = FieldSpec(args.r)
    rates = _floats(args.rates)
    qs = _floats(args.q)
    header = "r,q,rate,noise_entropy,truncation_uniform,ldpc,syndrome_iid,worst_case\n"
    lines = [header]
    for q in qs:
        if not 0 < q < 1:
            raise ConfigError(f"q: must lie in (0, 1), got {q}")
        qz = Pmf.symmetric(spec, q)
        hz = entropy(qz)
        for rate in rates:
            if not 0 < rate <= 1:
                raise ConfigError(f"rates: must lie in (0, 1], got {rate}")
            trunc = truncation_bound(rate, rate, Pmf.uniform(spec), qz)
            ldpc = f"{float(ldpc_bound(rate, rate, q)):.6g}" if args.r == 2 else ""
            synd = syndrome_bound(rate, rate, hz)
            worst, _ = worst_case_noise_bound(args.r, q, rate)
            lines.append(f"{args.r},{q:.6g},{rate:.6g},{hz:.6g},{trunc:.6g},{ldpc},{synd:.6g},{worst:.6g}\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


def cmd_gen_matrix(args) -> int:
    ens = LdpcEnsembleSpec(args.n, args.dv, args.dc, FieldSpec(args.r), seed=args.seed)
    _emit(format_alist(sample_ldpc(ens)), args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    unknown = [s for s in args.suites if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    results = run_suites(args.suites or None)
    for res in results:
        print(res.line())
    return EXIT_OK if all(r.passed for r in results) else 1


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "bounds": cmd_bounds,
    "gen-matrix": cmd_gen_matrix,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except ResourceError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError) as exc:
        # ConfigError and any bad parameter caught by a constructor
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
