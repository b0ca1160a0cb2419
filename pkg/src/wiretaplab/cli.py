"""Command line entry point: ``wiretaplab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, InvariantViolation, WiretapLabError
from .gf2lfsr import ConnectionPolynomial, table_polynomial
from .harness import (
    ExperimentConfig,
    info_report,
    run_attack1_sweep,
    run_attack2_exit,
    write_attack1_outputs,
    write_attack2_outputs,
    write_text,
)
from .selftest import run_selftest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

# defaults when no --config is given
SWEEP_DEFAULTS = {"poly": table_polynomial(15).hex, "k": 15, "n": 1500, "trials": 50}
EXIT_DEFAULTS = {"poly": table_polynomial(31).hex, "k": 31, "n": 3100, "p1": 0.2,
                 "p2": 0.0, "alpha": 5, "d": 20, "trials": 100}

log = logging.getLogger("wiretaplab")


def parse_k_poly(text: str) -> tuple[str, int]:
    """``"15"`` selects the built-in table entry, ``"8213:15"`` is hex:degree."""
    if ":" in text:
        hex_part, deg = text.split(":", 1)
        poly = ConnectionPolynomial.from_hex(hex_part, int(deg))
    else:
        poly = table_polynomial(int(text))
    return poly.hex, poly.degree


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--k-poly", dest="k_poly", help="degree (table) or hex:degree")
    p.add_argument("--alpha", type=int)
    p.add_argument("--bins", dest="d", type=int)
    p.add_argument("--max-rounds", dest="max_rounds", type=int)
    p.add_argument("--max-trials", dest="max_trials", type=int)
    p.add_argument("--mode", choices=["reproduce", "realistic"])
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wiretaplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    a1 = sub.add_parser("attack1-sweep", help="trial counts of attack 1 over a p' grid")
    _add_common(a1)
    a1.add_argument("--grid", type=str, help="comma separated p' values")
    a2 = sub.add_parser("attack2-exit", help="EXIT chart of attack 2")
    _add_common(a2)
    info = sub.add_parser("info", help="closed-form information quantities")
    _add_common(info)
    info.add_argument("--p-m", dest="p_m", type=float)
    info.add_argument("--p-w", dest="p_w", type=float)
    sub.add_parser("selftest", help="run small-instance oracle checks")
    return parser


def load_config(args: argparse.Namespace, defaults: dict) -> ExperimentConfig:
    data = dict(defaults)
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(str(exc), "config") from None
        data.update(ExperimentConfig.from_json(text).to_dict())
    overrides = {
        k: getattr(args, k, None)
        for k in ("seed", "trials", "out", "p1", "p2", "n", "alpha", "d",
                  "max_rounds", "max_trials", "mode", "workers", "p_m", "p_w")
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "k_poly", None):
        try:
            data["poly"], data["k"] = parse_k_poly(args.k_poly)
        except (WiretapLabError, ValueError) as exc:
            raise ConfigError(str(exc), "k-poly") from None
    if getattr(args, "grid", None):
        try:
            data["p_grid"] = [float(x) for x in args.grid.split(",")]
        except ValueError as exc:
            raise ConfigError(str(exc), "grid") from None
    return ExperimentConfig.from_dict(data)


def _cmd_attack1(args) -> int:
    cfg = load_config(args, SWEEP_DEFAULTS)
    points = run_attack1_sweep(cfg)
    for path in write_attack1_outputs(cfg, points):
        print(path)
    for pt in points:
        print(f"p'={pt.p_prime:.3f}  I={pt.mi_closed_form:.4f}  median={pt.median_trials:g}  "
              f"mean={pt.mean_trials:.1f}  estimate={pt.estimate:.1f}")
    return EXIT_OK


def _cmd_attack2(args) -> int:
    cfg = load_config(args, EXIT_DEFAULTS)
    report = run_attack2_exit(cfg)
    for path in write_attack2_outputs(cfg, report):
        print(path)
    print(f"success_rate={report.success_rate:.3f} verdict={report.verdict} "
          f"first_round_mean_correction={report.first_round_mean_correction}")
    return EXIT_OK


def _cmd_info(args) -> int:
    cfg = load_config(args, EXIT_DEFAULTS)
    report = info_report(cfg)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        write_text(Path(cfg.out) / "info.json", text + "\n")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    results = run_selftest()
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_INVARIANT


COMMANDS = {
    "attack1-sweep": _cmd_attack1,
    "attack2-exit": _cmd_attack2,
    "info": _cmd_info,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
