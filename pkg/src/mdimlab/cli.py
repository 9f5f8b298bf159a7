"""Command-line entry point: each subcommand builds a config and hands it to the harness."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .harness import EXIT_CONFIG, _convert_summary, _jsonable, run_experiment

# subcommand -> (help, [(flag, config key, type, help)])
_SYSTEM = ("--system", "system", str, "system string, e.g. rotation:1,8 | full_shift:m,W,H | sft:golden,W,H")
_MEASURE = ("--measure", "measures", str, "measure string, repeatable, e.g. bernoulli:0.5,0.5 | parry:golden")
_EPS = ("--eps", "eps", float, "scale eps")
_EPS_GRID = ("--eps-grid", "eps_grid", float, "decreasing scale grid (list)")
_N_RANGE = ("--n-range", "n_range", int, "orders lo hi (two integers)")
_N = ("--n", "n", int, "Bowen order or block length")
_N_MAX = ("--n-max", "n_max", int, "largest block length")
_P = ("--p", "p", float, "distortion exponent p >= 1")
_FAMILY = ("--family", "family", str, "partition family: grid | voronoi | runs | all")
_CENTERS = ("--centers", "centers", int, "number of sampled ball centers")
_SEED = ("--seed", "seeds", int, "base random seed")

COMMANDS: dict[str, tuple[str, list[tuple]]] = {
    "cover": ("covering number #(X, rho_n, eps) with diameter-eps sets",
              [_SYSTEM, _EPS, _EPS_GRID, _N, ("--balls", "balls", bool, "count closed eps-balls instead")]),
    "growth": ("growth rate S(X, rho, T, eps) of covering numbers in n", [_SYSTEM, _EPS, _EPS_GRID, _N_RANGE]),
    "sandwich": ("#(rho_n, diam U) <= N(U^n) <= #(rho_n, Leb U) for the time-zero cylinder cover",
                 [_SYSTEM, _N_MAX]),
    "mdim": ("metric mean dimension: slope of S(eps) against log(1/eps)",
             [("--system", "system", str, "unit_shift_family (default) | rotation_family | a system string"),
              _EPS_GRID, _N_RANGE]),
    "entropy": ("dynamical entropy h_mu(P) of the symbol partition", [_MEASURE, _N_MAX]),
    "mrid": ("mean Renyi information dimension: inf over small partitions of h_mu(P) against log(1/eps)",
             [_MEASURE, _EPS_GRID, _FAMILY, _N_MAX]),
    "idr": ("information dimension rate h_mu(P_m) / log m on grid partitions",
            [_MEASURE, ("--m-grid", "m_grid", int, "increasing grid sizes (list)"), _FAMILY, _N_MAX]),
    "rd-curve": ("rate-distortion curve R(D) of n-blocks by Blahut-Arimoto", [_MEASURE, _N, _P]),
    "rd-dim": ("rate-distortion dimension: R(eps) against log(1/eps)", [_MEASURE, _P, _EPS_GRID, _N]),
    "rd-checks": ("inverse, decomposition and ergodic dominance checks of R(D) and D(R)",
                  [_MEASURE, _N, _P, ("--R-grid", "R_grid", float, "per-letter rates in nats (list)"),
                   _EPS_GRID]),
    "brin-katok": ("Brin-Katok local entropy h^BK(eps) and its bound by small-partition entropy",
                   [_SYSTEM, _MEASURE, _EPS, _N_RANGE, _CENTERS, _SEED, _FAMILY, _N_MAX]),
    "ball-bound": ("ball lower bound mu(B_n(x, eps)) >= eps^(n (mdim + delta)) at sampled centers",
                   [_SYSTEM, _MEASURE, _EPS, ("--delta", "delta", float, "slack delta > 0"),
                    ("--mdim-est", "mdim_est", float, "mean dimension estimate (default 0)"),
                    _N_RANGE, _CENTERS, _SEED]),
    "vp-check": ("both chains between small-partition entropies and S(eps/4), S(eps)",
                 [_SYSTEM, _MEASURE, _EPS, _FAMILY, _N_MAX, _N_RANGE]),
    "mbke": ("Brin-Katok mean dimension and its gap to the metric mean dimension",
             [("--system", "system", str, "unit_shift_family (default) or a system string"), _MEASURE,
              _EPS_GRID, _N_RANGE, _CENTERS, _SEED]),
    "tame": ("tame growth diagnostic eps^delta log #(X, rho, eps)",
             [_SYSTEM, _EPS_GRID, ("--delta-grid", "delta_grid", float, "exponents delta (list)"), _N]),
}
_LISTS = {"eps_grid", "m_grid", "R_grid", "delta_grid", "n_range"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdimlab", description="Finite-scale mean dimension experiments.")
    parser.add_argument("--units", choices=["nats", "bits"], default=None, help="units for entropies and rates")
    parser.add_argument("--out", default=None, help="write summary.json, tables/*.csv and report.txt here")
    parser.add_argument("--config", default=None, help="JSON config; flags given on the command line override it")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, (help_text, flags) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        for flag, dest, typ, h in flags:
            if typ is bool:
                p.add_argument(flag, dest=dest, action="store_true", default=None, help=h)
            elif dest == "measures":
                p.add_argument(flag, dest=dest, action="append", default=None, help=h)
            elif dest in _LISTS:
                p.add_argument(flag, dest=dest, type=typ, nargs="+", default=None, help=h)
            else:
                p.add_argument(flag, dest=dest, type=typ, default=None, help=h)
    return parser


def _config_from(args: argparse.Namespace) -> dict:
    config: dict = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SystemExit(_fail(f"cannot read config: {exc}"))
    if args.command:
        config["experiment"] = args.command
        for _, dest, _, _ in COMMANDS[args.command][1]:
            value = getattr(args, dest, None)
            if value is not None:
                config[dest] = [value] if dest == "seeds" else value
    if args.units:
        config["units"] = args.units
    return config


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_CONFIG


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command and not args.config:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    config = _config_from(args)
    result = run_experiment(config, args.out)
    if result.outcome is None:
        print(f"error: {result.error}", file=sys.stderr)
        return result.exit_code
    units = config.get("units", "nats")
    out = result.outcome
    print(f"experiment: {config['experiment']} (units: {units})")
    for key, verdict in sorted(out.verdicts.items()):
        print(f"verdict {key}: {verdict}")
    summary = _jsonable(_convert_summary(out.summary, out.nat_keys, units))
    for key, value in summary.items():
        print(f"{key}: {json.dumps(value)}")
    for note in out.notes:
        print(f"note: {note}")
    if result.out_dir is not None:
        print(f"artifacts: {result.out_dir}")
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
