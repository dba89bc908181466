"""Command-line front end.

Exit codes: 0 success, 1 semantic failure (tuple outside the region,
verification failed), 2 usage / configuration / I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .channel import deactivate, sample
from .io import dump_json
from .oracle import end_to_end_matrix, membership_lp, rank_audit
from .planner import feasibility_report, plan as make_plan
from .region import (
    AntennaConfig,
    DofTuple,
    RegionError,
    build_region,
    enumerate_vertices,
    violations,
)
from .simulate import NOISELESS_TOL, monte_carlo, run_noiseless
from .transceiver import SynthesisError, synthesize

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_power_grid(text: str) -> list[float]:
    """``"40:10:60"`` (start:step:stop, inclusive) or ``"40,50,60"``."""
    try:
        if ":" in text:
            start, step, stop = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(round((stop - start) / step)) + 1
            grid = [start + k * step for k in range(n)]
        else:
            grid = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad power grid {text!r}; use start:step:stop or a comma list")
    if len(grid) < 2:
        raise UsageError("power grid needs at least two points")
    return grid


def _emit(obj, out: str | None) -> None:
    text = dump_json(obj)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_region(args) -> int:
    system = build_region(args.config)
    vertices = enumerate_vertices(system) if args.vertices else None
    _emit(system.to_json(vertices), args.out)
    return EXIT_OK


def _check_payload(config: AntennaConfig, d: DofTuple) -> tuple[dict, bool]:
    system = build_region(config)
    bad = violations(system, d)
    payload = {
        "config": list(config.as_tuple()),
        "dof": d.as_strings(),
        "in_region": not bad,
        "violated": [{"tag": h.tag, "inequality": h.describe()} for h in bad],
    }
    if bad:
        payload["pass"] = False
        return payload, False
    p = make_plan(d, config)
    report = feasibility_report(p)
    payload["plan"] = p.to_json()
    payload["feasibility"] = report.to_json()
    payload["pass"] = report.ok
    return payload, report.ok


def cmd_check(args) -> int:
    payload, ok = _check_payload(args.config, args.dof)
    _emit(payload, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    config, d = args.config, args.dof
    tol = args.tolerance if args.tolerance is not None else 1e-9
    membership = membership_lp(config, d)
    payload = {"config": list(config.as_tuple()), "dof": d.as_strings(), "seed": args.seed,
               "verdicts": [membership.to_json()]}
    ok = membership.passed
    if ok:
        p = make_plan(d, config)
        payload["plan"] = p.to_json()
        try:
            ch = sample(config, p.t, args.seed)
            design = synthesize(p, deactivate(ch, p.relay_dims_per_use), args.seed, args.rank_rtol)
        except SynthesisError as exc:
            payload["verdicts"].append({"subject": "synthesis", "pass": False, "witness": str(exc),
                                        "details": {}})
            ok = False
        else:
            audit = rank_audit(design)
            e2e = end_to_end_matrix(design, tol)
            sim = run_noiseless(design, args.seed)
            payload["verdicts"] += [audit.to_json(), e2e.to_json()]
            payload["noiseless"] = sim.to_json()
            payload["diagnostics"] = design.diagnostics
            ok = audit.passed and e2e.passed and sim.recovered
            if args.save_channel:
                ch.save(args.save_channel)
            if args.save_design:
                design.save(args.save_design)
    payload["pass"] = ok
    _emit(payload, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    config, d = args.config, args.dof
    if violations(build_region(config), d):
        raise UsageError(f"{d} is not in the DoF region of {config}; run 'check' for details")
    grid = parse_power_grid(args.power_grid) if args.mode == "rates" else []
    tol = args.tolerance if args.tolerance is not None else NOISELESS_TOL
    report = monte_carlo(config, d, args.trials, args.seed, args.mode, grid or (40.0, 50.0, 60.0),
                         rtol=args.rank_rtol, tol=tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = "noiseless" if args.mode == "noiseless" else "rates"
    dump_json(report.to_json(), out / f"{stem}_report.json")
    (out / f"{stem}.csv").write_text(report.to_csv())
    if args.save_channels and args.trials:
        p = make_plan(d, config)
        sample(config, p.t, args.seed).save(out / "channel_trial0.ycm")
    summary = {"mode": args.mode, "trials": report.n_trials,
               "failed_synthesis": report.n_failed_synthesis, "out": str(out)}
    if args.mode == "noiseless":
        summary["recovered"] = report.n_recovered
    print(dump_json(summary))
    return EXIT_OK


def _config(text: str) -> AntennaConfig:
    try:
        return AntennaConfig.parse(text)
    except RegionError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _dof(text: str) -> DofTuple:
    try:
        return DofTuple.parse(text)
    except RegionError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ychannel",
        description="DoF region and signal-alignment scheme of the three-user MIMO Y channel.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dof=True):
        p.add_argument("--config", type=_config, required=True, metavar="M1,M2,M3,N",
                       help="antenna counts of users 1-3 and the relay")
        if dof:
            p.add_argument("--dof", type=_dof, required=True, metavar="a,b,c,d,e,f",
                           help="DoF tuple d12,d13,d21,d23,d31,d32; entries as integers or p/q")
        p.add_argument("--out", default=None, help="output file (directory for simulate)")

    p = sub.add_parser("region", help="halfspaces (and optionally vertices) of the DoF region")
    common(p, dof=False)
    p.add_argument("--vertices", action="store_true", help="also enumerate the vertices")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("check", help="membership, pattern plan and feasibility report")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="synthesize for one channel draw and run the oracles")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="channel / design seed (default 0)")
    p.add_argument("--tolerance", type=float, default=None,
                   help="end-to-end tolerance (default 1e-9)")
    p.add_argument("--rank-rtol", type=float, default=None,
                   help="relative SVD rank threshold for synthesis (default max(shape)*eps)")
    p.add_argument("--save-channel", default=None, help="write the channel as a matrix container")
    p.add_argument("--save-design", default=None, help="write the design as a matrix container")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo over channel draws; writes JSON and CSV")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="seed of trial 0; trial k uses seed+k")
    p.add_argument("--trials", type=int, default=100, help="number of channel draws (default 100)")
    p.add_argument("--mode", choices=("noiseless", "rates"), default="noiseless",
                   help="exact recovery check (default) or rate proxy over --power-grid")
    p.add_argument("--power-grid", default="40:10:60",
                   help="dB grid for rates mode, start:step:stop or comma list (default 40:10:60)")
    p.add_argument("--tolerance", type=float, default=None,
                   help=f"noiseless recovery tolerance (default {NOISELESS_TOL:g})")
    p.add_argument("--rank-rtol", type=float, default=None,
                   help="relative SVD rank threshold for synthesis")
    p.add_argument("--save-channels", action="store_true",
                   help="also write trial 0's channel as a matrix container")
    p.set_defaults(func=cmd_simulate, out="ychannel_out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 0) < 0:
        parser.error("--trials must be nonnegative")
    try:
        return args.func(args)
    except (UsageError, RegionError) as exc:
        print(f"ychannel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ychannel: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
