"""Command-line front end.

Exit codes: 0 ok, 2 bad input, 3 regime refusal, 4 numeric failure.
JSON output uses Python's shortest round-trip float repr; non-finite numbers
are written as null.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Any, Dict, List, Optional

from . import thresholds as th
from .checks import SEED, run_all
from .errors import InvalidInputError, NumericFailure, RegimeError, SizeError, SpinDecayError
from .fptas import EstimateRequest, default_threads, estimate_partition, marginal
from .graph import Spin, SpinParams, check_pins, load_graph
from .oracle import decay_profile, exact_partition

EXIT_OK, EXIT_INPUT, EXIT_REGIME, EXIT_NUMERIC = 0, 2, 3, 4


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def emit(report: Dict[str, Any], as_json: bool, out=None) -> None:
    out = out or sys.stdout
    if as_json:
        out.write(json.dumps(_clean(report), indent=2) + "\n")
        return
    for key, val in report.items():
        if isinstance(val, list) and val and isinstance(val[0], dict):
            out.write(f"{key}:\n")
            for row in val:
                out.write("  " + "  ".join(f"{k}={v}" for k, v in row.items()) + "\n")
        else:
            out.write(f"{key}: {val}\n")


def parse_pin(text: str):
    vid, sep, color = text.partition(":")
    if not sep or not vid.strip().isdigit():
        raise InvalidInputError(f"pin must look like ID:blue or ID:green, got {text!r}")
    return int(vid), Spin.parse(color)


def _pins(args, g) -> Dict[int, Spin]:
    pins: Dict[int, Spin] = {}
    for text in args.pin or []:
        v, c = parse_pin(text)
        if v in pins and pins[v] != c:
            raise InvalidInputError(f"vertex {v} pinned to both colors")
        pins[v] = c
    return check_pins(g, pins)


def _params(args) -> SpinParams:
    return SpinParams(args.beta, args.gamma)


def _regime_dict(rep) -> Dict[str, Any]:
    return {"regime": rep.regime, "swap_applied": rep.swap_applied,
            "threshold_used": rep.threshold_used}


def cmd_partition(args) -> int:
    g = load_graph(args.graph)
    t0 = time.perf_counter()
    est = estimate_partition(EstimateRequest(
        g, _params(args), args.eps, L=args.L, M=args.M, alpha=args.alpha,
        force=args.force, threads=args.threads,
    ))
    report = {
        "n": g.n, "m": g.m, "beta": args.beta, "gamma": args.gamma, "epsilon": args.eps,
        "logZ": est.logZ, "Z": est.Z, "L": est.L, "M": est.M, "alpha": est.alpha,
        **_regime_dict(est.regime),
        "certified": est.certified, "forced": bool(args.force),
        "max_nodes_visited": est.max_nodes_visited,
        "intervals": [
            {"vertex": iv.vertex, "p_lo": iv.p_lo, "p_hi": iv.p_hi} for iv in est.intervals
        ],
    }
    if args.timing:
        report["wall_seconds"] = time.perf_counter() - t0
    emit(report, args.json)
    return EXIT_OK


def cmd_marginal(args) -> int:
    g = load_graph(args.graph)
    pins = _pins(args, g)
    lo, hi = marginal(g, _params(args), args.vertex, pins, args.eps,
                      L=args.L, M=args.M, alpha=args.alpha, force=args.force)
    emit({"vertex": args.vertex, "p_lo": lo, "p_hi": hi}, args.json)
    return EXIT_OK


def cmd_threshold(args) -> int:
    if not 0 <= args.beta < 1:
        raise InvalidInputError(f"threshold needs 0 <= beta < 1, got {args.beta}")
    prof = th.threshold_profile(args.beta, args.gamma)
    report = {
        "beta": prof.beta, "Gamma": prof.Gamma, "D": prof.D, "X": prof.X,
        "Gamma_int": prof.Gamma_int, "gamma": prof.gamma, "alpha": prof.alpha, "M": prof.M,
        "identity1_holds": prof.identities["identity1_holds"],
        "identity2_residual": prof.identities["identity2_residual"],
    }
    emit(report, args.json)
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = load_graph(args.graph)
    pins = _pins(args, g)
    res = exact_partition(g, _params(args), pins)
    emit({"n": g.n, "m": g.m, "Z": res.Z, "logZ": res.log_Z,
          "marginals": [{"vertex": v, "p": p} for v, p in enumerate(res.marginals)]},
         args.json)
    return EXIT_OK


def cmd_decay(args) -> int:
    g = load_graph(args.graph)
    pins = _pins(args, g)
    trace = decay_profile(g, args.vertex, pins, _params(args), args.M,
                          range(args.Lmin, args.Lmax + 1), args.alpha, node_L=args.nodes)
    report = trace.as_dict()
    if trace.nodes:
        report["nodes"] = [
            {"path": list(r.path), "depth": r.depth, "in_ball": r.in_ball,
             "d_blue": r.d_blue, "d_green": r.d_green, "d_free": r.d_free,
             "lo": r.lo, "hi": r.hi, "eps": r.eps}
            for r in trace.nodes
        ]
    emit(report, args.json)
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_all(quick=args.quick, only=args.only, seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    return 1 if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spin-decay",
        description="Approximate counting for two-spin systems via correlation decay.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, graph=True, params=True):
        if graph:
            p.add_argument("--graph", required=True, help="edge-list file")
        if params:
            p.add_argument("--beta", type=float, required=True)
            p.add_argument("--gamma", type=float, required=True)
        p.add_argument("--json", action="store_true", help="machine-readable output")

    def budget(p):
        p.add_argument("--eps", type=float, default=0.05)
        p.add_argument("--L", type=int, default=None, help="depth override (uncertified)")
        p.add_argument("--M", type=int, default=None, help="base override (uncertified)")
        p.add_argument("--alpha", type=float, default=None, help="decay-rate override (uncertified)")
        p.add_argument("--force", action="store_true",
                       help="run outside the guaranteed regime (needs --M and --L or --alpha)")

    p = sub.add_parser("partition", help="estimate the partition function")
    common(p)
    budget(p)
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: SPIN_DECAY_THREADS or 1)")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("marginal", help="bracket the probability that a vertex is blue")
    common(p)
    budget(p)
    p.add_argument("--vertex", type=int, required=True)
    p.add_argument("--pin", action="append", metavar="ID:COLOR")
    p.set_defaults(func=cmd_marginal)

    p = sub.add_parser("threshold", help="uniqueness threshold numerics")
    common(p, graph=False, params=False)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("oracle", help="exact partition function by enumeration")
    common(p)
    p.add_argument("--pin", action="append", metavar="ID:COLOR")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("decay", help="root gap of the truncated recursion versus depth")
    common(p)
    p.add_argument("--vertex", type=int, default=0)
    p.add_argument("--pin", action="append", metavar="ID:COLOR")
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--Lmin", type=int, default=0)
    p.add_argument("--Lmax", type=int, default=12)
    p.add_argument("--nodes", type=int, default=None, metavar="L",
                   help="also emit the per-node trace at this depth")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("check", help="run the acceptance suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", type=int, nargs="+", default=None)
    p.add_argument("--seed", type=int, default=SEED, help="base seed for the random suites")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 0) is None:
        try:
            args.threads = default_threads()
        except InvalidInputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except (InvalidInputError, SizeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RegimeError as exc:
        print(f"regime: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except NumericFailure as exc:
        print(f"numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SpinDecayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
