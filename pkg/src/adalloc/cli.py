"""Command-line entry point: ``adalloc {gen,solve,eval,oracle,certify,bench}``.

Exit codes: 0 ok, 1 input error, 2 solver abort. Errors are printed to
stdout as ``{"error": {"kind": ..., "message": ...}}``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from .certify import certify
from .model import (
    Allocation,
    AttentionConstraints,
    FormatError,
    GENERATOR_KINDS,
    generate_synthetic,
    parse_campaign,
    parse_constraints,
    parse_graph,
    serialize_graph,
)
from .objectives import PenaltyParams, auto_phi, evaluate
from .propagation import ExactSpread, LiveEdgeEnsemble
from .solvers import (
    PhiInsufficientError,
    brute_force_opt,
    double_greedy_urmp,
    greedy_p1,
    greedy_p2,
    greedy_rmp,
)

EXIT_OK, EXIT_INPUT, EXIT_ABORT = 0, 1, 2
PROBLEMS = ("rmp", "p1", "urmp", "p2")


class InputError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError("io", f"cannot read {what} file {path!r}: {exc.strerror or exc}") from None


def _dump(payload, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    rows = payload.get("objective_values", payload).get("per_ad", [])
    buf = io.StringIO()
    fields = ["ad", "sigma", "U", "V", "alpha", "budget", "seeds"]
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        row = dict(row)
        row["seeds"] = " ".join(str(u) for u in row.get("seeds", []))
        writer.writerow(row)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_generate(spec: str, seed: int):
    # KIND:USERS:ADS:PROB[:DENSITY]
    parts = spec.split(":")
    if len(parts) not in (4, 5):
        raise InputError("validation", f"--generate expects KIND:USERS:ADS:PROB[:DENSITY], got {spec!r}")
    try:
        kind, users, ads, prob = parts[0], int(parts[1]), int(parts[2]), float(parts[3])
        density = float(parts[4]) if len(parts) == 5 else 0.3
        return generate_synthetic(kind, users, ads, prob, seed, density)
    except ValueError as exc:
        raise InputError("validation", str(exc)) from None


def _load_graph(args):
    if bool(args.graph) == bool(args.generate):
        raise InputError("validation", "give exactly one of --graph or --generate")
    if args.generate:
        return _parse_generate(args.generate, args.seed)
    try:
        return parse_graph(_read(args.graph, "graph"))
    except (FormatError, ValueError) as exc:
        raise InputError("parse", f"graph: {exc}") from None


def _load_campaign(args, num_ads: int):
    if not args.campaign:
        raise InputError("validation", "--campaign is required")
    try:
        campaign = parse_campaign(_read(args.campaign, "campaign"))
    except FormatError as exc:
        raise InputError("parse", f"campaign: {exc}") from None
    if campaign.num_ads != num_ads:
        raise InputError("validation", f"campaign lists {campaign.num_ads} ads but the graph has {num_ads}")
    return campaign


def _load_constraints(args, num_users: int, num_ads: int) -> AttentionConstraints:
    K = args.K if args.K is not None else num_users * num_ads
    if K < 0:
        raise InputError("validation", "--K must be nonnegative")
    if args.kappa is None:
        return AttentionConstraints((num_ads,) * num_users, K)
    try:
        kappa = int(args.kappa)
    except ValueError:
        kappa = None
    if kappa is not None:
        if kappa < 0:
            raise InputError("validation", "--kappa must be nonnegative")
        return AttentionConstraints((kappa,) * num_users, K)
    text = _read(args.kappa, "constraints")
    try:
        parsed = parse_constraints(text, num_users)
    except FormatError as exc:
        raise InputError("parse", f"constraints: {exc}") from None
    return parsed if args.K is None else AttentionConstraints(parsed.kappa, args.K)


def _spread(args, graph):
    if args.exact_spread:
        try:
            return ExactSpread(graph)
        except ValueError as exc:
            raise InputError("validation", str(exc)) from None
    if args.samples < 1:
        raise InputError("validation", "--samples must be >= 1")
    return LiveEdgeEnsemble(graph, args.samples, args.seed)


def _params(args, required: bool) -> PenaltyParams:
    if args.lambda1 < 0 or args.lambda2 < 0:
        raise InputError("validation", "--lambda1/--lambda2 must be nonnegative")
    if args.phi is None:
        if required:
            raise InputError("validation", "--phi is required (a number or 'auto') for this problem")
        return PenaltyParams(args.lambda1, args.lambda2, 0.0)
    if args.phi == "auto":
        return PenaltyParams(args.lambda1, args.lambda2, None)
    try:
        phi = float(args.phi)
    except ValueError:
        raise InputError("validation", f"--phi must be a number or 'auto', got {args.phi!r}") from None
    if phi < 0:
        raise InputError("validation", "--phi must be nonnegative")
    return PenaltyParams(args.lambda1, args.lambda2, phi)


def _inputs(args):
    graph = _load_graph(args)
    campaign = _load_campaign(args, graph.num_ads)
    constraints = _load_constraints(args, graph.num_users, graph.num_ads)
    return graph, campaign, constraints, _spread(args, graph)


def cmd_gen(args) -> int:
    try:
        graph = generate_synthetic(args.kind, args.users, args.ads, args.prob, args.seed, args.density)
    except ValueError as exc:
        raise InputError("validation", str(exc)) from None
    _emit(serialize_graph(graph), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    randomized = args.problem in ("urmp", "p2")
    if not randomized and args.phi is not None:
        raise InputError("validation", f"--phi applies only to urmp and p2, not {args.problem}")
    params = _params(args, required=randomized)
    graph, campaign, constraints, spread = _inputs(args)
    if params.phi is None:
        params = params.with_phi(auto_phi(campaign, constraints, params, spread))
    if args.problem == "rmp":
        result = greedy_rmp(spread, campaign, constraints, lazy=not args.naive, strict=args.strict, params=params)
    elif args.problem == "p1":
        result = greedy_p1(spread, campaign, constraints, lazy=not args.naive, strict=args.strict, params=params)
    else:
        solver = double_greedy_urmp if args.problem == "urmp" else greedy_p2
        result = solver(spread, campaign, constraints, params, args.seed)
    payload = result.to_dict(campaign)
    payload["seed"] = args.seed
    payload["spread"] = _spread_info(args)
    _emit(_dump(payload, args.format), args.out)
    return EXIT_OK


def _spread_info(args) -> dict:
    return {"mode": "exact"} if args.exact_spread else {"mode": "sampled", "samples": args.samples,
                                                         "seed": args.seed}


def _load_allocation(path: str, num_ads: int, num_users: int) -> Allocation:
    try:
        data = json.loads(_read(path, "allocation"))
    except json.JSONDecodeError as exc:
        raise InputError("parse", f"allocation: {exc}") from None
    if isinstance(data, dict):
        data = data.get("allocation")
    if not isinstance(data, list) or not all(isinstance(s, list) for s in data):
        raise InputError("parse", "allocation must be a list of per-ad user lists or a solve result")
    try:
        alloc = Allocation(tuple(frozenset(int(u) for u in s) for s in data))
        alloc.validate(num_users, num_ads)
    except (TypeError, ValueError) as exc:
        raise InputError("validation", f"allocation: {exc}") from None
    return alloc


def cmd_eval(args) -> int:
    graph, campaign, constraints, spread = _inputs(args)
    params = _params(args, required=False) if args.phi is not None else PenaltyParams(args.lambda1, args.lambda2, None)
    alloc = _load_allocation(args.allocation, graph.num_ads, graph.num_users)
    report = evaluate(alloc, campaign, spread, constraints, params)
    payload = report.to_dict(alloc, campaign)
    _emit(_dump(payload, args.format), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    graph, campaign, constraints, spread = _inputs(args)
    params = _params(args, required=False) if args.phi is not None else PenaltyParams(args.lambda1, args.lambda2, None)
    try:
        result = brute_force_opt(args.objective, spread, campaign, constraints, params)
    except ValueError as exc:
        raise InputError("validation", str(exc)) from None
    payload = result.to_dict(campaign)
    payload["value"] = result.report.value(args.objective)
    payload["spread"] = _spread_info(args)
    _emit(_dump(payload, args.format), args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    if args.instances < 0 or args.trials < 1:
        raise InputError("validation", "--instances must be >= 0 and --trials >= 1")
    try:
        report = certify(args.problem, args.instances, args.seed, args.trials, args.jobs)
    except ValueError as exc:
        raise InputError("validation", str(exc)) from None
    _emit(_dump(report), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    """Wall-clock timings; the only command whose output is not reproducible."""
    graph = _load_graph(args)
    campaign = _load_campaign(args, graph.num_ads)
    constraints = _load_constraints(args, graph.num_users, graph.num_ads)
    params = PenaltyParams(args.lambda1, args.lambda2, None)
    t0 = time.perf_counter()
    spread = _spread(args, graph)
    timings = {"spread_build": time.perf_counter() - t0}
    params = params.with_phi(auto_phi(campaign, constraints, params, spread))
    runs = {
        "rmp_lazy": lambda: greedy_rmp(spread, campaign, constraints),
        "rmp_naive": lambda: greedy_rmp(spread, campaign, constraints, lazy=False),
        "p1": lambda: greedy_p1(spread, campaign, constraints),
        "urmp": lambda: double_greedy_urmp(spread, campaign, constraints, params, args.seed),
        "p2": lambda: greedy_p2(spread, campaign, constraints, params, args.seed),
    }
    values = {}
    for name, run in runs.items():
        t0 = time.perf_counter()
        res = run()
        timings[name] = time.perf_counter() - t0
        values[name] = {"U": res.report.U, "V": res.report.V, "f": res.report.f, "f_prime": res.report.f_prime}
    payload = {"users": graph.num_users, "ads": graph.num_ads, "edges": graph.num_edges(),
               "spread": _spread_info(args), "seconds": timings, "objectives": values}
    _emit(_dump(payload), args.out)
    return EXIT_OK


def _add_shared(p: argparse.ArgumentParser, *, solve_flags: bool = True) -> None:
    p.add_argument("--graph", help="graph edge-list file")
    p.add_argument("--generate", metavar="KIND:USERS:ADS:PROB[:DENSITY]",
                   help="synthesize the graph instead of reading --graph")
    p.add_argument("--campaign", help="campaign file with 'ad alpha budget' lines")
    p.add_argument("--kappa", help="uniform per-user limit, or a constraints file")
    p.add_argument("--K", type=int, help="overall attention limit (default: users * ads)")
    p.add_argument("--samples", type=int, default=10000, help="live-edge samples R (default 10000)")
    p.add_argument("--exact-spread", action="store_true",
                   help="enumerate every live-edge pattern (at most 15 edges per ad)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=0.0)
    p.add_argument("--phi", help="shift constant: a number or 'auto'")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic graph file")
    p.add_argument("--kind", required=True, choices=GENERATOR_KINDS)
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--ads", type=int, default=1)
    p.add_argument("--prob", type=float, default=0.5)
    p.add_argument("--density", type=float, default=0.3, help="edge density for erdos-renyi")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run a solver and print the result")
    _add_shared(p)
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--naive", action="store_true", help="full rescan greedy instead of lazy")
    p.add_argument("--strict", action="store_true",
                   help="keep adding zero-gain pairs until infeasible or all budgets are met")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="evaluate every objective on an allocation")
    _add_shared(p)
    p.add_argument("--allocation", required=True,
                   help="JSON list of per-ad user lists, or a solve result")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="exhaustive optimum of a small instance")
    _add_shared(p)
    p.add_argument("--objective", required=True, choices=("U", "V", "f", "fprime"))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("certify", help="approximation-ratio certification on random instances")
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--trials", type=int, default=2000, help="seeded runs per instance (urmp, p2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bench", help="time every solver on one instance")
    _add_shared(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stdout.write(json.dumps({"error": {"kind": exc.kind, "message": str(exc)}}) + "\n")
        return EXIT_INPUT
    except PhiInsufficientError as exc:
        sys.stdout.write(json.dumps({"error": {"kind": "solver_abort", "message": str(exc),
                                               "phi": exc.phi, "f_prime": exc.value}}) + "\n")
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
