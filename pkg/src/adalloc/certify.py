"""Ratio certification: solvers against the exhaustive oracle on random small instances."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import AttentionConstraints, Campaign, Advertiser, Edge, HyperSocialGraph, derive_seed
from .objectives import PenaltyParams, auto_phi
from .propagation import ExactSpread
from .solvers import brute_force_opt, double_greedy_urmp, greedy_p1, greedy_p2, greedy_rmp

__all__ = ["BOUNDS", "Instance", "certify", "random_instance", "run_instance"]

BOUNDS = {"rmp": 0.5, "p1": 0.25, "urmp": 0.5, "p2": 0.25}
# objective the solver is scored on, per problem
SCORED = {"rmp": "V", "p1": "U", "urmp": "fprime", "p2": "f"}
RANDOMIZED = ("urmp", "p2")
TOL = 1e-9


@dataclass(frozen=True)
class Instance:
    graph: HyperSocialGraph
    campaign: Campaign
    constraints: AttentionConstraints
    params: PenaltyParams

    def spread(self) -> ExactSpread:
        return ExactSpread(self.graph)


def random_instance(seed: int, *, max_users: int = 5, max_ads: int = 2, max_ground: int = 10,
                    max_edges: int = 10, edge_density: float = 0.35, two_seed: bool = False,
                    penalties: bool = False) -> Instance:
    """Draw a small instance whose spread can be enumerated exactly.

    With ``two_seed`` every budget exceeds the revenue of the best single
    seed, so each ad needs at least two seeds to reach it. With
    ``penalties`` the weights are random and ``phi`` is computed
    automatically; otherwise both weights are zero.
    """
    rng = np.random.default_rng(seed)
    while True:
        n = int(rng.integers(2, max_users + 1))
        m = int(rng.integers(1, max_ads + 1))
        if n * m <= max_ground:
            break
    per_ad = []
    for _ in range(m):
        edges = []
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < edge_density:
                    p = 1.0 if rng.random() < 0.2 else round(float(rng.uniform(0.1, 0.9)), 3)
                    edges.append(Edge(u, v, p))
        if len(edges) > max_edges:
            keep = sorted(rng.choice(len(edges), size=max_edges, replace=False).tolist())
            edges = [edges[i] for i in keep]
        per_ad.append(tuple(edges))
    graph = HyperSocialGraph(n, tuple(per_ad))
    spread = ExactSpread(graph)

    advertisers = []
    for ad in range(m):
        alpha = round(float(rng.uniform(0.5, 2.0)), 3)
        full = spread.spread(ad, range(n))
        if two_seed:
            single = max(spread.spread(ad, {u}) for u in range(n))
            low = alpha * single * 1.05
            high = max(low * 1.5, alpha * full * 1.2)
            budget = float(rng.uniform(low, high))
        else:
            budget = float(rng.uniform(0.3, 1.2)) * alpha * full
        advertisers.append(Advertiser(alpha, budget))
    campaign = Campaign(tuple(advertisers))

    kappa = tuple(int(k) for k in rng.integers(1, m + 1, size=n))
    constraints = AttentionConstraints(kappa, int(rng.integers(1, n * m + 1)))
    if penalties:
        params = PenaltyParams(round(float(rng.uniform(0, 1.5)), 3), round(float(rng.uniform(0, 1.5)), 3),
                               phi=None)
        params = params.with_phi(auto_phi(campaign, constraints, params, spread))
    else:
        params = PenaltyParams()
    return Instance(graph, campaign, constraints, params)


def _instance_for(problem: str, seed: int, index: int) -> Instance:
    sub = derive_seed(seed, "certify", problem, index)
    if problem == "rmp":
        return random_instance(sub)
    if problem == "p1":
        return random_instance(sub, two_seed=True)
    return random_instance(sub, max_users=8, max_ground=16, two_seed=True, penalties=True)


def run_instance(problem: str, seed: int, index: int, trials: int = 1) -> dict:
    """Certify one instance; returns a JSON-ready row."""
    inst = _instance_for(problem, seed, index)
    spread = inst.spread()
    objective = SCORED[problem]
    bound = BOUNDS[problem]
    constraints = inst.constraints if problem in ("rmp", "p1") else None
    opt = brute_force_opt(objective, spread, inst.campaign, inst.constraints, inst.params,
                          enforce_constraints=constraints is not None).report.value(objective)
    row = {
        "index": index,
        "users": inst.graph.num_users,
        "ads": inst.graph.num_ads,
        "edges": [len(e) for e in inst.graph.per_ad_edges],
        "opt": opt,
    }
    if problem in RANDOMIZED:
        solver = double_greedy_urmp if problem == "urmp" else greedy_p2
        values = []
        min_fp = math.inf
        for t in range(trials):
            res = solver(spread, inst.campaign, inst.constraints, inst.params,
                         derive_seed(seed, "trial", problem, index, t))
            values.append(res.report.value(objective))
            min_fp = min(min_fp, res.trace.min_f_prime)
        mean = float(np.mean(values))
        se = float(np.std(values, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        row.update(mean=mean, se=se, min_visited_f_prime=min_fp, phi=inst.params.phi,
                   ok=bool(mean >= bound * opt - 3.0 * se - TOL * max(1.0, abs(opt))))
        achieved = mean
    else:
        solver = greedy_rmp if problem == "rmp" else greedy_p1
        res = solver(spread, inst.campaign, inst.constraints)
        achieved = res.report.value(objective)
        row.update(value=achieved, feasible=_feasible(res.allocation, inst.constraints),
                   ok=bool(achieved >= bound * opt - TOL * max(1.0, abs(opt))))
    row["ratio"] = achieved / opt if opt > 0 else 1.0
    return row


def _feasible(alloc, constraints) -> bool:
    from .feasibility import is_independent
    return is_independent(alloc.pairs(), constraints)


def _run_packed(args):
    return run_instance(*args)


def certify(problem: str, instances: int, seed: int = 0, trials: int = 2000, jobs: int = 1) -> dict:
    """Run ``instances`` random instances and summarize the observed ratios.

    Each instance is seeded from ``(seed, problem, index)`` alone, so the
    report does not depend on ``jobs``.
    """
    if problem not in BOUNDS:
        raise ValueError(f"unknown problem {problem!r}; expected one of {tuple(BOUNDS)}")
    trials = trials if problem in RANDOMIZED else 1
    work = [(problem, seed, i, trials) for i in range(instances)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_packed, work))
    else:
        rows = [_run_packed(w) for w in work]
    ratios = [r["ratio"] for r in rows]
    violations = sum(1 for r in rows if not r["ok"])
    return {
        "problem": problem,
        "objective": SCORED[problem],
        "bound": BOUNDS[problem],
        "instances": instances,
        "trials": trials,
        "seed": seed,
        "min_ratio": min(ratios) if ratios else None,
        "mean_ratio": float(np.mean(ratios)) if ratios else None,
        "violations": violations,
        "pass": violations == 0,
        "results": rows,
    }
