"""Seed-allocation solvers and the exhaustive oracle.

* :func:`greedy_rmp` -- greedy on capped revenue under the attention matroid.
* :func:`greedy_p1` -- greedy_rmp plus a last-seed removal pass for capped ads.
* :func:`double_greedy_urmp` -- randomized double greedy on the shifted,
  penalized revenue, one ad at a time.
* :func:`greedy_p2` -- double greedy plus a weakest-seed removal pass.
* :func:`brute_force_opt` -- enumerates every allocation of a small instance.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .model import Allocation, AttentionConstraints, Campaign
from .objectives import (
    ObjectiveReport,
    PenaltyParams,
    ad_revenue,
    ad_utility,
    attention_cost,
    auto_phi,
    evaluate,
)
from .propagation import SpreadOracle

__all__ = [
    "PhiInsufficientError",
    "SolveResult",
    "SolverTrace",
    "brute_force_opt",
    "double_greedy_urmp",
    "greedy_p1",
    "greedy_p2",
    "greedy_rmp",
]

ORACLE_LIMIT = 16
OBJECTIVES = ("U", "V", "f", "fprime")


class PhiInsufficientError(RuntimeError):
    """The shift constant let the penalized revenue go negative."""

    def __init__(self, value: float, phi: float, ad: int, user: int):
        self.value, self.phi, self.ad, self.user = value, phi, ad, user
        super().__init__(f"f' = {value!r} < 0 while processing ad {ad}, user {user} "
                         f"(phi = {phi!r}); use a larger phi or --phi auto")


@dataclass
class SolverTrace:
    """What a solver did, in order.

    ``insertion_order[ad]`` lists ``(user, revenue gain)`` at insertion time;
    ``global_gains`` is the chosen marginal at each greedy step;
    ``removed_users[ad]`` is the seed dropped by post-processing, if any.
    """

    insertion_order: list[list[tuple[int, float]]]
    stop_reason: str | None = None
    removed_users: list[int | None] = field(default_factory=list)
    global_gains: list[float] = field(default_factory=list)
    min_f_prime: float | None = None

    def to_dict(self) -> dict:
        return {
            "insertion_order": [[[u, g] for u, g in ad] for ad in self.insertion_order],
            "stop_reason": self.stop_reason,
            "removed_users": list(self.removed_users),
            "global_gains": list(self.global_gains),
            "min_f_prime": self.min_f_prime,
        }


@dataclass(frozen=True)
class SolveResult:
    problem: str
    allocation: Allocation
    report: ObjectiveReport
    trace: SolverTrace
    rng_seed: int | None
    params: PenaltyParams

    def to_dict(self, campaign: Campaign | None = None) -> dict:
        return {
            "problem": self.problem,
            "allocation": self.allocation.to_lists(),
            "objective_values": self.report.to_dict(self.allocation, campaign),
            "trace": self.trace.to_dict(),
            "seed": self.rng_seed,
            "params": {"lambda1": self.params.lambda1, "lambda2": self.params.lambda2,
                       "phi": self.params.phi},
        }


def _at_cap(alpha: float, budget: float, sigma: float, rtol: float) -> bool:
    return alpha * sigma >= budget * (1.0 - rtol)


def greedy_rmp(spread: SpreadOracle, campaign: Campaign, constraints: AttentionConstraints, *,
               lazy: bool = True, strict: bool = False,
               params: PenaltyParams | None = None) -> SolveResult:
    """Greedy maximization of capped revenue subject to the attention limits.

    Each step adds the feasible (user, ad) pair with the largest revenue
    gain, ties going to the lowest user and then the lowest ad. The run
    stops once every ad is at its budget (``budget_reached``) or no feasible
    pair is left (``exhausted``). Unless ``strict`` is set it also stops when
    the best gain is not positive, since zero-gain pairs only spend
    attention.

    ``lazy`` re-evaluates stale heap entries only when they surface, which
    is exact because revenue is submodular for a fixed spread oracle;
    ``lazy=False`` rescans every pair at every step.
    """
    n, m = spread.num_users, campaign.num_ads
    alphas = [a.alpha for a in campaign.advertisers]
    budgets = [a.budget for a in campaign.advertisers]
    rtol = spread.cap_rtol
    kappa, K = constraints.kappa, constraints.K

    sets: list[set[int]] = [set() for _ in range(m)]
    revenue = [0.0] * m
    capped = [_at_cap(alphas[j], budgets[j], 0.0, rtol) for j in range(m)]
    counts = [0] * n
    total = 0
    trace = SolverTrace(insertion_order=[[] for _ in range(m)])

    def gain(u: int, ad: int) -> float:
        if capped[ad]:
            return 0.0
        sig = spread.spread(ad, sets[ad] | {u})
        return ad_revenue(alphas[ad], budgets[ad], sig) - revenue[ad]

    def select(u: int, ad: int, g: float) -> None:
        nonlocal total
        sets[ad].add(u)
        sig = spread.spread(ad, sets[ad])
        revenue[ad] = ad_revenue(alphas[ad], budgets[ad], sig)
        capped[ad] = _at_cap(alphas[ad], budgets[ad], sig, rtol)
        counts[u] += 1
        total += 1
        trace.insertion_order[ad].append((u, g))
        trace.global_gains.append(g)

    if lazy:
        version = [0] * m
        heap = [(-gain(u, ad), u, ad, 0) for u in range(n) for ad in range(m)
                if counts[u] < kappa[u]]
        heapq.heapify(heap)
        while True:
            if all(capped):
                trace.stop_reason = "budget_reached"
                break
            if total >= K or not heap:
                trace.stop_reason = "exhausted"
                break
            neg, u, ad, ver = heapq.heappop(heap)
            if counts[u] >= kappa[u]:
                continue
            if ver != version[ad]:
                heapq.heappush(heap, (-gain(u, ad), u, ad, version[ad]))
                continue
            if -neg <= 0.0 and not strict:
                trace.stop_reason = "exhausted"
                break
            select(u, ad, -neg)
            version[ad] += 1
    else:
        while True:
            if all(capped):
                trace.stop_reason = "budget_reached"
                break
            best = None
            if total < K:
                for u in range(n):
                    if counts[u] >= kappa[u]:
                        continue
                    for ad in range(m):
                        if u in sets[ad]:
                            continue
                        key = (-gain(u, ad), u, ad)
                        if best is None or key < best:
                            best = key
            if best is None or (-best[0] <= 0.0 and not strict):
                trace.stop_reason = "exhausted"
                break
            select(best[1], best[2], -best[0])

    trace.removed_users = [None] * m
    alloc = Allocation(tuple(frozenset(s) for s in sets))
    params = params or PenaltyParams()
    report = evaluate(alloc, campaign, spread, constraints, params)
    return SolveResult("rmp", alloc, report, trace, None, report_params(params, report))


def report_params(params: PenaltyParams, report: ObjectiveReport) -> PenaltyParams:
    return params if params.phi is not None else params.with_phi(report.phi)


def greedy_p1(spread: SpreadOracle, campaign: Campaign, constraints: AttentionConstraints, *,
              lazy: bool = True, strict: bool = False,
              params: PenaltyParams | None = None) -> SolveResult:
    """Greedy revenue allocation, then drop the last seed of each capped ad when that does not lower its utility."""
    base = greedy_rmp(spread, campaign, constraints, lazy=lazy, strict=strict, params=params)
    sets = list(base.allocation.seed_sets)
    removed: list[int | None] = [None] * campaign.num_ads
    for ad, a in enumerate(campaign.advertisers):
        order = base.trace.insertion_order[ad]
        if not order:
            continue
        sig = spread.spread(ad, sets[ad])
        if not _at_cap(a.alpha, a.budget, sig, spread.cap_rtol):
            continue
        last = order[-1][0]
        without = sets[ad] - {last}
        if ad_utility(a.alpha, a.budget, spread.spread(ad, without)) >= ad_utility(a.alpha, a.budget, sig):
            sets[ad] = without
            removed[ad] = last
    trace = SolverTrace(insertion_order=base.trace.insertion_order, stop_reason=base.trace.stop_reason,
                        removed_users=removed, global_gains=base.trace.global_gains)
    alloc = Allocation(tuple(sets))
    report = evaluate(alloc, campaign, spread, constraints, base.params)
    return SolveResult("p1", alloc, report, trace, None, base.params)


def _resolve_phi(params: PenaltyParams, campaign, constraints, spread) -> PenaltyParams:
    if params.phi is None:
        return params.with_phi(auto_phi(campaign, constraints, params, spread))
    return params


def double_greedy_urmp(spread: SpreadOracle, campaign: Campaign, constraints: AttentionConstraints,
                       params: PenaltyParams, rng_seed: int = 0, *,
                       check_nonnegative: bool = True, atol: float = 1e-9) -> SolveResult:
    """Randomized double greedy on ``f' = V - C + phi``, one ad per pass.

    For ad ``t`` a growing set ``O`` starts empty and a shrinking set ``Q``
    starts at all users; ads before ``t`` hold their final seed sets and
    ads after ``t`` hold nothing. Each user ``v`` in index order is added to
    ``O`` with probability ``a'/(a'+b')`` (1 when both are zero), otherwise
    removed from ``Q``, where ``a`` is the gain of adding ``v`` to ``O`` and
    ``b`` the gain of removing it from ``Q``, both clipped at zero. Gains are
    taken as component differences so ``phi`` never enters a subtraction.

    With ``check_nonnegative`` every visited state is evaluated and the run
    aborts with :class:`PhiInsufficientError` if ``f'`` drops below
    ``-atol * max(1, phi)``.
    """
    params = _resolve_phi(params, campaign, constraints, spread)
    phi = params.phi
    lam1, lam2 = params.lambda1, params.lambda2
    n, m = spread.num_users, campaign.num_ads
    kappa, K = constraints.kappa, constraints.K
    floor = -atol * max(1.0, phi)
    rng = random.Random(rng_seed)

    def add_cost(v: int, counts: list[int], total: int) -> float:
        # C(counts + e_v) - C(counts)
        d = 0.0
        if lam1:
            d += lam1 * (math.exp(max(0, counts[v] + 1 - kappa[v])) - math.exp(max(0, counts[v] - kappa[v])))
        if lam2:
            d += lam2 * (math.exp(max(0, total + 1 - K)) - math.exp(max(0, total - K)))
        return d

    min_seen = math.inf
    trace = SolverTrace(insertion_order=[[] for _ in range(m)], stop_reason="exhausted",
                        removed_users=[None] * m)
    final: list[frozenset[int]] = [frozenset()] * m
    base_counts = [0] * n
    base_total = 0
    fixed_revenue = 0.0

    def visit(value: float, ad: int, user: int) -> None:
        nonlocal min_seen
        if value < min_seen:
            min_seen = value
        if value < floor:
            raise PhiInsufficientError(value, phi, ad, user)

    for t, adv in enumerate(campaign.advertisers):
        alpha, budget = adv.alpha, adv.budget

        def rev(s):
            return ad_revenue(alpha, budget, spread.spread(t, s))

        O: set[int] = set()
        Q = set(range(n))
        o_counts, o_total = list(base_counts), base_total
        q_counts = [c + 1 for c in base_counts]
        q_total = base_total + n
        rev_o, rev_q = 0.0, rev(Q)
        if check_nonnegative:
            visit(fixed_revenue + rev_o - attention_cost(o_counts, o_total, constraints, lam1, lam2) + phi, t, -1)
            visit(fixed_revenue + rev_q - attention_cost(q_counts, q_total, constraints, lam1, lam2) + phi, t, -1)
        for v in range(n):
            rev_ov = rev(O | {v})
            rev_qv = rev(Q - {v})
            q_counts[v] -= 1
            a = (rev_ov - rev_o) - add_cost(v, o_counts, o_total)
            b = (rev_qv - rev_q) + add_cost(v, q_counts, q_total - 1)
            if check_nonnegative:
                o_counts[v] += 1
                visit(fixed_revenue + rev_ov - attention_cost(o_counts, o_total + 1, constraints, lam1, lam2) + phi, t, v)
                o_counts[v] -= 1
                visit(fixed_revenue + rev_qv - attention_cost(q_counts, q_total - 1, constraints, lam1, lam2) + phi, t, v)
            ap, bp = max(0.0, a), max(0.0, b)
            prob = 1.0 if ap + bp == 0.0 else ap / (ap + bp)
            if rng.random() < prob:
                q_counts[v] += 1
                O.add(v)
                o_counts[v] += 1
                o_total += 1
                trace.insertion_order[t].append((v, rev_ov - rev_o))
                rev_o = rev_ov
            else:
                Q.discard(v)
                q_total -= 1
                rev_q = rev_qv
        final[t] = frozenset(O)
        base_counts = o_counts
        base_total = o_total
        fixed_revenue += rev_o

    trace.min_f_prime = min_seen if check_nonnegative else None
    alloc = Allocation(tuple(final))
    report = evaluate(alloc, campaign, spread, constraints, params)
    return SolveResult("urmp", alloc, report, trace, rng_seed, params)


def greedy_p2(spread: SpreadOracle, campaign: Campaign, constraints: AttentionConstraints,
              params: PenaltyParams, rng_seed: int = 0, **kwargs) -> SolveResult:
    """Double greedy, then for each capped ad drop its weakest seed when that does not lower its utility.

    The weakest seed is the one whose removal costs the least revenue,
    ties going to the lowest user index.
    """
    base = double_greedy_urmp(spread, campaign, constraints, params, rng_seed, **kwargs)
    sets = list(base.allocation.seed_sets)
    removed: list[int | None] = [None] * campaign.num_ads
    for ad, a in enumerate(campaign.advertisers):
        s = sets[ad]
        if not s:
            continue
        sig = spread.spread(ad, s)
        if not _at_cap(a.alpha, a.budget, sig, spread.cap_rtol):
            continue
        full = ad_revenue(a.alpha, a.budget, sig)
        _, weakest = min((full - ad_revenue(a.alpha, a.budget, spread.spread(ad, s - {u})), u)
                         for u in sorted(s))
        without = s - {weakest}
        if ad_utility(a.alpha, a.budget, spread.spread(ad, without)) >= ad_utility(a.alpha, a.budget, sig):
            sets[ad] = without
            removed[ad] = weakest
    trace = SolverTrace(insertion_order=base.trace.insertion_order, stop_reason=base.trace.stop_reason,
                        removed_users=removed, min_f_prime=base.trace.min_f_prime)
    alloc = Allocation(tuple(sets))
    report = evaluate(alloc, campaign, spread, constraints, base.params)
    return SolveResult("p2", alloc, report, trace, rng_seed, base.params)


def objective_table(objective: str, spread: SpreadOracle, campaign: Campaign,
                    constraints: AttentionConstraints | None, params: PenaltyParams,
                    enforce_constraints: bool) -> np.ndarray:
    """Objective value of every allocation, indexed by bitmask.

    Bit ``ad * num_users + user`` is set when ``user`` seeds ``ad``.
    Infeasible allocations are ``-inf`` when constraints are enforced.
    """
    n, m = spread.num_users, campaign.num_ads
    bits = n * m
    if bits > ORACLE_LIMIT:
        raise ValueError(f"ground set of {bits} pairs exceeds the oracle limit of {ORACLE_LIMIT}")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    idx = np.arange(1 << bits, dtype=np.int64)
    low = (1 << n) - 1
    values = np.zeros(1 << bits)
    for ad, a in enumerate(campaign.advertisers):
        rev = a.alpha * spread.spread_table(ad)
        if objective in ("U", "f"):
            table = np.where(rev <= a.budget, rev, 2.0 * a.budget - rev)
        else:
            table = np.minimum(rev, a.budget)
        values += table[(idx >> (ad * n)) & low]

    counts = None
    if constraints is not None and (objective in ("f", "fprime") or enforce_constraints):
        counts = np.zeros((n, 1 << bits), dtype=np.int64)
        for ad in range(m):
            for u in range(n):
                counts[u] += (idx >> (ad * n + u)) & 1
        total = np.bitwise_count(idx.astype(np.uint64)).astype(np.int64)
    if objective in ("f", "fprime"):
        if constraints is None:
            raise ValueError(f"objective {objective} needs attention constraints")
        kappa = np.asarray(constraints.kappa, dtype=np.int64)[:, None]
        part1 = np.exp(np.maximum(0, counts - kappa)).sum(axis=0)
        part2 = np.exp(np.maximum(0, total - constraints.K))
        values = values - (params.lambda1 * part1 + params.lambda2 * part2) + params.phi
    if enforce_constraints and constraints is not None:
        kappa = np.asarray(constraints.kappa, dtype=np.int64)[:, None]
        feasible = (counts <= kappa).all(axis=0) & (total <= constraints.K)
        values = np.where(feasible, values, -np.inf)
    return values


def brute_force_opt(objective: str, spread: SpreadOracle, campaign: Campaign,
                    constraints: AttentionConstraints | None = None,
                    params: PenaltyParams | None = None, *,
                    enforce_constraints: bool | None = None) -> SolveResult:
    """Exhaustive maximizer of ``objective`` over all allocations.

    ``U`` and ``V`` are maximized over independent allocations when
    constraints are given; ``f`` and ``fprime`` are unconstrained and use the
    constraints only inside the penalty. Among maximizers the lowest
    bitmask wins.
    """
    if enforce_constraints is None:
        enforce_constraints = objective in ("U", "V")
    params = params or PenaltyParams()
    if objective in ("f", "fprime"):
        if constraints is None:
            raise ValueError(f"objective {objective} needs attention constraints")
        params = _resolve_phi(params, campaign, constraints, spread)
    table = objective_table(objective, spread, campaign, constraints, params, enforce_constraints)
    best = int(np.argmax(table))
    n = spread.num_users
    alloc = Allocation(tuple(frozenset(u for u in range(n) if best >> (ad * n + u) & 1)
                             for ad in range(campaign.num_ads)))
    report = evaluate(alloc, campaign, spread, constraints, params)
    trace = SolverTrace(insertion_order=[[] for _ in range(campaign.num_ads)],
                        stop_reason="exhausted", removed_users=[None] * campaign.num_ads)
    return SolveResult(f"oracle-{objective}", alloc, report, trace, None,
                       report_params(params, report))
