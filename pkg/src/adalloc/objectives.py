"""Scalar objectives of an allocation: utility, regret, capped revenue, attention cost.

Every function takes the spread oracle as an argument, so the sampled
ensemble and the exact enumerator are interchangeable.

Sign convention for the shifted objectives::

    f  = U - C + phi
    f' = V - C + phi

so ``f' - f = V - U >= 0`` for every allocation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .model import Allocation, AttentionConstraints, Campaign, allocation_column_sums
from .propagation import SpreadOracle

__all__ = [
    "ObjectiveReport",
    "PenaltyParams",
    "ad_revenue",
    "ad_utility",
    "attention_cost",
    "auto_phi",
    "cost_C",
    "evaluate",
    "regret",
    "revenue_V",
    "shifted_f",
    "shifted_f_prime",
    "utility_U",
]


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty weights and the nonnegativity shift.

    ``phi=None`` means "not yet computed"; see :func:`auto_phi`.
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    phi: float | None = 0.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.phi is not None and self.phi < 0:
            raise ValueError("phi must be nonnegative")

    def with_phi(self, phi: float) -> "PenaltyParams":
        return replace(self, phi=float(phi))


def ad_utility(alpha: float, budget: float, sigma: float) -> float:
    """Per-ad utility: revenue below the budget, reflected about it above."""
    revenue = alpha * sigma
    if revenue <= budget:
        return revenue
    return 2.0 * budget - revenue


def ad_revenue(alpha: float, budget: float, sigma: float) -> float:
    return min(alpha * sigma, budget)


def _sigmas(alloc: Allocation, spread: SpreadOracle) -> list[float]:
    return [spread.spread(ad, s) for ad, s in enumerate(alloc.seed_sets)]


def utility_U(alloc: Allocation, campaign: Campaign, spread: SpreadOracle) -> float:
    return sum(ad_utility(a.alpha, a.budget, sig)
               for a, sig in zip(campaign.advertisers, _sigmas(alloc, spread)))


def regret(alloc: Allocation, campaign: Campaign, spread: SpreadOracle) -> float:
    return sum(abs(a.alpha * sig - a.budget)
               for a, sig in zip(campaign.advertisers, _sigmas(alloc, spread)))


def revenue_V(alloc: Allocation, campaign: Campaign, spread: SpreadOracle) -> float:
    return sum(ad_revenue(a.alpha, a.budget, sig)
               for a, sig in zip(campaign.advertisers, _sigmas(alloc, spread)))


def attention_cost(counts: Sequence[int], total: int, constraints: AttentionConstraints,
                   lambda1: float, lambda2: float) -> float:
    """Exponential attention penalty from per-user counts and their total.

    Zero violation still costs ``exp(0) = 1`` per user and once globally;
    the offset is constant and leaves every maximizer unchanged.
    """
    part1 = sum(math.exp(max(0, c - k)) for c, k in zip(counts, constraints.kappa))
    part2 = math.exp(max(0, total - constraints.K))
    return lambda1 * part1 + lambda2 * part2


def cost_C(alloc: Allocation, constraints: AttentionConstraints, params: PenaltyParams) -> float:
    counts, total = allocation_column_sums(alloc, constraints.num_users)
    return attention_cost(counts, total, constraints, params.lambda1, params.lambda2)


def _require_phi(params: PenaltyParams) -> float:
    if params.phi is None:
        raise ValueError("phi is unset; compute it with auto_phi first")
    return params.phi


def shifted_f(alloc: Allocation, campaign: Campaign, constraints: AttentionConstraints,
              params: PenaltyParams, spread: SpreadOracle) -> float:
    phi = _require_phi(params)
    return utility_U(alloc, campaign, spread) - cost_C(alloc, constraints, params) + phi


def shifted_f_prime(alloc: Allocation, campaign: Campaign, constraints: AttentionConstraints,
                    params: PenaltyParams, spread: SpreadOracle) -> float:
    phi = _require_phi(params)
    return revenue_V(alloc, campaign, spread) - cost_C(alloc, constraints, params) + phi


def auto_phi(campaign: Campaign, constraints: AttentionConstraints, params: PenaltyParams,
             spread: SpreadOracle) -> float:
    """Smallest shift guaranteed by construction to keep ``f`` and ``f'`` nonnegative.

    The cost is largest when every user gets every ad, and each per-ad
    utility is bounded below by ``min(0, 2B - alpha*sigma(all users))``.
    """
    full = Allocation.full(constraints.num_users, campaign.num_ads)
    phi = cost_C(full, constraints, params)
    everyone = range(constraints.num_users)
    for ad, a in enumerate(campaign.advertisers):
        phi += max(0.0, a.alpha * spread.spread(ad, everyone) - 2.0 * a.budget)
    return phi


@dataclass(frozen=True)
class ObjectiveReport:
    per_ad_sigma: tuple[float, ...]
    per_ad_U: tuple[float, ...]
    per_ad_V: tuple[float, ...]
    U: float
    V: float
    regret: float
    C: float
    C_plus: float
    f: float
    f_prime: float
    phi: float
    cost_baseline: float

    def value(self, objective: str) -> float:
        return {"U": self.U, "V": self.V, "f": self.f, "fprime": self.f_prime,
                "f_prime": self.f_prime}[objective]

    def to_dict(self, alloc: Allocation | None = None, campaign: Campaign | None = None) -> dict:
        per_ad = []
        for ad, (sig, u, v) in enumerate(zip(self.per_ad_sigma, self.per_ad_U, self.per_ad_V)):
            row = {"ad": ad, "sigma": sig, "U": u, "V": v}
            if campaign is not None:
                row["alpha"] = campaign.advertisers[ad].alpha
                row["budget"] = campaign.advertisers[ad].budget
            if alloc is not None:
                row["seeds"] = sorted(alloc.seed_sets[ad])
            per_ad.append(row)
        return {
            "sigma": list(self.per_ad_sigma),
            "U": self.U,
            "V": self.V,
            "regret": self.regret,
            "C": self.C,
            "C_plus": self.C_plus,
            "f": self.f,
            "f_prime": self.f_prime,
            "phi": self.phi,
            "cost_baseline": self.cost_baseline,
            "per_ad": per_ad,
        }


def evaluate(alloc: Allocation, campaign: Campaign, spread: SpreadOracle,
             constraints: AttentionConstraints | None = None,
             params: PenaltyParams | None = None) -> ObjectiveReport:
    """Every objective of ``alloc`` in one pass.

    Without constraints the attention cost is reported as zero; a ``phi`` of
    None in ``params`` is resolved with :func:`auto_phi`.
    """
    params = params or PenaltyParams()
    sigmas = _sigmas(alloc, spread)
    us = tuple(ad_utility(a.alpha, a.budget, s) for a, s in zip(campaign.advertisers, sigmas))
    vs = tuple(ad_revenue(a.alpha, a.budget, s) for a, s in zip(campaign.advertisers, sigmas))
    reg = sum(abs(a.alpha * s - a.budget) for a, s in zip(campaign.advertisers, sigmas))
    if constraints is None:
        C = 0.0
        baseline = 0.0
        phi = params.phi or 0.0
    else:
        C = cost_C(alloc, constraints, params)
        baseline = params.lambda1 * constraints.num_users + params.lambda2
        phi = params.phi if params.phi is not None else auto_phi(campaign, constraints, params,
                                                                  spread)
    U, V = sum(us), sum(vs)
    return ObjectiveReport(
        per_ad_sigma=tuple(sigmas), per_ad_U=us, per_ad_V=vs, U=U, V=V, regret=reg, C=C,
        C_plus=C + phi, f=U - C + phi, f_prime=V - C + phi, phi=phi, cost_baseline=baseline,
    )
