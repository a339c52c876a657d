"""Independence oracle for (user, ad) assignment sets under attention limits.

A set of assignments is independent when no user exceeds its own limit and
the set as a whole does not exceed the overall limit. This is a laminar
(partition-plus-cardinality) matroid; :func:`verify_matroid_axioms` checks
that claim exhaustively on small ground sets.
"""

from __future__ import annotations

from collections import Counter
from typing import Callable, Iterable, NamedTuple

from .model import AttentionConstraints

__all__ = ["AssignmentPair", "can_add", "ground_set", "is_independent", "rank_table",
           "verify_matroid_axioms"]

MAX_AXIOM_GROUND_SET = 12


class AssignmentPair(NamedTuple):
    user: int
    ad: int


def ground_set(num_users: int, num_ads: int) -> list[AssignmentPair]:
    return [AssignmentPair(u, a) for u in range(num_users) for a in range(num_ads)]


def is_independent(pairs: Iterable[tuple[int, int]], constraints: AttentionConstraints) -> bool:
    pairs = set(pairs)
    if len(pairs) > constraints.K:
        return False
    per_user = Counter(u for u, _ in pairs)
    return all(c <= constraints.kappa[u] for u, c in per_user.items())


def can_add(pairs: Iterable[tuple[int, int]], candidate: tuple[int, int],
            constraints: AttentionConstraints) -> bool:
    pairs = set(pairs)
    if tuple(candidate) in pairs:
        raise ValueError(f"candidate {tuple(candidate)} is already in the set")
    if len(pairs) + 1 > constraints.K:
        return False
    user = candidate[0]
    return sum(1 for u, _ in pairs if u == user) + 1 <= constraints.kappa[user]


Oracle = Callable[[Iterable[tuple[int, int]], AttentionConstraints], bool]


def _independent_masks(elements, constraints, oracle: Oracle) -> list[bool]:
    n = len(elements)
    return [oracle([elements[i] for i in range(n) if mask >> i & 1], constraints)
            for mask in range(1 << n)]


def rank_table(independent: list[bool]) -> list[int]:
    """Largest independent subset size of every subset, indexed by bitmask."""
    rank = [0] * len(independent)
    for mask in range(len(independent)):
        if independent[mask]:
            rank[mask] = mask.bit_count()
            continue
        best = 0
        m = mask
        while m:
            low = m & -m
            r = rank[mask ^ low]
            if r > best:
                best = r
            m ^= low
        rank[mask] = best
    return rank


def verify_matroid_axioms(constraints: AttentionConstraints, num_users: int, num_ads: int,
                          oracle: Oracle = is_independent) -> bool:
    """Exhaustively check downward closure and the exchange property.

    Exchange is checked through ranks: for independent ``X`` let ``B`` be
    ``X`` plus every element that cannot extend it. Some independent ``Y``
    with ``|Y| > |X|`` has no usable element of ``Y - X`` exactly when
    ``rank(B) > |X|``.
    """
    elements = ground_set(num_users, num_ads)
    n = len(elements)
    if n > MAX_AXIOM_GROUND_SET:
        raise ValueError(f"ground set of {n} pairs exceeds the limit of {MAX_AXIOM_GROUND_SET}")
    independent = _independent_masks(elements, constraints, oracle)
    if not independent[0]:
        return False
    full = (1 << n) - 1
    for mask in range(1 << n):
        if not independent[mask]:
            continue
        m = mask
        while m:
            low = m & -m
            if not independent[mask ^ low]:
                return False
            m ^= low
    rank = rank_table(independent)
    for mask in range(1 << n):
        if not independent[mask]:
            continue
        blocked = mask
        outside = full & ~mask
        while outside:
            low = outside & -outside
            if not independent[mask | low]:
                blocked |= low
            outside ^= low
        if rank[blocked] > mask.bit_count():
            return False
    return True
