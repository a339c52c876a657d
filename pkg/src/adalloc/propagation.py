"""Independent-cascade spread under per-ad edge probabilities.

Spread is computed on a fixed collection of live-edge patterns, each with a
weight: sampled realizations weighted by multiplicity
(:class:`LiveEdgeEnsemble`) or every pattern weighted by its probability
(:class:`ExactSpread`). Either way the spread of a seed set is the weighted
mean size of its reachable set, which is an exactly monotone submodular set
function for a fixed collection.
"""

from __future__ import annotations

import itertools
from typing import Iterable

import numpy as np

from .model import Edge, HyperSocialGraph

__all__ = [
    "ExactSpread",
    "LiveEdgeEnsemble",
    "SpreadEstimate",
    "SpreadOracle",
    "estimate_spread",
    "reach_masks",
    "sample_live_edges",
    "simulate_cascade",
]

EXACT_EDGE_LIMIT = 15


class SpreadEstimate(float):
    """Expected engagement count of a seed set (a float)."""


def reach_masks(num_users: int, adjacency: list[list[int]]) -> tuple[int, ...]:
    """Bitmask of the users reachable from each user (itself included).

    Iterative Tarjan: strongly connected components pop in reverse
    topological order, so every successor component is final by the time a
    component's mask is assembled.
    """
    index = [-1] * num_users
    low = [0] * num_users
    on_stack = [False] * num_users
    stack: list[int] = []
    reach = [0] * num_users
    counter = 0
    for root in range(num_users):
        if index[root] != -1:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        work = [[root, 0]]
        while work:
            frame = work[-1]
            v, i = frame
            nbrs = adjacency[v]
            if i < len(nbrs):
                frame[1] = i + 1
                w = nbrs[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append([w, 0])
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
            if low[v] != index[v]:
                continue
            members = []
            while True:
                w = stack.pop()
                on_stack[w] = False
                members.append(w)
                if w == v:
                    break
            mask = 0
            for w in members:
                mask |= 1 << w
            for w in members:
                for x in adjacency[w]:
                    mask |= reach[x]
            for w in members:
                reach[w] = mask
    return tuple(reach)


class SpreadOracle:
    """Spread as a weighted average of reachable-set sizes over live-edge patterns.

    Subclasses fill ``_patterns[ad]`` with ``(weight, live_edges)`` pairs and
    set ``_denominator``. Reach masks per pattern are built on first use of
    an ad and memoized; results are identical to a BFS per query.
    """

    exact: bool = False
    cap_rtol: float = 0.0

    def __init__(self, graph: HyperSocialGraph):
        self.graph = graph
        self.num_users = graph.num_users
        self.num_ads = graph.num_ads
        self._patterns: list[list[tuple[float, tuple[Edge, ...]]]] = [[] for _ in range(self.num_ads)]
        self._denominator: float = 1
        self._masks: dict[int, list[tuple[float, tuple[int, ...]]]] = {}
        self._cache: dict[tuple[int, frozenset[int]], float] = {}

    def _ad_masks(self, ad: int) -> list[tuple[float, tuple[int, ...]]]:
        masks = self._masks.get(ad)
        if masks is None:
            masks = []
            for weight, live in self._patterns[ad]:
                adj: list[list[int]] = [[] for _ in range(self.num_users)]
                for e in live:
                    adj[e.src].append(e.dst)
                masks.append((weight, reach_masks(self.num_users, adj)))
            self._masks[ad] = masks
        return masks

    def spread(self, ad: int, seeds: Iterable[int]) -> float:
        key = (ad, frozenset(seeds))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        seeds = key[1]
        if not 0 <= ad < self.num_ads:
            raise IndexError(f"ad {ad} out of range")
        if any(not 0 <= u < self.num_users for u in seeds):
            raise IndexError(f"seed indices must lie in [0, {self.num_users})")
        if not seeds:
            value = 0.0
        else:
            total = 0
            for weight, reach in self._ad_masks(ad):
                covered = 0
                for u in seeds:
                    covered |= reach[u]
                total += weight * covered.bit_count()
            value = total / self._denominator
        self._cache[key] = value
        return value

    def spread_table(self, ad: int) -> np.ndarray:
        """Spread of every seed subset of ad ``ad``, indexed by user bitmask.

        Uses the same accumulation order as :meth:`spread`, so entries match
        it bit for bit.
        """
        n = self.num_users
        if n > 20:
            raise ValueError("spread_table is limited to 20 users")
        size = 1 << n
        masks = self._ad_masks(ad)
        integral = all(isinstance(w, int) for w, _ in masks)
        acc = np.zeros(size, dtype=np.int64 if integral else np.float64)
        covered = np.zeros(size, dtype=np.uint64)
        for weight, reach in masks:
            # subsets containing u as top bit = subsets below it, plus u
            for u in range(n):
                lo = 1 << u
                np.bitwise_or(covered[:lo], np.uint64(reach[u]), out=covered[lo:2 * lo])
            counts = np.bitwise_count(covered).astype(np.int64)
            acc = acc + (weight * counts if integral else float(weight) * counts)
        out = acc / self._denominator
        out[0] = 0.0
        return out


class LiveEdgeEnsemble(SpreadOracle):
    """``R`` sampled live-edge realizations per ad.

    Sample ``r`` of ad ``i`` is drawn from its own generator seeded by
    ``(rng_seed, i, r)``: each edge is live iff a uniform draw falls below
    its probability. Identical realizations are pooled with integer
    multiplicities, so spread is an exact integer sum divided by ``R``.
    """

    exact = False
    cap_rtol = 1e-9

    def __init__(self, graph: HyperSocialGraph, num_samples: int, rng_seed: int = 0):
        if num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        super().__init__(graph)
        self.num_samples = num_samples
        self.rng_seed = rng_seed
        self._denominator = num_samples
        self._sample_pattern: list[np.ndarray] = []
        for ad in range(self.num_ads):
            edges = graph.edges(ad)
            probs = np.array([e.prob for e in edges], dtype=float)
            index: dict[tuple[int, ...], int] = {}
            multiplicity: list[int] = []
            keys: list[tuple[int, ...]] = []
            which = np.empty(num_samples, dtype=np.int64)
            for r in range(num_samples):
                draws = np.random.default_rng([rng_seed, ad, r]).random(len(edges))
                key = tuple(np.flatnonzero(draws < probs).tolist())
                slot = index.get(key)
                if slot is None:
                    slot = index[key] = len(keys)
                    keys.append(key)
                    multiplicity.append(0)
                multiplicity[slot] += 1
                which[r] = slot
            self._patterns[ad] = [(m, tuple(edges[i] for i in key))
                                  for m, key in zip(multiplicity, keys)]
            self._sample_pattern.append(which)

    def realization(self, ad: int, sample: int) -> tuple[Edge, ...]:
        """Live edges of sample ``sample`` for ad ``ad``."""
        return self._patterns[ad][int(self._sample_pattern[ad][sample])][1]

    def reachable(self, ad: int, sample: int, seeds: Iterable[int]) -> frozenset[int]:
        reach = self._ad_masks(ad)[int(self._sample_pattern[ad][sample])][1]
        covered = 0
        for u in seeds:
            covered |= reach[u]
        return frozenset(u for u in range(self.num_users) if covered >> u & 1)


class ExactSpread(SpreadOracle):
    """Exact expected spread by enumerating all ``2**|E_i|`` live-edge patterns.

    Patterns with identical reachability are merged; zero-probability
    patterns are dropped.
    """

    exact = True
    cap_rtol = 0.0

    def __init__(self, graph: HyperSocialGraph, max_edges: int = EXACT_EDGE_LIMIT):
        super().__init__(graph)
        for ad in range(self.num_ads):
            edges = graph.edges(ad)
            if len(edges) > max_edges:
                raise ValueError(f"ad {ad} has {len(edges)} edges; exact enumeration allows "
                                 f"at most {max_edges}")
            grouped: dict[tuple[int, ...], float] = {}
            order: list[tuple[int, ...]] = []
            representative: dict[tuple[int, ...], tuple[Edge, ...]] = {}
            for bits in itertools.product((False, True), repeat=len(edges)):
                weight = 1.0
                for e, live in zip(edges, bits):
                    weight *= e.prob if live else 1.0 - e.prob
                if weight == 0.0:
                    continue
                live_edges = tuple(e for e, live in zip(edges, bits) if live)
                adj: list[list[int]] = [[] for _ in range(self.num_users)]
                for e in live_edges:
                    adj[e.src].append(e.dst)
                key = reach_masks(self.num_users, adj)
                if key not in grouped:
                    grouped[key] = 0.0
                    order.append(key)
                    representative[key] = live_edges
                grouped[key] += weight
            self._patterns[ad] = [(grouped[k], representative[k]) for k in order]
            self._masks[ad] = [(grouped[k], k) for k in order]


def sample_live_edges(graph: HyperSocialGraph, R: int, rng_seed: int = 0) -> LiveEdgeEnsemble:
    return LiveEdgeEnsemble(graph, R, rng_seed)


def estimate_spread(ensemble: SpreadOracle, ad: int, seeds: Iterable[int]) -> SpreadEstimate:
    """Mean reachable-set size of ``seeds`` (seeds included) under ad ``ad``."""
    return SpreadEstimate(ensemble.spread(ad, seeds))


def simulate_cascade(graph: HyperSocialGraph, ad: int, seeds: Iterable[int], rng_seed: int
                     ) -> frozenset[int]:
    """Run one forward cascade and return the final active set.

    Every newly activated user gets a single attempt on each still-inactive
    out-neighbour, succeeding with that edge's probability.
    """
    rng = np.random.default_rng(rng_seed)
    adj = graph.out_neighbors(ad)
    active = set(seeds)
    frontier = sorted(active)
    while frontier:
        nxt = []
        for u in frontier:
            for v, p in adj[u]:
                if v not in active and rng.random() < p:
                    active.add(v)
                    nxt.append(v)
        frontier = nxt
    return frozenset(active)
