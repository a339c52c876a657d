import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adalloc import (
    ExactSpread,
    HyperSocialGraph,
    LiveEdgeEnsemble,
    estimate_spread,
    generate_synthetic,
    sample_live_edges,
    simulate_cascade,
)
from adalloc.propagation import reach_masks
from conftest import bfs_reach, exact_spread_bruteforce, subsets


class TestSampling:
    def test_prob_one_keeps_everything(self):
        g = generate_synthetic("star", 5, 2, 1.0)
        ens = sample_live_edges(g, 20, 3)
        for ad in range(2):
            for r in range(20):
                assert set(ens.realization(ad, r)) == set(g.edges(ad))

    def test_prob_zero_keeps_nothing(self):
        ens = sample_live_edges(generate_synthetic("chain", 5, 1, 0.0), 20, 3)
        assert all(ens.realization(0, r) == () for r in range(20))

    def test_edge_frequency_concentrates(self, half_chain):
        # Binomial(10000, 0.5): sd of the fraction is 0.005, so 0.02 is four sd.
        ens = sample_live_edges(half_chain, 10000, 42)
        live = sum((0, 1) in {(e.src, e.dst) for e in ens.realization(0, r)} for r in range(10000))
        assert abs(live / 10000 - 0.5) <= 0.02

    def test_deterministic_and_prefix_stable(self, half_chain):
        a = sample_live_edges(half_chain, 50, 9)
        b = sample_live_edges(half_chain, 80, 9)
        assert [a.realization(0, r) for r in range(50)] == [b.realization(0, r) for r in range(50)]
        c = sample_live_edges(half_chain, 50, 10)
        assert [a.realization(0, r) for r in range(50)] != [c.realization(0, r) for r in range(50)]

    def test_live_edges_belong_to_graph(self):
        g = generate_synthetic("erdos-renyi", 6, 2, 0.5, 1, density=0.5)
        ens = sample_live_edges(g, 30, 1)
        for ad in range(2):
            for r in range(30):
                assert set(ens.realization(ad, r)) <= set(g.edges(ad))

    def test_requires_a_sample(self, half_chain):
        with pytest.raises(ValueError):
            sample_live_edges(half_chain, 0)


class TestEstimate:
    def test_empty_seed_set(self, half_chain):
        assert estimate_spread(sample_live_edges(half_chain, 10), 0, set()) == 0

    @pytest.mark.parametrize("R", [1, 7, 100])
    def test_certain_chain(self, R):
        ens = sample_live_edges(generate_synthetic("chain", 3, 1, 1.0), R, 5)
        assert estimate_spread(ens, 0, {0}) == 3

    def test_half_chain_matches_analytic_value(self, half_chain):
        # 1 + 0.5 + 0.25 over the four live-edge patterns
        assert abs(estimate_spread(sample_live_edges(half_chain, 10000, 42), 0, {0}) - 1.75) <= 0.05
        assert abs(ExactSpread(half_chain).spread(0, {0}) - 1.75) <= 1e-12

    def test_matches_per_sample_bfs(self):
        g = generate_synthetic("erdos-renyi", 7, 2, 0.4, 3, density=0.4)
        ens = sample_live_edges(g, 60, 11)
        for ad in range(2):
            for seeds in [{0}, {1, 4}, {2, 3, 6}, set(range(7))]:
                total = sum(len(bfs_reach(7, ens.realization(ad, r), seeds)) for r in range(60))
                assert ens.spread(ad, seeds) == total / 60
                for r in range(0, 60, 13):
                    assert ens.reachable(ad, r, seeds) == bfs_reach(7, ens.realization(ad, r), seeds)

    def test_exact_matches_unmerged_enumeration(self):
        g = HyperSocialGraph(4, (((0, 1, 0.3), (1, 2, 0.6), (2, 0, 0.5), (2, 3, 0.9), (3, 1, 0.2)),))
        exact = ExactSpread(g)
        for seeds in subsets(range(4)):
            assert exact.spread(0, seeds) == pytest.approx(exact_spread_bruteforce(g, 0, seeds), abs=1e-12)

    def test_exact_edge_limit(self):
        g = generate_synthetic("erdos-renyi", 6, 1, 0.5, 0, density=1.0)
        with pytest.raises(ValueError, match="at most 15"):
            ExactSpread(g)

    def test_spread_table_matches_scalar(self):
        g = generate_synthetic("erdos-renyi", 5, 2, 0.5, 2, density=0.4)
        for oracle in (sample_live_edges(g, 40, 1), ExactSpread(g)):
            for ad in range(2):
                table = oracle.spread_table(ad)
                for mask in range(32):
                    assert table[mask] == oracle.spread(ad, [u for u in range(5) if mask >> u & 1])

    def test_bad_indices(self, half_chain):
        ens = sample_live_edges(half_chain, 5)
        with pytest.raises(IndexError):
            ens.spread(1, {0})
        with pytest.raises(IndexError):
            ens.spread(0, {3})


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 6))
    pairs = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=12))
    return n, [(u, v) for u, v in sorted(pairs)]


@given(small_graphs())
@settings(max_examples=100)
def test_reach_masks_match_bfs(data):
    n, arcs = data
    adj = [[] for _ in range(n)]
    for u, v in arcs:
        adj[u].append(v)
    masks = reach_masks(n, adj)
    g = HyperSocialGraph(n, (tuple((u, v, 1.0) for u, v in arcs),))
    for u in range(n):
        assert {w for w in range(n) if masks[u] >> w & 1} == bfs_reach(n, g.edges(0), {u})


def _random_graph(rng, n, m):
    per_ad = []
    for _ in range(m):
        per_ad.append(tuple((u, v, float(rng.uniform(0.05, 1.0))) for u in range(n) for v in range(n)
                            if u != v and rng.random() < 0.4))
    return HyperSocialGraph(n, tuple(per_ad))


@pytest.mark.parametrize("seed", range(8))
def test_ensemble_is_exactly_monotone_and_submodular(seed):
    rng = np.random.default_rng(seed)
    g = _random_graph(rng, 5, 1)
    ens = sample_live_edges(g, 64, seed)
    sets = [frozenset(s) for s in subsets(range(5))]
    val = {s: ens.spread(0, s) for s in sets}
    for X in sets:
        if X:
            assert len(X) <= val[X] <= 5
        for Y in sets:
            if not X <= Y:
                continue
            assert val[X] <= val[Y]
            assert val[X | Y] <= val[X] + val[Y] + 1e-12
            for v in set(range(5)) - Y:
                assert val[X | {v}] - val[X] >= val[Y | {v}] - val[Y] - 1e-9


class TestCascade:
    def test_empty(self, half_chain):
        assert simulate_cascade(half_chain, 0, set(), 1) == frozenset()

    def test_certain_chain(self):
        g = generate_synthetic("chain", 3, 1, 1.0)
        assert simulate_cascade(g, 0, {0}, 1) == {0, 1, 2}

    def test_agrees_with_ensemble(self, half_chain):
        # |cascade| has sd ~0.83; with two estimators of 10000 draws each the
        # difference has sd ~0.012, so 0.05 is about four sd.
        mean = np.mean([len(simulate_cascade(half_chain, 0, {0}, s)) for s in range(10000)])
        ens = sample_live_edges(half_chain, 10000, 42)
        assert abs(mean - estimate_spread(ens, 0, {0})) <= 0.05

    def test_respects_ad(self):
        g = HyperSocialGraph(2, (((0, 1, 1.0),), ((0, 1, 0.0),)))
        assert simulate_cascade(g, 0, {0}, 3) == {0, 1}
        assert simulate_cascade(g, 1, {0}, 3) == {0}
