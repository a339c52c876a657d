"""Domain types for social ad allocation and their text formats.

Users and ads are dense 0-based indices. A :class:`HyperSocialGraph` carries
one directed, probability-labelled edge list per ad; a :class:`Campaign`
lists each advertiser's price per engagement and budget; an
:class:`Allocation` holds one seed set per ad.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "Advertiser",
    "Allocation",
    "AttentionConstraints",
    "Campaign",
    "Edge",
    "FormatError",
    "HyperSocialGraph",
    "allocation_column_sums",
    "derive_seed",
    "generate_synthetic",
    "parse_campaign",
    "parse_constraints",
    "parse_graph",
    "serialize_campaign",
    "serialize_constraints",
    "serialize_graph",
    "shared_topology",
]

GENERATOR_KINDS = ("chain", "star", "erdos-renyi", "isolated")


class FormatError(ValueError):
    """Raised for malformed input text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def derive_seed(master: int, *labels) -> int:
    """Derive a 63-bit sub-seed from a master seed and a tuple of labels.

    Labelled hashing keeps every random stream independent of evaluation
    order, so parallel fan-out never changes results.
    """
    key = ":".join([str(int(master))] + [str(x) for x in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


class Edge(NamedTuple):
    src: int
    dst: int
    prob: float


@dataclass(frozen=True)
class HyperSocialGraph:
    """Per-ad diffusion graphs over a shared user set.

    Parameters
    ----------
    num_users : int
        Number of users ``|V|``.
    per_ad_edges : tuple of tuple of Edge
        ``per_ad_edges[i]`` is the directed edge list of ad ``i``.
    """

    num_users: int
    per_ad_edges: tuple[tuple[Edge, ...], ...]

    def __post_init__(self):
        if self.num_users < 0:
            raise ValueError("num_users must be nonnegative")
        edges = tuple(tuple(Edge(int(e[0]), int(e[1]), float(e[2])) for e in lst)
                      for lst in self.per_ad_edges)
        object.__setattr__(self, "per_ad_edges", edges)
        for ad, lst in enumerate(edges):
            seen = set()
            for e in lst:
                if e.src < 0 or e.dst < 0:
                    raise ValueError(f"ad {ad}: negative user index in edge {e}")
                if e.src >= self.num_users or e.dst >= self.num_users:
                    raise ValueError(f"ad {ad}: edge {e} references a user >= {self.num_users}")
                if not 0.0 <= e.prob <= 1.0:
                    raise ValueError(f"ad {ad}: probability {e.prob} outside [0, 1]")
                if (e.src, e.dst) in seen:
                    raise ValueError(f"ad {ad}: duplicate edge ({e.src}, {e.dst})")
                seen.add((e.src, e.dst))

    @property
    def num_ads(self) -> int:
        return len(self.per_ad_edges)

    def edges(self, ad: int) -> tuple[Edge, ...]:
        return self.per_ad_edges[ad]

    def num_edges(self) -> int:
        return sum(len(lst) for lst in self.per_ad_edges)

    def out_neighbors(self, ad: int) -> tuple[tuple[tuple[int, float], ...], ...]:
        """Out-adjacency of ad ``ad`` as ``(dst, prob)`` tuples per user, in edge order."""
        cache = self.__dict__.setdefault("_adjacency", {})
        if ad not in cache:
            adj: list[list[tuple[int, float]]] = [[] for _ in range(self.num_users)]
            for e in self.per_ad_edges[ad]:
                adj[e.src].append((e.dst, e.prob))
            cache[ad] = tuple(tuple(a) for a in adj)
        return cache[ad]


def shared_topology(num_users: int, num_ads: int, edges: Iterable, undirected: bool = False
                    ) -> HyperSocialGraph:
    """Build a graph whose ads all share one edge list.

    With ``undirected=True`` every ``(u, v, p)`` becomes the two arcs
    ``u -> v`` and ``v -> u``.
    """
    arcs = []
    for u, v, p in edges:
        arcs.append(Edge(int(u), int(v), float(p)))
        if undirected and u != v:
            arcs.append(Edge(int(v), int(u), float(p)))
    return HyperSocialGraph(num_users, tuple(tuple(arcs) for _ in range(num_ads)))


_HEADER = re.compile(r"^users=(\d+)\s+ads=(\d+)$")


def parse_graph(text: str) -> HyperSocialGraph:
    """Parse the edge-list format.

    An optional header ``users=<n> ads=<m>`` may appear before any data
    line; ``#`` starts a comment line; data lines are ``src dst ad prob``.
    Without a header the user and ad counts are one more than the largest
    index seen.
    """
    header = None
    rows: list[tuple[int, int, int, float, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _HEADER.match(line)
        if m:
            if header is not None or rows:
                raise FormatError("header must precede all data lines", lineno)
            header = (int(m.group(1)), int(m.group(2)))
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"expected 'src dst ad prob', got {line!r}", lineno)
        try:
            src, dst, ad = (int(x) for x in parts[:3])
            prob = float(parts[3])
        except ValueError:
            raise FormatError(f"cannot parse {line!r}", lineno) from None
        if min(src, dst, ad) < 0:
            raise FormatError("negative index", lineno)
        if not 0.0 <= prob <= 1.0:
            raise FormatError(f"probability {prob} out of range [0, 1]", lineno)
        rows.append((src, dst, ad, prob, lineno))

    if header is not None:
        num_users, num_ads = header
    else:
        num_users = 1 + max((max(r[0], r[1]) for r in rows), default=-1)
        num_ads = 1 + max((r[2] for r in rows), default=-1)

    per_ad: list[list[Edge]] = [[] for _ in range(num_ads)]
    seen: set[tuple[int, int, int]] = set()
    for src, dst, ad, prob, lineno in rows:
        if src >= num_users or dst >= num_users:
            raise FormatError(f"user index exceeds users={num_users}", lineno)
        if ad >= num_ads:
            raise FormatError(f"ad index exceeds ads={num_ads}", lineno)
        if (src, dst, ad) in seen:
            raise FormatError(f"duplicate edge ({src}, {dst}) for ad {ad}", lineno)
        seen.add((src, dst, ad))
        per_ad[ad].append(Edge(src, dst, prob))
    return HyperSocialGraph(num_users, tuple(tuple(lst) for lst in per_ad))


def serialize_graph(graph: HyperSocialGraph) -> str:
    lines = [f"users={graph.num_users} ads={graph.num_ads}"]
    for ad, lst in enumerate(graph.per_ad_edges):
        for e in lst:
            lines.append(f"{e.src} {e.dst} {ad} {e.prob!r}")
    return "\n".join(lines) + "\n"


def generate_synthetic(kind: str, num_users: int, num_ads: int, prob: float, rng_seed: int = 0,
                       density: float = 0.3) -> HyperSocialGraph:
    """Deterministic test-instance factory.

    ``chain`` is the path 0 -> 1 -> ...; ``star`` points user 0 at every other
    user; ``isolated`` has no edges; ``erdos-renyi`` keeps each ordered pair
    independently with probability ``density`` (per ad) and labels it
    ``prob``.
    """
    if kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if num_users < 1 or num_ads < 1:
        raise ValueError("num_users and num_ads must be >= 1")
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability {prob} outside [0, 1]")
    if kind == "isolated":
        return HyperSocialGraph(num_users, tuple(() for _ in range(num_ads)))
    if kind == "chain":
        return shared_topology(num_users, num_ads, [(u, u + 1, prob) for u in range(num_users - 1)])
    if kind == "star":
        return shared_topology(num_users, num_ads, [(0, v, prob) for v in range(1, num_users)])

    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density {density} outside [0, 1]")
    per_ad = []
    for ad in range(num_ads):
        rng = np.random.default_rng(derive_seed(rng_seed, "erdos-renyi", ad))
        draws = rng.random((num_users, num_users))
        per_ad.append(tuple(Edge(u, v, prob) for u in range(num_users) for v in range(num_users)
                            if u != v and draws[u, v] < density))
    return HyperSocialGraph(num_users, tuple(per_ad))


@dataclass(frozen=True)
class Advertiser:
    alpha: float
    budget: float


@dataclass(frozen=True)
class Campaign:
    """Ordered advertisers; ``alpha`` is the price per engagement, ``budget`` the cap."""

    advertisers: tuple[Advertiser, ...]

    def __post_init__(self):
        ads = tuple(a if isinstance(a, Advertiser) else Advertiser(float(a[0]), float(a[1]))
                    for a in self.advertisers)
        object.__setattr__(self, "advertisers", ads)
        for i, a in enumerate(ads):
            if not a.alpha > 0:
                raise ValueError(f"advertiser {i}: alpha must be > 0, got {a.alpha}")
            if not a.budget >= 0:
                raise ValueError(f"advertiser {i}: budget must be >= 0, got {a.budget}")

    @classmethod
    def of(cls, *pairs: tuple[float, float]) -> "Campaign":
        return cls(tuple(Advertiser(float(a), float(b)) for a, b in pairs))

    @property
    def num_ads(self) -> int:
        return len(self.advertisers)

    @property
    def total_budget(self) -> float:
        return sum(a.budget for a in self.advertisers)


def parse_campaign(text: str) -> Campaign:
    rows = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"expected 'ad alpha budget', got {line!r}", lineno)
        try:
            ad, alpha, budget = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise FormatError(f"cannot parse {line!r}", lineno) from None
        if ad < 0:
            raise FormatError("negative ad index", lineno)
        if ad in rows:
            raise FormatError(f"ad {ad} listed twice", lineno)
        if not alpha > 0:
            raise FormatError(f"alpha must be > 0, got {alpha}", lineno)
        if not budget >= 0:
            raise FormatError(f"budget must be >= 0, got {budget}", lineno)
        rows[ad] = Advertiser(alpha, budget)
    missing = sorted(set(range(len(rows))) - set(rows))
    if missing:
        raise FormatError(f"ad indices must be dense from 0; missing {missing}")
    return Campaign(tuple(rows[i] for i in range(len(rows))))


def serialize_campaign(campaign: Campaign) -> str:
    return "".join(f"{i} {a.alpha!r} {a.budget!r}\n" for i, a in enumerate(campaign.advertisers))


@dataclass(frozen=True)
class AttentionConstraints:
    """Per-user attention limits ``kappa`` and the overall limit ``K``."""

    kappa: tuple[int, ...]
    K: int

    def __post_init__(self):
        object.__setattr__(self, "kappa", tuple(int(k) for k in self.kappa))
        if any(k < 0 for k in self.kappa):
            raise ValueError("kappa values must be nonnegative")
        if self.K < 0:
            raise ValueError("K must be nonnegative")

    @classmethod
    def uniform(cls, num_users: int, kappa: int, K: int) -> "AttentionConstraints":
        return cls((kappa,) * num_users, K)

    @classmethod
    def unbounded(cls, num_users: int, num_ads: int) -> "AttentionConstraints":
        return cls((num_ads,) * num_users, num_users * num_ads)

    @property
    def num_users(self) -> int:
        return len(self.kappa)


def parse_constraints(text: str, num_users: int, default_kappa: int | None = None
                      ) -> AttentionConstraints:
    """Parse ``user kappa`` lines plus one ``K <value>`` line.

    Users not listed get ``default_kappa``; if that is None every user must
    be listed.
    """
    kappa: dict[int, int] = {}
    K = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"expected 'user kappa' or 'K value', got {line!r}", lineno)
        try:
            value = int(parts[1])
        except ValueError:
            raise FormatError(f"cannot parse {line!r}", lineno) from None
        if value < 0:
            raise FormatError("limits must be nonnegative", lineno)
        if parts[0] == "K":
            if K is not None:
                raise FormatError("K given twice", lineno)
            K = value
            continue
        try:
            user = int(parts[0])
        except ValueError:
            raise FormatError(f"cannot parse {line!r}", lineno) from None
        if not 0 <= user < num_users:
            raise FormatError(f"user {user} outside [0, {num_users})", lineno)
        if user in kappa:
            raise FormatError(f"user {user} listed twice", lineno)
        kappa[user] = value
    if K is None:
        raise FormatError("missing 'K <value>' line")
    if default_kappa is None and len(kappa) != num_users:
        missing = sorted(set(range(num_users)) - set(kappa))
        raise FormatError(f"no kappa for users {missing}")
    return AttentionConstraints(tuple(kappa.get(u, default_kappa) for u in range(num_users)), K)


def serialize_constraints(constraints: AttentionConstraints) -> str:
    lines = [f"{u} {k}" for u, k in enumerate(constraints.kappa)]
    lines.append(f"K {constraints.K}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Allocation:
    """One seed set per ad; equivalently the 0/1 user-by-ad matrix ``X``."""

    seed_sets: tuple[frozenset[int], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "seed_sets", tuple(frozenset(int(u) for u in s)
                                                    for s in self.seed_sets))

    @classmethod
    def empty(cls, num_ads: int) -> "Allocation":
        return cls(tuple(frozenset() for _ in range(num_ads)))

    @classmethod
    def full(cls, num_users: int, num_ads: int) -> "Allocation":
        return cls(tuple(frozenset(range(num_users)) for _ in range(num_ads)))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], num_ads: int) -> "Allocation":
        sets: list[set[int]] = [set() for _ in range(num_ads)]
        for user, ad in pairs:
            sets[ad].add(user)
        return cls(tuple(frozenset(s) for s in sets))

    @classmethod
    def from_matrix(cls, X) -> "Allocation":
        X = np.asarray(X)
        return cls(tuple(frozenset(np.flatnonzero(X[:, j]).tolist()) for j in range(X.shape[1])))

    @property
    def num_ads(self) -> int:
        return len(self.seed_sets)

    def pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset((u, ad) for ad, s in enumerate(self.seed_sets) for u in s)

    def to_matrix(self, num_users: int) -> np.ndarray:
        X = np.zeros((num_users, self.num_ads), dtype=np.int8)
        for ad, s in enumerate(self.seed_sets):
            for u in s:
                X[u, ad] = 1
        return X

    def replace(self, ad: int, seeds: Iterable[int]) -> "Allocation":
        sets = list(self.seed_sets)
        sets[ad] = frozenset(seeds)
        return Allocation(tuple(sets))

    def validate(self, num_users: int, num_ads: int) -> None:
        if self.num_ads != num_ads:
            raise ValueError(f"allocation has {self.num_ads} seed sets, expected {num_ads}")
        for ad, s in enumerate(self.seed_sets):
            bad = [u for u in s if not 0 <= u < num_users]
            if bad:
                raise ValueError(f"ad {ad}: user indices {sorted(bad)} outside [0, {num_users})")

    def to_lists(self) -> list[list[int]]:
        return [sorted(s) for s in self.seed_sets]


def allocation_column_sums(alloc: Allocation, num_users: int) -> tuple[tuple[int, ...], int]:
    """Per-user attention cost (ads assigned to each user) and the overall total."""
    counts = [0] * num_users
    for s in alloc.seed_sets:
        for u in s:
            counts[u] += 1
    return tuple(counts), sum(counts)
