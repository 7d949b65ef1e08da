"""Hypergraph containers and degree computations.

Vertices are 0-indexed integers internally; the file formats in
:mod:`rml.io` use 1-indexed labels. All containers are immutable after
construction, so read-only sharing across concurrent workers is safe.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Optional, Sequence

# Per-edge machine-word masks are kept only while every vertex fits in one word.
MASK_LIMIT = 63


def _canonical_edges(n: int, k: int, edges: Iterable[Iterable[int]]) -> tuple:
    seen = set()
    for e in edges:
        t = tuple(sorted(set(e)))
        if len(t) != k:
            raise ValueError(f"edge {tuple(e)!r} does not have {k} distinct vertices")
        if t[0] < 0 or t[-1] >= n:
            raise ValueError(f"edge {t!r} has vertices outside 0..{n - 1}")
        seen.add(t)  # duplicate insertion is idempotent
    return tuple(sorted(seen))


def _mask(verts: Iterable[int]) -> int:
    m = 0
    for v in verts:
        m |= 1 << v
    return m


class KGraph:
    """k-uniform hypergraph on vertices ``0..n-1``.

    Edges are held three ways: a sorted tuple of sorted vertex tuples
    (deterministic iteration), a frozenset of those tuples (membership),
    and, when ``n <= 63``, a parallel tuple of bit masks (fast
    disjointness tests).
    """

    __slots__ = ("n", "k", "edges", "edge_set", "masks")

    def __init__(self, n: int, k: int, edges: Iterable[Iterable[int]] = ()):
        if k < 2:
            raise ValueError("uniformity k must be at least 2")
        if n < k:
            raise ValueError("need k <= n")
        self.n = n
        self.k = k
        self.edges = _canonical_edges(n, k, edges)
        self.edge_set = frozenset(self.edges)
        self.masks = tuple(_mask(e) for e in self.edges) if n <= MASK_LIMIT else None

    @classmethod
    def complete(cls, n: int, k: int) -> "KGraph":
        return cls(n, k, itertools.combinations(range(n), k))

    def has_edge(self, e: Iterable[int]) -> bool:
        return tuple(sorted(e)) in self.edge_set

    def with_edges(self, extra: Iterable[Iterable[int]]) -> "KGraph":
        """New graph with additional edges (existing ones are kept)."""
        return KGraph(self.n, self.k, list(self.edges) + [tuple(e) for e in extra])

    def without_edges(self, removed: Iterable[Iterable[int]]) -> "KGraph":
        gone = {tuple(sorted(e)) for e in removed}
        return KGraph(self.n, self.k, (e for e in self.edges if e not in gone))

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def __len__(self) -> int:
        return len(self.edges)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, KGraph)
            and (self.n, self.k, self.edges) == (other.n, other.k, other.edges)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.k, self.edges))

    def __repr__(self) -> str:
        return f"KGraph(n={self.n}, k={self.k}, m={len(self.edges)})"


class GraphFamily:
    """Ordered list of ``n/k`` k-graphs on a common vertex set (the colors)."""

    __slots__ = ("n", "k", "members")

    def __init__(self, members: Sequence[KGraph]):
        if not members:
            raise ValueError("family must have at least one member")
        n, k = members[0].n, members[0].k
        if any((g.n, g.k) != (n, k) for g in members):
            raise ValueError("all members must share the same (n, k)")
        if n % k != 0:
            raise ValueError("need n divisible by k")
        if len(members) != n // k:
            raise ValueError(f"family needs exactly n/k = {n // k} members, got {len(members)}")
        self.n = n
        self.k = k
        self.members = tuple(members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __repr__(self) -> str:
        return f"GraphFamily(n={self.n}, k={self.k}, colors={len(self.members)})"


class PartiteGraph:
    """(1,k)-partite (k+1)-graph with color side ``0..q-1`` and vertex side ``0..n-1``.

    Every edge pairs one color with a k-set of vertices. ``balanced`` holds
    iff ``n == k*q``.
    """

    __slots__ = ("q", "n", "k", "edges", "edge_set", "vmasks")

    def __init__(self, q: int, n: int, k: int, edges: Iterable[tuple] = ()):
        if q < 1 or k < 2 or n < k:
            raise ValueError("need q >= 1, k >= 2, n >= k")
        self.q = q
        self.n = n
        self.k = k
        seen = set()
        for c, verts in edges:
            t = tuple(sorted(set(verts)))
            if len(t) != k:
                raise ValueError(f"edge verts {tuple(verts)!r} are not {k} distinct vertices")
            if not (0 <= c < q):
                raise ValueError(f"color {c} outside 0..{q - 1}")
            if t[0] < 0 or t[-1] >= n:
                raise ValueError(f"edge verts {t!r} outside 0..{n - 1}")
            seen.add((c, t))
        self.edges = tuple(sorted(seen))
        self.edge_set = frozenset(self.edges)
        self.vmasks = (
            tuple(_mask(vs) for _, vs in self.edges) if n <= MASK_LIMIT else None
        )

    @property
    def balanced(self) -> bool:
        return self.n == self.k * self.q

    def has_edge(self, c: int, verts: Iterable[int]) -> bool:
        return (c, tuple(sorted(verts))) in self.edge_set

    def neighborhood(self, c: int) -> KGraph:
        """The k-graph of vertex sets paired with color ``c``."""
        return KGraph(self.n, self.k, (vs for cc, vs in self.edges if cc == c))

    def color_edges(self, c: int) -> tuple:
        return tuple(vs for cc, vs in self.edges if cc == c)

    def restrict(self, colors: Iterable[int], verts: Iterable[int]) -> "PartiteGraph":
        """Subgraph induced by the given colors and vertex subset (labels kept)."""
        cs, vs = set(colors), set(verts)
        return PartiteGraph(
            self.q,
            self.n,
            self.k,
            ((c, t) for c, t in self.edges if c in cs and set(t) <= vs),
        )

    def __len__(self) -> int:
        return len(self.edges)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PartiteGraph)
            and (self.q, self.n, self.k, self.edges)
            == (other.q, other.n, other.k, other.edges)
        )

    def __hash__(self) -> int:
        return hash((self.q, self.n, self.k, self.edges))

    def __repr__(self) -> str:
        return f"PartiteGraph(q={self.q}, n={self.n}, k={self.k}, m={len(self.edges)})"


@dataclass(frozen=True)
class Matching:
    """Set of pairwise-disjoint colored edges ``(color, verts)``.

    Color indices are pairwise distinct in a valid rainbow matching; use
    :func:`rml.solver.verify_matching` to check validity against a
    container.
    """

    edges: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "edges",
            tuple(sorted((c, tuple(sorted(vs))) for c, vs in self.edges)),
        )

    @classmethod
    def empty(cls) -> "Matching":
        return cls(())

    def colors(self) -> frozenset:
        return frozenset(c for c, _ in self.edges)

    def covered_verts(self) -> frozenset:
        return frozenset(v for _, vs in self.edges for v in vs)

    def union(self, other: "Matching") -> "Matching":
        return Matching(self.edges + other.edges)

    def is_perfect(self, pg: PartiteGraph) -> bool:
        return self.colors() == frozenset(range(pg.q)) and self.covered_verts() == frozenset(
            range(pg.n)
        )

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)


@dataclass(frozen=True)
class Bipartition:
    """Ordered partition (W, U) of the vertex side, with an optional parity class."""

    w: frozenset
    u: frozenset
    parity_class: Optional[int] = None

    def __post_init__(self):
        if self.w & self.u:
            raise ValueError("W and U must be disjoint")
        if self.parity_class not in (None, 0, 1):
            raise ValueError("parity class must be 0 or 1")

    @classmethod
    def from_w(cls, n: int, w: Iterable[int], parity_class: Optional[int] = None) -> "Bipartition":
        ws = frozenset(w)
        if ws and (min(ws) < 0 or max(ws) >= n):
            raise ValueError("W outside vertex range")
        return cls(ws, frozenset(range(n)) - ws, parity_class)

    @property
    def n(self) -> int:
        return len(self.w) + len(self.u)


def codegree_threshold(n: int, k: int) -> Fraction:
    """Co-degree threshold below which a rainbow perfect matching can fail.

    Defined only for k >= 3 and n a positive multiple of k; other inputs are
    rejected rather than extrapolated. The value is returned as an exact
    rational so comparisons like ``d > threshold`` never round.
    """
    if k < 3:
        raise ValueError("threshold requires k >= 3")
    if n < k or n % k != 0:
        raise ValueError("threshold requires n to be a positive multiple of k")
    half = Fraction(n, 2)
    if k % 2 == 0 and (k // 2) % 2 == 0 and (n // k) % 2 == 1:
        return half + 2 - k
    if k % 2 == 1 and n % 2 == 1:
        if ((n - 1) // 2) % 2 == 1:
            return half + Fraction(3, 2) - k
        return half + Fraction(1, 2) - k
    return half + 1 - k


def codegree(h: KGraph, s: Iterable[int]) -> int:
    """Number of edges of ``h`` containing the vertex set ``s``."""
    ss = frozenset(s)
    if len(ss) > h.k:
        raise ValueError("set larger than the uniformity")
    if ss and (min(ss) < 0 or max(ss) >= h.n):
        raise ValueError("set is not a subset of the vertices")
    return sum(1 for e in h.edges if ss <= set(e))


def min_degree(h: KGraph, l: int) -> int:
    """Minimum degree over all l-subsets of the vertices."""
    if not 1 <= l <= h.k:
        raise ValueError("need 1 <= l <= k")
    counts: Counter = Counter()
    for e in h.edges:
        for sub in itertools.combinations(e, l):
            counts[sub] += 1
    return min(
        (counts.get(sub, 0) for sub in itertools.combinations(range(h.n), l)),
        default=0,
    )


def parity_degree(h: KGraph, s: Iterable[int], v: int, j: int) -> int:
    """Edges through ``v`` whose intersection with ``s`` has size ``j`` mod 2."""
    if not 0 <= v < h.n:
        raise ValueError("v is not a vertex")
    ss = set(s)
    if ss and (min(ss) < 0 or max(ss) >= h.n):
        raise ValueError("s is not a subset of the vertices")
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")
    return sum(1 for e in h.edges if v in e and len(ss.intersection(e)) % 2 == j)


def partite_degree(pg: PartiteGraph, color: int, verts: Iterable[int]) -> int:
    """Number of vertices extending ``(color, verts)`` to an edge of ``pg``."""
    base = frozenset(verts)
    if len(base) != pg.k - 1:
        raise ValueError("need a (k-1)-set of vertices")
    count = 0
    for v in range(pg.n):
        if v not in base and (color, tuple(sorted(base | {v}))) in pg.edge_set:
            count += 1
    return count


def color_parity_degree(pg: PartiteGraph, w: Iterable[int], color: int, j: int) -> int:
    """Edges of color ``color`` whose vertex part meets ``w`` with parity ``j``."""
    ws = set(w)
    return sum(
        1
        for c, vs in pg.edges
        if c == color and len(ws.intersection(vs)) % 2 == j
    )


def vertex_parity_degree(
    pg: PartiteGraph,
    w: Iterable[int],
    v: int,
    j: int,
    exclude_colors: Iterable[int] = (),
) -> int:
    """Edges through vertex ``v`` (outside ``exclude_colors``) with W-parity ``j``."""
    ws = set(w)
    banned = set(exclude_colors)
    return sum(
        1
        for c, vs in pg.edges
        if c not in banned and v in vs and len(ws.intersection(vs)) % 2 == j
    )


def complement(h: KGraph) -> KGraph:
    """k-graph whose edges are exactly the k-sets missing from ``h``."""
    return KGraph(
        h.n,
        h.k,
        (e for e in itertools.combinations(range(h.n), h.k) if e not in h.edge_set),
    )


def partite_min_codegree(pg: PartiteGraph, color: int) -> int:
    """Minimum co-degree of the neighborhood k-graph of one color."""
    return min_degree(pg.neighborhood(color), pg.k - 1)
