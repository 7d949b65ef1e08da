"""Constructors for the named parity configurations and random families.

The tight configurations pair a vertex set A with a parity rule on
``|edge ∩ A|``; their lifts attach one color vertex per family member.
All constructors are pure and deterministic (random generation is
deterministic per seed).
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Optional, Sequence

from .core import (
    Bipartition,
    GraphFamily,
    KGraph,
    PartiteGraph,
    codegree_threshold,
)


def extremal_a_size(n: int, k: int) -> int:
    """Size of the A side for the tight configuration at (n, k)."""
    codegree_threshold(n, k)  # validates n, k
    if k % 2 == 1:
        # The unique odd integer among (n-2)/2, (n-1)/2, n/2, (n+1)/2;
        # scanned rather than solved in closed form.
        candidates = [
            x // 2 for x in (n - 2, n - 1, n, n + 1) if x % 2 == 0 and (x // 2) % 2 == 1
        ]
        if len(candidates) != 1:
            raise AssertionError(f"odd-size scan failed for (n={n}, k={k})")
        return candidates[0]
    if (n // k) % 2 == 0:
        return n // 2 - 1
    if (n // 2) % 2 == 1:
        return n // 2 - 1
    return n // 2


def extremal_parity(k: int) -> int:
    """Required residue of |edge ∩ A|: even for odd k, odd for even k."""
    return 0 if k % 2 == 1 else 1


def extremal_graph(n: int, k: int, a: Optional[Iterable[int]] = None) -> KGraph:
    """The tight k-graph: edges are k-sets whose A-intersection has the mandated parity.

    ``a`` defaults to the index prefix of the mandated size; an explicit set
    may be supplied to exercise label-invariance.
    """
    size = extremal_a_size(n, k)
    a_set = frozenset(range(size)) if a is None else frozenset(a)
    if len(a_set) != size:
        raise ValueError(f"A must have exactly {size} vertices for (n={n}, k={k})")
    want = extremal_parity(k)
    return KGraph(
        n,
        k,
        (
            e
            for e in itertools.combinations(range(n), k)
            if len(a_set.intersection(e)) % 2 == want
        ),
    )


def parity_class_graph(n: int, k: int, bip: Bipartition, i: int) -> KGraph:
    """k-graph of all k-sets whose W-intersection is congruent to i mod 2."""
    if bip.n != n:
        raise ValueError("bipartition does not cover the vertex set")
    if i not in (0, 1):
        raise ValueError("parity class must be 0 or 1")
    w = bip.w
    return KGraph(
        n,
        k,
        (
            e
            for e in itertools.combinations(range(n), k)
            if len(w.intersection(e)) % 2 == i
        ),
    )


def lift_family(fam: GraphFamily) -> PartiteGraph:
    """(1,k)-partite lift: color i contributes edge (i, e) for each e in member i."""
    return PartiteGraph(
        len(fam.members),
        fam.n,
        fam.k,
        ((i, e) for i, g in enumerate(fam.members) for e in g.edges),
    )


def extremal_lift(n: int, k: int, a: Optional[Iterable[int]] = None) -> PartiteGraph:
    """Lift of n/k copies of the tight configuration with a common A."""
    h = extremal_graph(n, k, a)
    return lift_family(GraphFamily([h] * (n // k)))


def mixed_parity_lift(
    n: int,
    k: int,
    bip: Bipartition,
    m0: int,
    m1: int,
    assignment: Optional[Sequence[Optional[int]]] = None,
) -> PartiteGraph:
    """Lift whose colors carry the two parity-class graphs.

    By default the first ``m0`` colors carry the even class and the next
    ``m1`` the odd class. Colors beyond ``m0 + m1`` get empty
    neighborhoods, modelling unclassified colors conservatively. An
    explicit per-color ``assignment`` (entries 0, 1, or None) overrides the
    prefix layout; its counts must match ``m0`` and ``m1``.
    """
    if n % k != 0:
        raise ValueError("need n divisible by k")
    q = n // k
    if m0 < 0 or m1 < 0 or m0 + m1 > q:
        raise ValueError(f"need m0 + m1 <= n/k = {q}")
    if assignment is None:
        assignment = [0] * m0 + [1] * m1 + [None] * (q - m0 - m1)
    else:
        assignment = list(assignment)
        if len(assignment) != q:
            raise ValueError("assignment must give one entry per color")
        if assignment.count(0) != m0 or assignment.count(1) != m1:
            raise ValueError("assignment counts disagree with m0, m1")
    classes = {
        j: parity_class_graph(n, k, bip, j) for j in (0, 1) if j in assignment
    }
    edges = []
    for c, j in enumerate(assignment):
        if j is not None:
            edges.extend((c, e) for e in classes[j].edges)
    return PartiteGraph(q, n, k, edges)


def uniform_type_lift(n: int, k: int, bip: Bipartition, r: int) -> PartiteGraph:
    """Lift where every color's neighborhood is the k-sets meeting W in exactly r vertices."""
    if n % k != 0:
        raise ValueError("need n divisible by k")
    if not 0 <= r <= k:
        raise ValueError("need 0 <= r <= k")
    w = bip.w
    per_color = [
        e
        for e in itertools.combinations(range(n), k)
        if len(w.intersection(e)) == r
    ]
    q = n // k
    return PartiteGraph(q, n, k, ((c, e) for c in range(q) for e in per_color))


def random_family(n: int, k: int, min_codegree, seed: int) -> GraphFamily:
    """Random family kept above a co-degree floor, deterministic per seed.

    Each member starts complete and loses random edges as long as every
    (k-1)-set retains co-degree strictly above ``min_codegree``; deletion
    stops when nothing more is removable. The floor therefore holds at
    every intermediate step, not just at the end.
    """
    if n % k != 0:
        raise ValueError("need n divisible by k")
    rng = random.Random(seed)
    members = []
    for _ in range(n // k):
        members.append(_random_member(n, k, min_codegree, rng))
    return GraphFamily(members)


def _random_member(n: int, k: int, floor, rng: random.Random) -> KGraph:
    edges = set(itertools.combinations(range(n), k))
    cod = {s: 0 for s in itertools.combinations(range(n), k - 1)}
    for e in edges:
        for s in itertools.combinations(e, k - 1):
            cod[s] += 1
    order = sorted(edges)
    rng.shuffle(order)
    for e in order:
        if all(cod[s] - 1 > floor for s in itertools.combinations(e, k - 1)):
            edges.remove(e)
            for s in itertools.combinations(e, k - 1):
                cod[s] -= 1
    return KGraph(n, k, edges)


def random_partite(n: int, k: int, min_codegree, seed: int) -> PartiteGraph:
    """Lift of a random family; convenience for experiments."""
    return lift_family(random_family(n, k, min_codegree, seed))
