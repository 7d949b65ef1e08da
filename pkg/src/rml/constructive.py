"""Executable forms of the matching-construction procedures.

Every asymptotic hypothesis becomes a runtime check: it either passes or
the procedure fails loudly (HypothesisError before work starts,
NotFoundError with the partial state when a search dead-ends). Wherever a
proof says "choose", ties break lexicographically so witnesses are
reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, isqrt
from typing import FrozenSet, Iterable, NamedTuple, Optional, Tuple

from .core import (
    Bipartition,
    Matching,
    PartiteGraph,
    codegree_threshold,
    color_parity_degree,
    min_degree,
    partite_min_codegree,
    vertex_parity_degree,
)
from .devices import find_two_matching, is_edge_absorber
from .solver import Budget, solve_induced


class HypothesisError(ValueError):
    """A degree or parity hypothesis required by a procedure does not hold."""


class NotFoundError(RuntimeError):
    """A procedure dead-ended; carries the stage and any partial progress."""

    def __init__(self, stage: str, partial: Optional[Matching] = None, detail=None):
        super().__init__(f"no progress possible at stage {stage!r}")
        self.stage = stage
        self.partial = partial
        self.detail = detail


@dataclass(frozen=True)
class SectionParams:
    """Constants steering the cover and split procedures.

    ``defaults(k)`` evaluates the published formulas exactly; they shrink
    so fast that at bench sizes most bounds are vacuous, so experiments
    pass scaled values and record them. ``alpha`` is the badness threshold
    (epsilon to the power 2/3, which is exact as a rational even though
    epsilon itself carries a square root).
    """

    eta: Fraction
    c: Fraction
    epsilon: Fraction
    gamma: Fraction
    alpha: Fraction

    @classmethod
    def defaults(cls, k: int) -> "SectionParams":
        eta = Fraction(1, 4 * factorial(k))
        c = Fraction(1, 8 * factorial(k + 1))
        base = (
            Fraction(80) ** k
            * Fraction(k) ** (k - 5)
            * Fraction(factorial(k)) ** k
            * Fraction(factorial(k + 1)) ** k
        )
        cubed = base**3
        epsilon = Fraction(isqrt(cubed.denominator), isqrt(cubed.numerator))
        alpha = 1 / base
        gamma = alpha * Fraction(2) ** k / (c**k * Fraction(k) ** k)
        return cls(eta=eta, c=c, epsilon=epsilon, gamma=gamma, alpha=alpha)

    @classmethod
    def scaled(cls, eta, c, epsilon, gamma=None, alpha=None) -> "SectionParams":
        eta, c, epsilon = Fraction(eta), Fraction(c), Fraction(epsilon)
        if alpha is None:
            alpha = Fraction(float(epsilon) ** (2 / 3)).limit_denominator(10**9)
        if gamma is None:
            gamma = Fraction(alpha)
        return cls(eta=eta, c=c, epsilon=epsilon, gamma=Fraction(gamma), alpha=Fraction(alpha))


@dataclass(frozen=True)
class ParityTarget:
    """Inputs of the parity-breaker search: class i, color subset, bipartition."""

    i: int
    x_prime: FrozenSet[int]
    bip: Bipartition

    def __post_init__(self):
        if self.i not in (0, 1):
            raise ValueError("i must be 0 or 1")


class CoverSet(NamedTuple):
    """Vertices a cover matching must absorb, split by side."""

    colors: FrozenSet[int]
    verts: FrozenSet[int]

    @classmethod
    def of(cls, colors: Iterable[int] = (), verts: Iterable[int] = ()) -> "CoverSet":
        return cls(frozenset(colors), frozenset(verts))

    @property
    def size(self) -> int:
        return len(self.colors) + len(self.verts)


def check_codegree_hypothesis(f: PartiteGraph) -> None:
    """Every color's neighborhood must have co-degree above the threshold."""
    t = codegree_threshold(f.n, f.k)
    for c in range(f.q):
        d = partite_min_codegree(f, c)
        if not d > t:
            raise HypothesisError(
                f"color {c} has minimum co-degree {d}, needs more than {t}"
            )


def breaker_conditions(
    f: PartiteGraph, target: ParityTarget, e0: Optional[Tuple[int, Tuple[int, ...]]]
) -> bool:
    """Whether the two applicable residue conditions hold for a candidate edge.

    With edge absent, both counts are untouched; with an edge present, its
    one color may leave the tracked color sets and its vertex part shifts
    the W and U counts.
    """
    k, q = f.k, f.q
    i = target.i
    w_size, u_size = len(target.bip.w), len(target.bip.u)
    xp_size = len(target.x_prime)
    if e0 is None:
        ew = eu = 0
        in_xp = 0
        color_outside = 0
    else:
        c, vs = e0
        ew = len(target.bip.w.intersection(vs))
        eu = k - ew
        in_xp = 1 if c in target.x_prime else 0
        color_outside = 1 - in_xp
    rest_xp = xp_size - in_xp
    rest_out = q - xp_size - color_outside
    if i == 0:
        first = (w_size - ew - rest_xp) % 2 == 0
    else:
        first = (w_size - ew - rest_out) % 2 == 0
    if (k - i) % 2 == 0:
        second = (u_size - eu - rest_xp) % 2 == 0
    else:
        second = (u_size - eu - rest_out) % 2 == 0
    return first and second


def find_parity_breaker(
    f: PartiteGraph, target: ParityTarget, check_hypothesis: bool = True
) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """Find an edge (or the empty choice, returned as None) fixing the residues.

    The empty candidate is tested first. Failure raises NotFoundError so an
    absent breaker is never conflated with the legitimate empty one.
    """
    if not f.balanced:
        raise ValueError("breaker search requires a balanced graph")
    if not target.x_prime < frozenset(range(f.q)):
        raise ValueError("X' must be a proper subset of the colors")
    if min(len(target.bip.w), len(target.bip.u)) < f.k:
        raise ValueError("both sides of the partition need at least k vertices")
    if check_hypothesis:
        check_codegree_hypothesis(f)
    if breaker_conditions(f, target, None):
        return None
    # only the W-parity and X'-membership of an edge matter, so the first
    # edge of a satisfying signature is the lexicographic winner
    for e in f.edges:
        if breaker_conditions(f, target, e):
            return e
    raise NotFoundError(stage="parity-breaker", detail=target)


def greedy_cover(
    f: PartiteGraph,
    bip: Bipartition,
    x_partition: Tuple[FrozenSet[int], FrozenSet[int]],
    i: int,
    cover_set: CoverSet,
    e0: Optional[Tuple[int, Tuple[int, ...]]],
    params: SectionParams,
    check_hypothesis: bool = True,
) -> Matching:
    """Cover a small prescribed set by disjoint edges of controlled W-parity.

    Colors from the even class are covered by even-W edges, colors from the
    odd class by odd-W edges, and plain vertices by edges of parity ``i``
    colored inside class i. Together with a breaker edge satisfying the
    residue conditions this keeps ``|W \\ V(M)|`` and ``|X_1 \\ V(M)|``
    congruent mod 2.
    """
    x0, x1 = x_partition
    if x0 | x1 != frozenset(range(f.q)) or x0 & x1:
        raise ValueError("x_partition must partition the colors")
    n = f.n
    limit = 2 * params.c * n
    if cover_set.size > limit:
        raise ValueError(f"cover set has {cover_set.size} vertices, limit is {limit}")
    floor = params.eta * n**f.k
    if check_hypothesis:
        for c in sorted(cover_set.colors):
            j = 0 if c in x0 else 1
            if not color_parity_degree(f, bip.w, c, j) >= floor:
                raise HypothesisError(f"color {c} is below the parity-degree floor {floor}")
        banned = x1 if i == 0 else x0
        for v in sorted(cover_set.verts):
            if not vertex_parity_degree(f, bip.w, v, i, exclude_colors=banned) >= floor:
                raise HypothesisError(f"vertex {v} is below the parity-degree floor {floor}")

    chosen: list = []
    used_colors: set = set()
    used_verts: set = set()
    if e0 is not None:
        chosen.append(e0)
        used_colors.add(e0[0])
        used_verts.update(e0[1])

    def eat(c, vs):
        chosen.append((c, vs))
        used_colors.add(c)
        used_verts.update(vs)

    w = bip.w
    color_targets = sorted(cover_set.colors & x0) + sorted(cover_set.colors & x1)
    for c in color_targets:
        if c in used_colors:
            continue  # already inside e0
        want = 0 if c in x0 else 1
        got = None
        for cc, vs in f.edges:
            if (
                cc == c
                and len(w.intersection(vs)) % 2 == want
                and used_verts.isdisjoint(vs)
                and cover_set.verts.isdisjoint(vs)
            ):
                got = (cc, vs)
                break
        if got is None:
            raise NotFoundError("greedy-cover", Matching(tuple(chosen)), detail=("color", c))
        eat(*got)

    allowed_colors = (x0 if i == 0 else x1) - cover_set.colors
    for v in sorted(cover_set.verts):
        if v in used_verts:
            continue
        got = None
        for cc, vs in f.edges:
            if (
                cc in allowed_colors
                and cc not in used_colors
                and v in vs
                and len(w.intersection(vs)) % 2 == i
                and used_verts.isdisjoint(vs)
                and cover_set.verts.intersection(vs) == {v}
            ):
                got = (cc, vs)
                break
        if got is None:
            raise NotFoundError("greedy-cover", Matching(tuple(chosen)), detail=("vertex", v))
        eat(*got)

    m = Matching(tuple(chosen))
    if (len(bip.w - used_verts) - len(x1 - used_colors)) % 2 != 0:
        raise NotFoundError("greedy-cover-parity", m)
    return m


def rotation_augment(
    f: PartiteGraph,
    bip: Bipartition,
    r: int,
    m: Matching,
    active_colors: Optional[FrozenSet[int]] = None,
    active_verts: Optional[FrozenSet[int]] = None,
    move_budget: int = 2_000_000,
) -> Matching:
    """Grow a matching of uniform W-type r to a perfect one by extend/rotate moves.

    Extension adds any disjoint type-r edge. When extension stalls, a
    rotation picks an uncovered color with an uncovered type-r vertex set
    plus k matching edges, rebuilds k+1 shifted edges (each taking one
    positioned vertex from the next edge around the cycle), and swaps them
    in when all are present. Coverage is relative to the active subsets, so
    sub-instances run in place without relabeling.
    """
    colors = frozenset(range(f.q)) if active_colors is None else frozenset(active_colors)
    verts = frozenset(range(f.n)) if active_verts is None else frozenset(active_verts)
    w = bip.w
    k = f.k
    edges = list(m.edges)
    for c, vs in edges:
        if len(w.intersection(vs)) != r:
            raise ValueError(f"edge {(c, vs)} is not of W-type {r}")
    covered_c = {c for c, _ in edges}
    covered_v = {v for _, vs in edges for v in vs}
    moves = 0

    def extend_all():
        added = True
        while added:
            added = False
            for c, vs in f.edges:
                if (
                    c in colors
                    and c not in covered_c
                    and set(vs) <= verts
                    and covered_v.isdisjoint(vs)
                    and len(w.intersection(vs)) == r
                ):
                    edges.append((c, vs))
                    covered_c.add(c)
                    covered_v.update(vs)
                    added = True

    while True:
        extend_all()
        if colors <= covered_c and verts <= covered_v:
            out = Matching(tuple(edges))
            for c, vs in out.edges:
                assert len(w.intersection(vs)) == r
            return out
        rotated = _try_rotation(
            f, w, r, edges, colors, verts, covered_c, covered_v, move_budget - moves
        )
        if rotated is None:
            raise NotFoundError("rotation", Matching(tuple(edges)))
        moves += rotated


def _try_rotation(f, w, r, edges, colors, verts, covered_c, covered_v, budget):
    """One rotation swap in place; returns move count or None when exhausted."""
    k = f.k
    un_c = sorted(colors - covered_c)
    un_w = sorted(v for v in verts - covered_v if v in w)
    un_u = sorted(v for v in verts - covered_v if v not in w)
    moves = 0
    for x_new in un_c:
        for w_part in itertools.permutations(un_w, r):
            for u_part in itertools.permutations(un_u, k - r):
                fresh = w_part + u_part
                for combo in itertools.combinations(range(len(edges)), k):
                    for order in itertools.permutations(combo):
                        slots = []
                        for idx in order:
                            c, vs = edges[idx]
                            slots.append(
                                (
                                    c,
                                    [p for p in vs if p in w],
                                    [p for p in vs if p not in w],
                                )
                            )
                        for arrangement in _positional_orders(slots, r):
                            moves += 1
                            if moves > budget:
                                return None
                            rows = arrangement + [fresh]
                            xs = [s[0] for s in slots] + [x_new]
                            new_edges = []
                            ok = True
                            for j in range(k + 1):
                                vs_new = tuple(
                                    sorted(rows[(j + 1 + l) % (k + 1)][l] for l in range(k))
                                )
                                cand = (xs[j], vs_new)
                                if cand not in f.edge_set:
                                    ok = False
                                    break
                                new_edges.append(cand)
                            if ok:
                                for idx in sorted(order, reverse=True):
                                    edges.pop(idx)
                                edges.extend(new_edges)
                                covered_c.clear()
                                covered_v.clear()
                                for c, vs in edges:
                                    covered_c.add(c)
                                    covered_v.update(vs)
                                    assert len(w.intersection(vs)) == r
                                return moves
    return None


def _positional_orders(slots, r):
    """All per-edge assignments of W-vertices to positions 1..r and U to the rest."""
    per_edge = []
    for _, w_verts, u_verts in slots:
        per_edge.append(
            [
                tuple(wp) + tuple(up)
                for wp in itertools.permutations(w_verts)
                for up in itertools.permutations(u_verts)
            ]
        )
    for combo in itertools.product(*per_edge):
        yield list(combo)


def _case_of(i: int, k: int) -> int:
    if i == 0:
        return 1 if k % 2 == 0 else 2
    return 3 if k % 2 == 0 else 4


def case_parameters(case: int, k: int, w_rest: int, u_rest: int, q_rest: int):
    """Forced split parameters (r1, r2, x, y) for the anchored-edge residues."""
    if case == 1:
        r1, r2 = k, 0
        x, y = w_rest // k, u_rest // k
        exact = w_rest % k == 0 and u_rest % k == 0
    elif case == 2:
        r1, r2 = k - 1, 0
        exact = w_rest % (k - 1) == 0
        x = w_rest // (k - 1)
        y, rem = divmod(u_rest - x, k)
        exact = exact and rem == 0
    elif case == 3:
        r1, r2 = k - 1, 1
        exact = (w_rest - q_rest) % (k - 2) == 0
        x = (w_rest - q_rest) // (k - 2)
        y = q_rest - x
    else:
        r1, r2 = k, 1
        exact = u_rest % (k - 1) == 0
        y = u_rest // (k - 1)
        x, rem = divmod(w_rest - y, k)
        exact = exact and rem == 0
    if not exact or x < 0 or y < 0:
        raise NotFoundError("case-arithmetic", detail=(case, w_rest, u_rest, q_rest))
    assert x + y == q_rest
    assert r1 * x + r2 * y == w_rest and (k - r1) * x + (k - r2) * y == u_rest
    return r1, r2, x, y


def case_split_matching(
    f: PartiteGraph, bip: Bipartition, i: int, trace: Optional[list] = None
) -> Matching:
    """Perfect matching via one anchored edge plus two uniform-type parts.

    The parity preconditions on |W'| and |U'| are hard requirements; the
    size floor ``min >= 1.1 n/k + k`` is checked and reported but the
    procedure still runs best-effort below it, answering NotFoundError when
    a stage cannot complete.
    """
    k, q = f.k, f.q
    w_p, u_p = bip.w, bip.u
    if min(len(w_p), len(u_p)) < 1:
        raise ValueError("both sides must be nonempty")
    if i == 0 and len(w_p) % 2 != 0:
        raise HypothesisError("case split with i=0 needs |W'| even")
    if i == 1 and len(w_p) % 2 != q % 2:
        raise HypothesisError("case split with i=1 needs |W'| congruent to n/k mod 2")
    if (k - i) % 2 == 0 and len(u_p) % 2 != 0:
        raise HypothesisError("case split needs |U'| even when k - i is even")
    if (k - i) % 2 == 1 and len(u_p) % 2 != q % 2:
        raise HypothesisError("case split needs |U'| congruent to n/k mod 2 when k - i is odd")
    floor_ok = min(len(w_p), len(u_p)) >= 1.1 * q + k
    if trace is not None:
        trace.append({"stage": "size-floor", "satisfied": floor_ok})

    case = _case_of(i, k)
    e1 = None
    for c, vs in f.edges:
        ew = len(w_p.intersection(vs))
        if case == 1 and ew % k == len(w_p) % k:
            e1 = (c, vs)
        elif case == 2 and ew % (k - 1) == len(w_p) % (k - 1):
            e1 = (c, vs)
        elif case == 3 and (len(w_p) - ew) % (k - 2) == (q - 1) % (k - 2):
            e1 = (c, vs)
        elif case == 4 and (k - ew) % (k - 1) == len(u_p) % (k - 1):
            e1 = (c, vs)
        if e1 is not None:
            break
    if e1 is None:
        raise NotFoundError("anchor-edge", detail=case)
    c1, vs1 = e1
    w_rest = sorted(w_p - set(vs1))
    u_rest = sorted(u_p - set(vs1))
    q_rest = sorted(set(range(q)) - {c1})
    r1, r2, x, y = case_parameters(case, k, len(w_rest), len(u_rest), len(q_rest))
    if trace is not None:
        trace.append({"stage": "case", "case": case, "r": (r1, r2), "x": x, "y": y})

    parts = []
    offsets_w, offsets_u, offsets_q = 0, 0, 0
    for r_i, count in ((r1, x), (r2, y)):
        cs = frozenset(q_rest[offsets_q : offsets_q + count])
        ws = frozenset(w_rest[offsets_w : offsets_w + r_i * count])
        us = frozenset(u_rest[offsets_u : offsets_u + (k - r_i) * count])
        offsets_q += count
        offsets_w += r_i * count
        offsets_u += (k - r_i) * count
        if not count:
            parts.append(Matching.empty())
            continue
        sub_bip = Bipartition.from_w(f.n, ws)
        try:
            parts.append(
                rotation_augment(
                    f,
                    sub_bip,
                    r_i,
                    Matching.empty(),
                    active_colors=cs,
                    active_verts=ws | us,
                )
            )
        except NotFoundError as exc:
            raise NotFoundError(f"split-part-r{r_i}", exc.partial, detail=exc.detail) from exc
    return parts[0].union(parts[1]).union(Matching((e1,)))


def extend_to_near_cover(pg: PartiteGraph, check_hypothesis: bool = True) -> Matching:
    """Matching covering all but fewer than k colors, by greedy growth plus exchanges.

    A maximal matching either already covers enough colors, or k disjoint
    color-anchored stубs among the uncovered vertices force some matching
    edge to meet two of their extension sets in distinct vertices; that
    edge is traded for two new ones, raising color coverage by one.
    """
    k, q, n = pg.k, pg.q, pg.n
    if not k + 1 <= q or not q * k <= n:
        raise ValueError("need k+1 <= |Q| and |Q| <= n/k")
    if check_hypothesis:
        floor = Fraction(n, k)
        for c in range(q):
            d = partite_min_codegree(pg, c)
            if not d > floor:
                raise HypothesisError(
                    f"color {c} has minimum co-degree {d}, needs more than {floor}"
                )

    edges: list = []
    covered_c: set = set()
    covered_v: set = set()

    def extend_all():
        added = True
        while added:
            added = False
            for c, vs in pg.edges:
                if c not in covered_c and covered_v.isdisjoint(vs):
                    edges.append((c, vs))
                    covered_c.add(c)
                    covered_v.update(vs)
                    added = True

    extend_all()
    while q - len(covered_c) >= k:
        un_c = sorted(set(range(q)) - covered_c)[:k]
        un_v = [v for v in range(n) if v not in covered_v]
        stubs = []
        pos = 0
        for c in un_c:
            stubs.append((c, tuple(un_v[pos : pos + k - 1])))
            pos += k - 1
        if any(len(vs) < k - 1 for _, vs in stubs):
            raise NotFoundError("stub-supply", Matching(tuple(edges)))
        ext_sets = []
        for c, vs in stubs:
            base = set(vs)
            ext_sets.append(
                {
                    v
                    for v in range(n)
                    if v not in base and (c, tuple(sorted(base | {v}))) in pg.edge_set
                }
            )
        swap = None
        for c_e, vs_e in edges:
            hits = [(idx, v) for idx, ns in enumerate(ext_sets) for v in vs_e if v in ns]
            for (ia, va), (ib, vb) in itertools.combinations(hits, 2):
                if ia != ib and va != vb:
                    swap = ((c_e, vs_e), (ia, va), (ib, vb))
                    break
            if swap:
                break
        if swap is None:
            raise NotFoundError("exchange", Matching(tuple(edges)))
        (old, (ia, va), (ib, vb)) = swap
        edges.remove(old)
        covered_c.discard(old[0])
        for v in old[1]:
            covered_v.discard(v)
        for idx, v in ((ia, va), (ib, vb)):
            c_s, vs_s = stubs[idx]
            new_edge = (c_s, tuple(sorted(set(vs_s) | {v})))
            edges.append(new_edge)
            covered_c.add(c_s)
            covered_v.update(new_edge[1])
        extend_all()

    assert q - len(covered_c) <= k - 1
    return Matching(tuple(edges))


def absorption_loop(
    pg: PartiteGraph,
    absorbing: Matching,
    partial: Matching,
    s_budget: int = 20_000,
    solve_budget: Optional[Budget] = None,
) -> Matching:
    """Absorb the uncovered remainder into a reserved matching.

    While an uncovered color plus k+1 uncovered vertices exist, an unused
    reservoir edge whose union with them spans two disjoint edges is traded
    for that pair; each trade covers the chosen set and releases exactly
    one old vertex, so coverage grows by k+1 (not k+2: the two new edges
    span 2k+2 of the 2k+3 vertices involved). When the remainder is a
    single balanced color-plus-k set, a perfect matching on it together
    with the rest of the reservoir finishes the job.
    """
    reservoir = list(absorbing.edges)
    fixed = list(partial.edges)
    both_c = {c for c, _ in reservoir} & {c for c, _ in fixed}
    both_v = {v for _, vs in reservoir for v in vs} & {v for _, vs in fixed for v in vs}
    if both_c or both_v:
        raise ValueError("absorbing and partial matchings must be disjoint")

    def coverage():
        cs = {c for c, _ in reservoir} | {c for c, _ in fixed}
        vs = {v for _, e in reservoir for v in e} | {v for _, e in fixed for v in e}
        return cs, vs

    used: set = set()
    while True:
        covered_c, covered_v = coverage()
        un_c = sorted(set(range(pg.q)) - covered_c)
        un_v = sorted(set(range(pg.n)) - covered_v)
        if not un_c and not un_v:
            return Matching(tuple(fixed + reservoir))
        if not un_c:
            # all colors served; stray vertices cannot be absorbed further
            return Matching(tuple(fixed + reservoir))
        if len(un_c) == 1 and len(un_v) == pg.k:
            target_c = set(un_c) | {c for c, _ in reservoir}
            target_v = set(un_v) | {v for _, vs in reservoir for v in vs}
            final = solve_induced(pg, target_c, target_v, solve_budget)
            if final is None:
                raise NotFoundError(
                    "final-assembly", Matching(tuple(fixed + reservoir)), detail=(un_c, un_v)
                )
            return Matching(tuple(fixed)).union(final)
        if len(un_v) < pg.k + 1:
            raise NotFoundError("shape", Matching(tuple(fixed + reservoir)), detail=(un_c, un_v))
        c_s = un_c[0]
        absorbed = False
        tried = 0
        first_s = None
        for combo in itertools.combinations(un_v, pg.k + 1):
            tried += 1
            if tried > s_budget:
                break
            s = (c_s, combo)
            if first_s is None:
                first_s = s
            for e in reservoir:
                if id(e) in used:
                    raise AssertionError("reservoir edge reused")
                if is_edge_absorber(pg, s, e):
                    pair = find_two_matching(pg, s, e)
                    reservoir.remove(e)
                    used.add(id(e))
                    fixed.extend(pair)
                    new_c, new_v = coverage()
                    assert len(new_c) + len(new_v) == len(covered_c) + len(covered_v) + pg.k + 1
                    absorbed = True
                    break
            if absorbed:
                break
        if not absorbed:
            raise NotFoundError(
                "absorb", Matching(tuple(fixed + reservoir)), detail=first_s
            )
