"""Absorbing devices: verification, staged search, and randomized selection.

A device is a small matching whose edges can be locally rewired to
additionally cover a prescribed balanced set. Kinds I, II, and III rewire
a (k+1)-matching; the edge kind is a single edge whose union with a
color-plus-(k+1)-vertices set spans two disjoint edges. Devices store
their replacement matching, so verification is pure set arithmetic.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from math import comb, log
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .closeness import DichotomyParams, density_degree_dichotomy
from .core import Matching, PartiteGraph

Edge = Tuple[int, Tuple[int, ...]]

KINDS = ("I", "II", "III", "edge")


@dataclass(frozen=True)
class BalancedSet:
    """A color plus k vertices (devices I, II, III) or k+1 vertices (edge kind)."""

    x0: int
    vset: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "vset", tuple(sorted(self.vset)))
        if len(set(self.vset)) != len(self.vset):
            raise ValueError("vertex set has repeats")


@dataclass(frozen=True)
class Device:
    """Matching edges plus the replacement matching certifying absorption.

    Positions carry the correspondence: for kind I, ``matching_edges`` is
    (e_1, ..., e_k, g) and ``witness`` (e_1', ..., e_k', f, g); for kinds
    II and III, (e_1, ..., e_{k+1}) and (e_1', ..., e_{k+1}', f); for the
    edge kind, a single edge and its two replacement edges.
    """

    kind: str
    matching_edges: Tuple[Edge, ...]
    witness: Tuple[Edge, ...]


def _unpack(s) -> Tuple[int, Tuple[int, ...]]:
    if isinstance(s, BalancedSet):
        return s.x0, s.vset
    x0, vset = s
    return x0, tuple(sorted(vset))


def _disjoint(a: Edge, b: Edge) -> bool:
    return a[0] != b[0] and not set(a[1]).intersection(b[1])


def _is_matching(edges: Sequence[Edge]) -> bool:
    return all(_disjoint(a, b) for a, b in itertools.combinations(edges, 2))


def _all_in(f: PartiteGraph, edges: Sequence[Edge]) -> bool:
    return all(e in f.edge_set for e in edges)


def _vdiff(a: Edge, b: Edge) -> set:
    return set(a[1]) - set(b[1])


def verify_device(f: PartiteGraph, s, d: Device) -> bool:
    """Check membership, matching-ness, and the kind's set equations exactly."""
    x0, vset = _unpack(s)
    k = f.k
    me, wit = d.matching_edges, d.witness
    if not (_all_in(f, me) and _all_in(f, wit)):
        return False
    if not (_is_matching(me) and _is_matching(wit)):
        return False

    if d.kind == "edge":
        if len(me) != 1 or len(wit) != 2 or len(vset) != k + 1:
            return False
        e = me[0]
        pool_v = set(e[1]) | set(vset)
        pool_c = {e[0], x0}
        return all(c in pool_c and set(vs) <= pool_v for c, vs in wit)

    if len(vset) != k:
        return False
    if d.kind == "I":
        if len(me) != k + 1 or len(wit) != k + 2:
            return False
        es, g = me[:k], me[k]
        eps, f_edge, g2 = wit[:k], wit[k], wit[k + 1]
        if g != g2:
            return False
    elif d.kind in ("II", "III"):
        if len(me) != k + 1 or len(wit) != k + 2:
            return False
        es, eps, f_edge = me[: k + 1], wit[: k + 1], wit[k + 1]
    else:
        raise ValueError(f"unknown device kind {d.kind!r}")

    # shared clauses on the first k replacement pairs
    for i in range(k):
        if es[i][0] != eps[i][0]:
            return False
        if _vdiff(eps[i], es[i]) != {vset[i]}:
            return False
        if len(_vdiff(es[i], eps[i])) != 1:
            return False
    for i in range(k):
        for j in range(k):
            if i != j and not _disjoint(eps[i], es[j]):
                return False

    if d.kind == "I":
        want = set().union(*(_vdiff(es[i], eps[i]) for i in range(k)))
        return f_edge[0] == x0 and set(f_edge[1]) == want

    if d.kind == "II":
        ek, ekp = es[k - 1], eps[k - 1]
        last, lastp = es[k], eps[k]
        if last[0] != lastp[0]:
            return False
        if set(lastp[1]).intersection(ek[1]) != _vdiff(ek, ekp):
            return False
        if len(_vdiff(last, lastp)) != 1:
            return False
        want = set().union(
            *(_vdiff(es[i], eps[i]) for i in range(k + 1) if i != k - 1)
        )
        return f_edge[0] == x0 and set(f_edge[1]) == want

    # kind III: the last replacement swaps the pivot color for x0
    last, lastp = es[k], eps[k]
    if lastp[0] != x0 or last[0] == x0 or set(lastp[1]) != set(last[1]):
        return False
    want = set().union(*(_vdiff(es[i], eps[i]) for i in range(k)))
    return f_edge[0] == last[0] and set(f_edge[1]) == want


def _edges_inside(f: PartiteGraph, color: int, pool: Iterable[int]) -> List[Edge]:
    pool = sorted(pool)
    out = []
    for vs in itertools.combinations(pool, f.k):
        if (color, vs) in f.edge_set:
            out.append((color, vs))
    return out


def is_edge_absorber(f: PartiteGraph, s, e: Edge) -> bool:
    """Whether the union of edge and set spans two disjoint edges of ``f``."""
    x0, vset = _unpack(s)
    c_e = e[0]
    if c_e == x0:
        return False
    pool = set(e[1]) | set(vset)
    for m1 in _edges_inside(f, x0, pool):
        rest = pool - set(m1[1])
        for m2 in _edges_inside(f, c_e, rest):
            return True
    return False


def find_two_matching(f: PartiteGraph, s, e: Edge) -> Optional[List[Edge]]:
    """Lexicographically least disjoint edge pair inside the union, if any."""
    x0, vset = _unpack(s)
    if e[0] == x0:
        return None
    pool = set(e[1]) | set(vset)
    for m1 in _edges_inside(f, x0, pool):
        inner = _edges_inside(f, e[0], pool - set(m1[1]))
        if inner:
            return [m1, inner[0]]
    return None


def count_edge_absorbers(
    h: PartiteGraph, s, exhaustive_limit: int = 15, samples: int = 2000, seed: int = 0
):
    """Count edges whose union with the set spans a 2-matching.

    Exact for small vertex counts; above the limit a seeded sample of edges
    yields a lower bound, flagged by ``exact=False``.
    """
    x0, vset = _unpack(s)
    if len(vset) != h.k + 1:
        raise ValueError("edge absorption needs a color plus k+1 vertices")
    if h.n <= exhaustive_limit:
        count = sum(1 for e in h.edges if is_edge_absorber(h, s, e))
        return AbsorberCount(count=count, exact=True)
    rng = random.Random(seed)
    pool = list(h.edges)
    picks = pool if len(pool) <= samples else rng.sample(pool, samples)
    count = sum(1 for e in picks if is_edge_absorber(h, s, e))
    return AbsorberCount(count=count, exact=False)


@dataclass(frozen=True)
class AbsorberCount:
    count: int
    exact: bool


class _Steps:
    """Shared step counter so nested stages respect one budget."""

    def __init__(self, budget: int):
        self.left = budget

    def tick(self, cost: int = 1) -> bool:
        self.left -= cost
        return self.left >= 0


def _b_candidates(f: PartiteGraph, x0: int, vset, v: int) -> List[Edge]:
    """Stub edges through one target vertex, already avoiding the balanced set."""
    out = []
    banned = set(vset)
    for c, vs in f.edges:
        if c != x0 and v in vs and len(banned.intersection(vs)) == 1:
            out.append((c, tuple(u for u in vs if u != v)))
    return out


def _stub_loops(f, x0, vset, steps, orders=None):
    """Yield tuples (B_1..B_k) of pairwise disjoint stubs, one through each target."""
    k = f.k
    cands = [
        _b_candidates(f, x0, vset, vset[i]) if orders is None else orders[i]
        for i in range(k)
    ]

    def rec(i, used_c, used_v, acc):
        if i == k:
            yield tuple(acc)
            return
        for c, bverts in cands[i]:
            if not steps.tick():
                return
            if c in used_c or used_v.intersection(bverts):
                continue
            acc.append((c, bverts))
            yield from rec(i + 1, used_c | {c}, used_v | set(bverts), acc)
            acc.pop()

    yield from rec(0, set(), set(), [])


def _device_I_search(f, x0, vset, steps, orders=None):
    k = f.k
    for bs in _stub_loops(f, x0, vset, steps, orders):
        used_v = set(vset)
        used_c = {x0}
        for c, bverts in bs:
            used_v.update(bverts)
            used_c.add(c)
        for c, ws in f.edges:
            if c != x0 or used_v.intersection(ws):
                continue
            hit = None
            for perm in itertools.permutations(ws):
                if not steps.tick():
                    return
                if all(
                    (bs[i][0], tuple(sorted(bs[i][1] + (perm[i],)))) in f.edge_set
                    for i in range(k)
                ):
                    hit = perm
                    break
            if hit is None:
                continue
            f_edge = (c, ws)
            es = tuple(
                (bs[i][0], tuple(sorted(bs[i][1] + (hit[i],)))) for i in range(k)
            )
            eps = tuple(
                (bs[i][0], tuple(sorted(bs[i][1] + (vset[i],)))) for i in range(k)
            )
            blocked = used_v | set(ws)
            blocked_c = used_c | {e[0] for e in es}
            for g in f.edges:
                if g[0] not in blocked_c and not blocked.intersection(g[1]):
                    yield Device("I", es + (g,), eps + (f_edge, g))
                    break


def _device_III_search(f, x0, vset, steps):
    k = f.k
    for bs in _stub_loops(f, x0, vset, steps):
        used_v = set(vset)
        used_c = {x0}
        for c, bverts in bs:
            used_v.update(bverts)
            used_c.add(c)
        for y, ws in f.edges:
            if y in used_c or used_v.intersection(ws):
                continue
            hit = None
            for perm in itertools.permutations(ws):
                if not steps.tick():
                    return
                if all(
                    (bs[i][0], tuple(sorted(bs[i][1] + (perm[i],)))) in f.edge_set
                    for i in range(k)
                ):
                    hit = perm
                    break
            if hit is None:
                continue
            f_edge = (y, ws)
            taken = used_v | set(ws)
            for bv in f.color_edges(x0):
                if not steps.tick():
                    return
                if taken.intersection(bv):
                    continue
                if (y, bv) in f.edge_set:
                    es = tuple(
                        (bs[i][0], tuple(sorted(bs[i][1] + (hit[i],))))
                        for i in range(k)
                    ) + ((y, bv),)
                    eps = tuple(
                        (bs[i][0], tuple(sorted(bs[i][1] + (vset[i],))))
                        for i in range(k)
                    ) + ((x0, bv),)
                    yield Device("III", es, eps + (f_edge,))
                    break


def _device_II_search(f, x0, vset, steps, params: DichotomyParams):
    k, n = f.k, f.n
    cut = (0.5 + params.degree_boost / log(n)) * n
    pivots = []
    for y in range(f.q):
        if y == x0:
            continue
        if density_degree_dichotomy(f.neighborhood(y), params).cond_census:
            pivots.append(y)
    if not pivots:
        return
    for bs in _stub_loops(f, x0, vset, steps):
        used_v = set(vset)
        used_c = {x0}
        for c, bverts in bs:
            used_v.update(bverts)
            used_c.add(c)
        for c, ws in f.edges:
            if c != x0 or used_v.intersection(ws):
                continue
            # k-1 of the connector's vertices extend the first k-1 stubs;
            # the remaining one becomes the last replacement vertex
            for perm in itertools.permutations(ws):
                if not steps.tick():
                    return
                us, u_last = perm[: k - 1], perm[k - 1]
                if not all(
                    (bs[i][0], tuple(sorted(bs[i][1] + (us[i],)))) in f.edge_set
                    for i in range(k - 1)
                ):
                    continue
                got = _device_II_tail(
                    f, x0, vset, bs, (c, ws), us, u_last, pivots, used_v, used_c, cut, steps
                )
                if got is not None:
                    yield got
                    break


def _device_II_tail(f, x0, vset, bs, f_edge, us, u_last, pivots, used_v, used_c, cut, steps):
    k = f.k
    ngh = {}
    taken = used_v | set(f_edge[1])
    for y in pivots:
        if y in used_c:
            continue
        if y not in ngh:
            ngh[y] = f.neighborhood(y)
        hy = ngh[y]
        for t in itertools.combinations(range(f.n), k - 1):
            if not steps.tick():
                return None
            if taken.intersection(t):
                continue
            deg = sum(1 for e in hy.edges if set(t) <= set(e))
            if not deg > cut:
                continue
            for u_k in range(f.n):
                if u_k in taken or u_k in t:
                    continue
                e_k = (bs[k - 1][0], tuple(sorted(bs[k - 1][1] + (u_k,))))
                e_last_p = (y, tuple(sorted(t + (u_k,))))
                e_last = (y, tuple(sorted(t + (u_last,))))
                if (
                    e_k in f.edge_set
                    and e_last_p in f.edge_set
                    and e_last in f.edge_set
                    and u_last not in t
                ):
                    es = tuple(
                        (bs[i][0], tuple(sorted(bs[i][1] + (us[i],))))
                        for i in range(k - 1)
                    ) + (e_k, e_last)
                    eps = tuple(
                        (bs[i][0], tuple(sorted(bs[i][1] + (vset[i],))))
                        for i in range(k)
                    ) + (e_last_p,)
                    return Device("II", es, eps + (f_edge,))
    return None


def find_devices(
    f: PartiteGraph,
    s,
    kind: str,
    limit: int = 1,
    budget: int = 200_000,
    dichotomy_params: Optional[DichotomyParams] = None,
    seed: Optional[int] = None,
) -> List[Device]:
    """Staged search for absorbing devices of one kind.

    Stubs through the target vertices are explored lexicographically and,
    when a seed is given and the budget allows, again under shuffled
    orders. Every emitted device has passed :func:`verify_device`; budget
    exhaustion yields a short (possibly empty) list, not an error.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    x0, vset = _unpack(s)
    want = k_needed = f.k + 1 if kind == "edge" else f.k
    if len(vset) != k_needed:
        raise ValueError(f"kind {kind} needs a color plus {k_needed} vertices")
    del want

    out: List[Device] = []
    if kind == "edge":
        for e in f.edges:
            if limit and len(out) >= limit:
                break
            pair = find_two_matching(f, s, e)
            if pair is not None:
                out.append(Device("edge", (e,), tuple(pair)))
        for d in out:
            assert verify_device(f, s, d)
        return out

    steps = _Steps(budget)
    searcher = {
        "I": lambda: _device_I_search(f, x0, vset, steps),
        "III": lambda: _device_III_search(f, x0, vset, steps),
        "II": lambda: _device_II_search(
            f, x0, vset, steps, dichotomy_params or DichotomyParams()
        ),
    }[kind]
    seen = set()
    for d in searcher():
        if (d.matching_edges, d.witness) in seen:
            continue
        assert verify_device(f, s, d)
        seen.add((d.matching_edges, d.witness))
        out.append(d)
        if len(out) >= limit:
            return out

    if seed is not None and steps.left > 0 and len(out) < limit:
        rng = random.Random(seed)
        for _ in range(3):
            orders = [
                _b_candidates(f, x0, vset, vset[i]) for i in range(f.k)
            ]
            for o in orders:
                rng.shuffle(o)
            gen = {
                "I": lambda: _device_I_restart(f, x0, vset, steps, orders),
                "III": lambda: _device_III_restart(f, x0, vset, steps, orders),
                "II": lambda: _device_II_restart(
                    f, x0, vset, steps, orders, dichotomy_params or DichotomyParams()
                ),
            }[kind]
            for d in gen():
                if (d.matching_edges, d.witness) in seen:
                    continue
                assert verify_device(f, s, d)
                seen.add((d.matching_edges, d.witness))
                out.append(d)
                if len(out) >= limit:
                    return out
            if steps.left <= 0:
                break
    return out


def _device_I_restart(f, x0, vset, steps, orders):
    yield from _restart_common(f, x0, vset, steps, orders, _device_I_search)


def _device_III_restart(f, x0, vset, steps, orders):
    yield from _restart_common(f, x0, vset, steps, orders, _device_III_search)


def _device_II_restart(f, x0, vset, steps, orders, params):
    for bs in _stub_loops(f, x0, vset, steps, orders):
        # reuse the lexicographic tail under the shuffled stub choice
        probe = _Steps(steps.left)
        for d in _device_II_search(f, x0, vset, probe, params):
            yield d
            return
        steps.left = probe.left
        return


def _restart_common(f, x0, vset, steps, orders, lex_search):
    # shuffled stub orders feed the same staged construction
    k = f.k
    for bs in _stub_loops(f, x0, vset, steps, orders):
        sub = _Steps(steps.left)
        maker = _device_I_search if lex_search is _device_I_search else _device_III_search
        for d in maker(f, x0, vset, sub):
            steps.left = sub.left
            yield d
            return
        steps.left = sub.left
        return


@dataclass(frozen=True)
class AbsorbingFamily:
    """Outcome of randomized family selection, with per-set coverage stats."""

    mode: str
    matching: Matching
    devices: Tuple[Device, ...]
    covered_sets: int
    total_sets: int
    complete: bool
    attempts: int
    p: float


def select_absorbing_family(
    f: PartiteGraph,
    mode: str,
    p: Optional[float] = None,
    retries: int = 3,
    seed: int = 0,
    required_count: int = 1,
    s_pool: Optional[Sequence] = None,
    coverage_cap: int = 4000,
    find_budget: int = 60_000,
    p_constant: float = 1.0,
) -> AbsorbingFamily:
    """Sample an absorbing family and check that it covers every target set.

    Candidates are taken independently with probability ``p`` (default
    scales log^6 n against the candidate count); of any intersecting pair
    the later candidate is dropped, so the family is a matching. Coverage
    is checked exhaustively over the target shapes while their number is
    small, otherwise over a seeded sample. The best attempt is returned
    with ``complete`` flagging whether full coverage was reached.
    """
    if mode not in ("edge", "device"):
        raise ValueError("mode must be 'edge' or 'device'")
    n = f.n
    rng_pool = random.Random(seed ^ 0x5EED)

    if s_pool is None:
        if mode == "edge":
            shapes = f.q * comb(n, f.k + 1)
            size = f.k + 1
        else:
            shapes = f.q * comb(n, f.k)
            size = f.k
        if shapes <= coverage_cap:
            s_pool = [
                BalancedSet(c, vs)
                for c in range(f.q)
                for vs in itertools.combinations(range(n), size)
            ]
        else:
            s_pool = [
                BalancedSet(
                    rng_pool.randrange(f.q), tuple(rng_pool.sample(range(n), size))
                )
                for _ in range(coverage_cap)
            ]
    s_pool = list(s_pool)

    if mode == "edge":
        candidates: List = list(f.edges)
    else:
        candidates = []
        for s in s_pool:
            candidates.extend(
                find_devices(f, s, "I", limit=required_count, budget=find_budget)
            )
    if p is None:
        p = min(1.0, p_constant * log(max(n, 3)) ** 6 / max(1, len(candidates)))

    best = None
    for attempt in range(max(1, retries)):
        rng = random.Random((seed, attempt))
        picked = [c for c in candidates if rng.random() < p]
        family: List = []
        used_c: set = set()
        used_v: set = set()
        for cand in picked:
            edges = [cand] if mode == "edge" else list(cand.matching_edges)
            cs = {c for c, _ in edges}
            vs = {v for _, e in edges for v in e}
            if cs & used_c or vs & used_v:
                continue  # drop the later of an intersecting pair
            family.append(cand)
            used_c |= cs
            used_v |= vs
        covered = 0
        for s in s_pool:
            if mode == "edge":
                hits = sum(1 for e in family if is_edge_absorber(f, s, e))
            else:
                hits = sum(1 for d in family if verify_device(f, s, d))
            if hits >= required_count:
                covered += 1
        complete = covered == len(s_pool)
        if mode == "edge":
            matching = Matching(tuple(family))
            devices: Tuple[Device, ...] = ()
        else:
            matching = Matching(tuple(e for d in family for e in d.matching_edges))
            devices = tuple(family)
        result = AbsorbingFamily(
            mode=mode,
            matching=matching,
            devices=devices,
            covered_sets=covered,
            total_sets=len(s_pool),
            complete=complete,
            attempts=attempt + 1,
            p=p,
        )
        if complete:
            return result
        if best is None or result.covered_sets > best.covered_sets:
            best = result
    return best
