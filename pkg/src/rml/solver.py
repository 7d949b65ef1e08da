"""Exact search for rainbow perfect matchings and their partite equivalents.

The engine anchors each branch on the lowest uncovered vertex: that vertex
must be covered by exactly one edge of one unused color, so enumerating
(color, edge) pairs through it is complete and generates each partial
matching once. Colors with identical edge sets are interchangeable, so
only the lowest unused color of each equivalence class branches. Failed
(covered, colors-used) states are memoized while the vertex set fits in a
machine word.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .core import GraphFamily, Matching, PartiteGraph
from .generators import lift_family

ORACLE_MAX_N = 12


class Status(Enum):
    FOUND = "found"
    NOT_FOUND = "not-found"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Budget:
    seconds: float = 60.0
    node_cap: int = 50_000_000

    @classmethod
    def default(cls) -> "Budget":
        env = os.environ.get("RML_BUDGET_SECS")
        return cls(seconds=float(env)) if env else cls()


@dataclass
class SolveResult:
    status: Status
    matching: Optional[Matching]
    nodes_expanded: int
    elapsed: float
    trace: Optional[list] = field(default=None, repr=False)

    @property
    def exit_code(self) -> int:
        return {Status.FOUND: 0, Status.NOT_FOUND: 1, Status.TIMEOUT: 2}[self.status]


class _OutOfBudget(Exception):
    pass


class _Engine:
    """Backtracking search over per-color candidate edge lists."""

    def __init__(self, per_color: Sequence[Sequence[Tuple[int, ...]]], n: int, k: int):
        self.n = n
        self.k = k
        self.q = len(per_color)
        if n > 63:
            raise ValueError("solver masks require n <= 63")
        self.full = (1 << n) - 1
        # group interchangeable colors; only the lowest unused one branches
        keys = {}
        self.class_of = []
        for c, edges in enumerate(per_color):
            key = frozenset(edges)
            if key not in keys:
                keys[key] = len(keys)
            self.class_of.append(keys[key])
        self.n_classes = len(keys)
        self.class_colors: List[List[int]] = [[] for _ in range(self.n_classes)]
        for c, cl in enumerate(self.class_of):
            self.class_colors[cl].append(c)
        rep_edges = {}
        for c, edges in enumerate(per_color):
            rep_edges.setdefault(self.class_of[c], edges)
        # per class: all masked edges, and a bucket per vertex
        self.class_edges: List[List[Tuple[int, Tuple[int, ...]]]] = []
        self.buckets: List[List[List[Tuple[int, Tuple[int, ...]]]]] = []
        for cl in range(self.n_classes):
            masked = []
            for verts in sorted(rep_edges[cl]):
                m = 0
                for v in verts:
                    m |= 1 << v
                masked.append((m, verts))
            self.class_edges.append(masked)
            bucket: List[List[Tuple[int, Tuple[int, ...]]]] = [[] for _ in range(n)]
            for m, verts in masked:
                for v in verts:
                    bucket[v].append((m, verts))
            self.buckets.append(bucket)
        self.nodes = 0
        self.deadline = 0.0
        self.node_cap = 0
        self.failed: set = set()

    def _lowest_unused(self, used_mask: int, cl: int) -> Optional[int]:
        for c in self.class_colors[cl]:
            if not used_mask >> c & 1:
                return c
        return None

    def run(
        self,
        budget: Budget,
        covered: int = 0,
        used_mask: int = 0,
        chosen: Optional[list] = None,
    ):
        self.deadline = time.perf_counter() + budget.seconds
        self.node_cap = budget.node_cap
        self.nodes = 0
        self.failed.clear()
        return self._search(covered, used_mask, list(chosen or []))

    def _search(self, covered: int, used_mask: int, chosen: list):
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise _OutOfBudget
        if self.nodes % 1024 == 0 and time.perf_counter() > self.deadline:
            raise _OutOfBudget
        if used_mask.bit_count() == self.q:
            return list(chosen)
        key = (covered, used_mask)
        if key in self.failed:
            return None

        open_classes = []
        for cl in range(self.n_classes):
            c = self._lowest_unused(used_mask, cl)
            if c is not None:
                open_classes.append((cl, c))

        # fail fast if some unused color has no candidate edge at all
        if len(open_classes) > 1:
            for cl, _ in open_classes:
                if not any(not m & covered for m, _ in self.class_edges[cl]):
                    self.failed.add(key)
                    return None

        free = ~covered & self.full
        v = (free & -free).bit_length() - 1
        branches = []
        for cl, c in open_classes:
            cands = [mv for mv in self.buckets[cl][v] if not mv[0] & covered]
            if cands:
                branches.append((len(cands), c, cands))
        branches.sort(key=lambda b: (b[0], b[1]))
        for _, c, cands in branches:
            for m, verts in cands:
                chosen.append((c, verts))
                got = self._search(covered | m, used_mask | 1 << c, chosen)
                if got is not None:
                    return got
                chosen.pop()
        self.failed.add(key)
        return None


def _per_color_of(container: Union[GraphFamily, PartiteGraph]):
    if isinstance(container, GraphFamily):
        return [g.edges for g in container.members], container.n, container.k
    return (
        [container.color_edges(c) for c in range(container.q)],
        container.n,
        container.k,
    )


def _solve(container, budget: Optional[Budget], jobs: int) -> SolveResult:
    per_color, n, k = _per_color_of(container)
    budget = budget or Budget.default()
    start = time.perf_counter()
    if jobs > 1:
        return _solve_parallel(container, per_color, n, k, budget, jobs, start)
    engine = _Engine(per_color, n, k)
    try:
        got = engine.run(budget)
    except _OutOfBudget:
        return SolveResult(Status.TIMEOUT, None, engine.nodes, time.perf_counter() - start)
    elapsed = time.perf_counter() - start
    if got is None:
        return SolveResult(Status.NOT_FOUND, None, engine.nodes, elapsed)
    matching = Matching(tuple(got))
    if not verify_matching(container, matching):
        raise AssertionError("engine produced an invalid matching")
    return SolveResult(Status.FOUND, matching, engine.nodes, elapsed)


def _root_branches(per_color, n, k):
    engine = _Engine(per_color, n, k)
    branches = []
    for cl in range(engine.n_classes):
        c = engine.class_colors[cl][0]
        for m, verts in engine.buckets[cl][0]:
            branches.append((c, m, verts))
    return branches


def _worker(args):
    per_color, n, k, branch_chunk, seconds, node_cap = args
    engine = _Engine(per_color, n, k)
    budget = Budget(seconds=seconds, node_cap=node_cap)
    nodes = 0
    for c, m, verts in branch_chunk:
        try:
            got = engine.run(budget, covered=m, used_mask=1 << c, chosen=[(c, verts)])
        except _OutOfBudget:
            return ("timeout", None, nodes + engine.nodes)
        nodes += engine.nodes
        if got is not None:
            return ("found", got, nodes)
    return ("not-found", None, nodes)


def _solve_parallel(container, per_color, n, k, budget, jobs, start) -> SolveResult:
    branches = _root_branches(per_color, n, k)
    if not branches:
        return SolveResult(Status.NOT_FOUND, None, 1, time.perf_counter() - start)
    chunks = [branches[i::jobs] for i in range(jobs)]
    chunks = [c for c in chunks if c]
    args = [(per_color, n, k, ch, budget.seconds, budget.node_cap) for ch in chunks]
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        outcomes = list(pool.map(_worker, args))
    nodes = sum(o[2] for o in outcomes)
    elapsed = time.perf_counter() - start
    for status, got, _ in outcomes:
        if status == "found":
            matching = Matching(tuple(got))
            if not verify_matching(container, matching):
                raise AssertionError("engine produced an invalid matching")
            return SolveResult(Status.FOUND, matching, nodes, elapsed)
    if any(o[0] == "timeout" for o in outcomes):
        return SolveResult(Status.TIMEOUT, None, nodes, elapsed)
    return SolveResult(Status.NOT_FOUND, None, nodes, elapsed)


def solve_rainbow_pm(
    fam: GraphFamily, budget: Optional[Budget] = None, jobs: int = 1
) -> SolveResult:
    """Decide whether the family admits a rainbow perfect matching.

    FOUND results carry a matching verified independently; TIMEOUT is
    inconclusive, never a "no".
    """
    if fam.n != fam.k * len(fam.members):
        raise ValueError("family is not balanced")
    return _solve(fam, budget, jobs)


def solve_partite_pm(
    pg: PartiteGraph, budget: Optional[Budget] = None, jobs: int = 1
) -> SolveResult:
    """Decide whether a balanced partite graph has a perfect matching."""
    if not pg.balanced:
        raise ValueError("partite graph is not balanced")
    return _solve(pg, budget, jobs)


def oracle_rainbow_pm(fam: GraphFamily) -> SolveResult:
    """Reference oracle: nested enumeration of one edge per color.

    No ordering heuristics, no memoization; only prefixes that are already
    disjoint are extended. Refused above n = 12, where the enumeration
    stops being a sanity check and starts being a stress test.
    """
    if fam.n > ORACLE_MAX_N:
        raise ValueError(f"oracle is restricted to n <= {ORACLE_MAX_N}")
    if fam.n != fam.k * len(fam.members):
        raise ValueError("family is not balanced")
    start = time.perf_counter()
    members = [g.edges for g in fam.members]
    nodes = 0

    def rec(i: int, used: frozenset, acc: list):
        nonlocal nodes
        if i == len(members):
            return list(acc)
        for verts in members[i]:
            nodes += 1
            if used.isdisjoint(verts):
                acc.append((i, verts))
                got = rec(i + 1, used | frozenset(verts), acc)
                if got is not None:
                    return got
                acc.pop()
        return None

    got = rec(0, frozenset(), [])
    elapsed = time.perf_counter() - start
    if got is None:
        return SolveResult(Status.NOT_FOUND, None, nodes, elapsed)
    return SolveResult(Status.FOUND, Matching(tuple(got)), nodes, elapsed)


def check_lift_equivalence(fam: GraphFamily, budget: Optional[Budget] = None) -> Optional[bool]:
    """Whether the rainbow solver and the lifted partite solver agree.

    Returns True/False for agreement/disagreement and None when a timeout
    on either side leaves the comparison inconclusive.
    """
    a = solve_rainbow_pm(fam, budget)
    b = solve_partite_pm(lift_family(fam), budget)
    if Status.TIMEOUT in (a.status, b.status):
        return None
    return a.status == b.status


def verify_matching(
    container: Union[GraphFamily, PartiteGraph],
    m: Matching,
    require_perfect: bool = True,
) -> bool:
    """Check membership, disjointness, color distinctness, and optionally coverage."""
    seen_colors = set()
    seen_verts: set = set()
    if isinstance(container, GraphFamily):
        q, n = len(container.members), container.n
    else:
        q, n = container.q, container.n
    for c, vs in m.edges:
        if not 0 <= c < q:
            return False
        if isinstance(container, GraphFamily):
            if not container.members[c].has_edge(vs):
                return False
        elif not container.has_edge(c, vs):
            return False
        if c in seen_colors or seen_verts.intersection(vs):
            return False
        seen_colors.add(c)
        seen_verts.update(vs)
    if require_perfect:
        return seen_colors == set(range(q)) and seen_verts == set(range(n))
    return True
