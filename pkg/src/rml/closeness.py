"""Distance of a hypergraph from the tight configurations.

Two metrics: a raw edge-difference count against a fixed comparison graph,
and the same count minimized over relabelings of a template. Because every
template here is determined by one side of a bipartition, the relabeling
minimum reduces to a minimum over choices of that side.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, comb, log
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

from .core import Bipartition, KGraph, PartiteGraph, codegree
from .generators import extremal_a_size, extremal_parity

Graphlike = Union[KGraph, PartiteGraph]

TEMPLATES = ("extremal", "extremal-complement", "parity0", "parity1")


@dataclass(frozen=True)
class ClosenessReport:
    """Edge-difference count with the normalizations used in the bounds.

    ``normalizer`` is |V|^k for k-graphs and (n + n/k)^(k+1) for partite
    graphs; ``normalizations`` additionally records the other conventions
    so no single one is baked in.
    """

    missing_count: int
    normalizer: int
    epsilon_effective: Fraction
    witness: Optional[Bipartition] = None
    exhaustive: bool = True
    normalizations: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.epsilon_effective <= 1:
            raise ValueError("effective epsilon must lie in [0, 1]")


@dataclass(frozen=True)
class VertexClassification:
    """Vertices split by how many template edges through them are missing."""

    alpha: Fraction
    good_colors: frozenset
    bad_colors: frozenset
    good_verts: frozenset
    bad_verts: frozenset

    @property
    def bad_count(self) -> int:
        return len(self.bad_colors) + len(self.bad_verts)

    @property
    def good_count(self) -> int:
        return len(self.good_colors) + len(self.good_verts)


def _normalizations(g: Graphlike) -> Tuple[int, Dict[str, int]]:
    if isinstance(g, KGraph):
        main = g.n**g.k
        return main, {"v_pow_k": main, "n_pow_k": main}
    total = g.n + g.q
    main = total ** (g.k + 1)
    return main, {
        "v_pow_k": total**g.k,
        "n_pow_k": g.n**g.k,
        "partite": main,
    }


def strong_closeness(h1: Graphlike, h2: Graphlike) -> ClosenessReport:
    """Count of edges of ``h1`` missing from ``h2``, plus normalizations."""
    if type(h1) is not type(h2):
        raise ValueError("cannot compare a k-graph with a partite graph")
    if isinstance(h1, KGraph):
        if (h1.n, h1.k) != (h2.n, h2.k):
            raise ValueError("shape mismatch")
    elif (h1.q, h1.n, h1.k) != (h2.q, h2.n, h2.k):
        raise ValueError("shape mismatch")
    missing = sum(1 for e in h1.edges if e not in h2.edge_set)
    normalizer, all_norms = _normalizations(h1)
    return ClosenessReport(
        missing_count=missing,
        normalizer=normalizer,
        epsilon_effective=Fraction(missing, normalizer),
        normalizations=all_norms,
    )


def _template_spec(template: str, n: int, k: int, w_size: Optional[int]):
    """Return (side size, required parity) for a named template."""
    if template == "extremal":
        return extremal_a_size(n, k), extremal_parity(k)
    if template == "extremal-complement":
        return extremal_a_size(n, k), 1 - extremal_parity(k)
    if template == "parity0":
        return (n // 2 if w_size is None else w_size), 0
    if template == "parity1":
        return (n // 2 if w_size is None else w_size), 1
    raise ValueError(f"unknown template {template!r}, expected one of {TEMPLATES}")


def _template_edge_count(n: int, k: int, a_size: int, parity: int) -> int:
    return sum(
        comb(a_size, j) * comb(n - a_size, k - j)
        for j in range(parity, k + 1, 2)
    )


def _missing_for_side(h: KGraph, a_mask: int, parity: int, total: int) -> int:
    # template edges minus template edges present in h
    present = 0
    for m in h.masks:
        if (m & a_mask).bit_count() % 2 == parity:
            present += 1
    return total - present


def weak_closeness_to_extremal(
    h: KGraph,
    template: str,
    budget: int = 250_000,
    w_size: Optional[int] = None,
    seed: int = 0,
    restarts: int = 32,
    full_perm_samples: int = 0,
) -> ClosenessReport:
    """Minimum template-minus-graph edge count over relabelings of the template.

    The templates are each determined by their distinguished side, so the
    minimization runs over all vertex sets of the mandated size. That is
    exhaustive while the number of sides is within ``budget``; beyond it, a
    seeded local swap descent from random starts reports an upper bound
    flagged non-exhaustive.

    ``full_perm_samples`` > 0 additionally samples that many random full
    permutations of the default template as a sanity cross-check that the
    side-restricted minimum is never beaten.
    """
    if h.masks is None:
        raise ValueError("weak closeness needs mask support (n <= 63)")
    a_size, parity = _template_spec(template, h.n, h.k, w_size)
    total = _template_edge_count(h.n, h.k, a_size, parity)
    normalizer, all_norms = _normalizations(h)

    def cost_of(a_mask: int) -> int:
        return _missing_for_side(h, a_mask, parity, total)

    exhaustive = comb(h.n, a_size) <= budget
    if exhaustive:
        best, best_set = None, None
        for a in itertools.combinations(range(h.n), a_size):
            mask = 0
            for v in a:
                mask |= 1 << v
            c = cost_of(mask)
            if best is None or c < best:
                best, best_set = c, a
            if best == 0:
                break
    else:
        rng = random.Random(seed)
        best, best_set = None, None
        verts = list(range(h.n))
        for _ in range(restarts):
            a = set(rng.sample(verts, a_size))
            cur = cost_of(_set_mask(a))
            improved = True
            while improved and cur > 0:
                improved = False
                for out_v in sorted(a):
                    for in_v in verts:
                        if in_v in a:
                            continue
                        cand = (a - {out_v}) | {in_v}
                        c = cost_of(_set_mask(cand))
                        if c < cur:
                            a, cur, improved = cand, c, True
                            break
                    if improved:
                        break
            if best is None or cur < best:
                best, best_set = cur, tuple(sorted(a))
            if best == 0:
                break

    if full_perm_samples:
        rng = random.Random(seed + 1)
        for _ in range(full_perm_samples):
            perm = list(range(h.n))
            rng.shuffle(perm)
            permuted = _set_mask({perm[v] for v in range(a_size)})
            if cost_of(permuted) < best:
                raise AssertionError("full permutation beat the side-restricted minimum")

    return ClosenessReport(
        missing_count=best,
        normalizer=normalizer,
        epsilon_effective=Fraction(best, normalizer),
        witness=Bipartition.from_w(h.n, best_set),
        exhaustive=exhaustive,
        normalizations=all_norms,
    )


def _set_mask(vs: Iterable[int]) -> int:
    m = 0
    for v in vs:
        m |= 1 << v
    return m


def classify_vertices(f: PartiteGraph, h: PartiteGraph, alpha) -> VertexClassification:
    """Split V(f) into good and bad by missing template edges through each vertex.

    A vertex is good when strictly fewer than ``alpha * |V|^k`` edges of
    ``h`` through it are absent from ``f``.
    """
    if (f.q, f.n, f.k) != (h.q, h.n, h.k):
        raise ValueError("shape mismatch")
    alpha = Fraction(alpha) if not isinstance(alpha, float) else alpha
    threshold = alpha * (f.q + f.n) ** f.k
    color_miss = [0] * f.q
    vert_miss = [0] * f.n
    for c, vs in h.edges:
        if (c, vs) not in f.edge_set:
            color_miss[c] += 1
            for v in vs:
                vert_miss[v] += 1
    good_c = frozenset(c for c in range(f.q) if color_miss[c] < threshold)
    good_v = frozenset(v for v in range(f.n) if vert_miss[v] < threshold)
    return VertexClassification(
        alpha=alpha,
        good_colors=good_c,
        bad_colors=frozenset(range(f.q)) - good_c,
        good_verts=good_v,
        bad_verts=frozenset(range(f.n)) - good_v,
    )


def multiset_density(
    h: Graphlike,
    sets: Sequence[Iterable[int]],
    colors: Optional[Iterable[int]] = None,
) -> int:
    """Ordered tuples (v_1, ..., v_k) with v_i in the i-th set forming an edge.

    For a partite graph, ``colors`` restricts which colors' edges are
    counted (default: all); the tuple ranges over the vertex part only.
    """
    if isinstance(h, KGraph):
        if colors is not None:
            raise ValueError("color restriction applies to partite graphs only")
        edge_verts = h.edges
    else:
        allowed = set(range(h.q)) if colors is None else set(colors)
        edge_verts = tuple(vs for c, vs in h.edges if c in allowed)
    nsets = [frozenset(s) for s in sets]
    if len(nsets) != (h.k if isinstance(h, KGraph) else h.k):
        raise ValueError("need exactly k vertex sets")
    count = 0
    for vs in edge_verts:
        for perm in itertools.permutations(vs):
            if all(perm[i] in nsets[i] for i in range(len(nsets))):
                count += 1
    return count


@dataclass(frozen=True)
class DichotomyParams:
    """Knobs scaling the log-based thresholds of the density/degree dichotomy.

    The defaults follow the asymptotic statement; at bench sizes those
    thresholds are unreachable for every graph, so experiments scale them.
    ``log`` is the natural logarithm throughout.
    """

    set_size_slack: float = 1.0  # coefficient of the 1/log n shrink of |N_i|
    density_floor_scale: float = 1.0  # scales n^k / log^3 n
    degree_boost: float = 2.0  # coefficient of the 1/log n bump in the degree cut
    census_floor_scale: float = 1.0  # scales n^(k-1) / log n
    eval_cap: int = 2_000_000  # exact enumeration allowed up to this many tuples
    sample_rounds: int = 4_000
    seed: int = 0


@dataclass(frozen=True)
class DichotomyReport:
    label: str  # "Both" | "CondI" | "CondII" | "Neither"
    cond_density: bool
    cond_census: bool
    density_exact: bool
    census_count: int
    min_density: Optional[int]
    min_set_size: int
    density_floor: float
    degree_cut: float
    census_floor: float
    note: str = ""


def density_degree_dichotomy(
    h: KGraph, params: DichotomyParams = DichotomyParams()
) -> DichotomyReport:
    """Evaluate the two-way density/degree predicate on a k-graph.

    Condition one asks every family of large vertex sets to span many
    ordered edges; by monotonicity it suffices to scan the minimum-size
    sets, and since the ordered count is symmetric under permuting the
    sets, unordered multisets are enumerated. The scan is exact while the
    multiset count fits ``eval_cap``, otherwise sampled and flagged.
    Condition two is an exact census of (k-1)-sets with large degree.
    """
    n, k = h.n, h.k
    ln = log(n)
    m = min(n, max(1, ceil((0.5 - params.set_size_slack / ln) * n)))
    floor = params.density_floor_scale * n**k / ln**3
    degree_cut = (0.5 + params.degree_boost / ln) * n
    census_floor = params.census_floor_scale * n ** (k - 1) / ln

    census = 0
    for s in itertools.combinations(range(n), k - 1):
        if codegree(h, s) > degree_cut:
            census += 1
    cond2 = census >= census_floor

    subsets = list(itertools.combinations(range(n), m))
    evals = comb(len(subsets) + k - 1, k)
    note = ""
    min_density: Optional[int] = None
    if evals <= params.eval_cap:
        exact = True
        cond1 = True
        for multi in itertools.combinations_with_replacement(subsets, k):
            d = _density_at_least(h, multi, floor)
            if min_density is None or d < min_density:
                min_density = d
            if d < floor:
                cond1 = False
                break
    else:
        exact = False
        rng = random.Random(params.seed)
        cond1 = True
        for _ in range(params.sample_rounds):
            multi = tuple(tuple(sorted(rng.sample(range(n), m))) for _ in range(k))
            d = _density_at_least(h, multi, floor)
            if min_density is None or d < min_density:
                min_density = d
            if d < floor:
                cond1 = False
                break
        note = (
            f"density condition sampled ({params.sample_rounds} rounds), "
            "a True verdict is a confidence statement, not a certificate"
        )

    label = {
        (True, True): "Both",
        (True, False): "CondI",
        (False, True): "CondII",
        (False, False): "Neither",
    }[(cond1, cond2)]
    return DichotomyReport(
        label=label,
        cond_density=cond1,
        cond_census=cond2,
        density_exact=exact,
        census_count=census,
        min_density=min_density,
        min_set_size=m,
        density_floor=floor,
        degree_cut=degree_cut,
        census_floor=census_floor,
        note=note,
    )


def _density_at_least(h: KGraph, sets: Sequence[Tuple[int, ...]], stop_at: float) -> int:
    # early exit once the floor is reached; the caller only needs the comparison
    nsets = [frozenset(s) for s in sets]
    count = 0
    for vs in h.edges:
        for perm in itertools.permutations(vs):
            if all(perm[i] in nsets[i] for i in range(len(nsets))):
                count += 1
        if count >= stop_at:
            return count
    return count
