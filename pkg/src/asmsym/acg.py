"""Active constraint graphs: construction, symmetry orbits, rigidity.

An active constraint graph records which cross-bunch sphere pairs sit in
the closed well interval [r+r', r+d+r'+d'].  Vertices carry (point
index, bunch index) labels; internally they are flattened to 0..n-1 in
bunch order.  Rigidity questions are decided by the exact rank of the
3D rigidity matrix at random integer embeddings.
"""

from __future__ import annotations

import itertools
import json
import random
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .assembly import (
    AssemblyConfiguration,
    WautElement,
    WautGroup,
    _is_exact,
    sqdist,
    waut,
)
from .graphs import FlatGraph, norm_edge
from .permgroup import Permutation

ENUMERATION_SPHERE_CAP = 9
ENUMERATION_GRAPH_CAP = 5_000_000


class EnumerationSizeError(ValueError):
    """Raised when an exhaustive graph scan would be too large."""


class ActiveConstraintGraph:
    """Cross-bunch contact graph of an assembly configuration shape."""

    __slots__ = ("bunch_sizes", "edges", "_offsets")

    def __init__(self, bunch_sizes: Sequence[int], edges: Iterable[tuple[int, int]]):
        self.bunch_sizes = tuple(bunch_sizes)
        offsets = [0]
        for s in self.bunch_sizes:
            offsets.append(offsets[-1] + s)
        self._offsets = tuple(offsets)
        es = frozenset(norm_edge(u, v) for u, v in edges)
        for u, v in es:
            if self.bunch_of(u) == self.bunch_of(v):
                raise ValueError(
                    f"edge ({u},{v}) joins two vertices of the same bunch"
                )
        self.edges = es

    @property
    def n_vertices(self) -> int:
        return self._offsets[-1]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def bunch_of(self, flat: int) -> int:
        for l in range(len(self.bunch_sizes)):
            if flat < self._offsets[l + 1]:
                return l
        raise IndexError(flat)

    def vertex_label(self, flat: int) -> tuple[int, int]:
        l = self.bunch_of(flat)
        return (flat - self._offsets[l], l)

    def flat_of_label(self, label: tuple[int, int]) -> int:
        i, l = label
        return self._offsets[l] + i

    def vertex_labels(self) -> list[tuple[int, int]]:
        return [self.vertex_label(v) for v in range(self.n_vertices)]

    def degree(self, flat: int) -> int:
        return sum(1 for e in self.edges if flat in e)

    def degrees(self) -> list[int]:
        d = [0] * self.n_vertices
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def graph(self) -> FlatGraph:
        return FlatGraph(self.n_vertices, self.edges)

    def is_subgraph_of(self, other: "ActiveConstraintGraph") -> bool:
        return (
            self.bunch_sizes == other.bunch_sizes and self.edges <= other.edges
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ActiveConstraintGraph)
            and self.bunch_sizes == other.bunch_sizes
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.bunch_sizes, self.edges))

    def __lt__(self, other: "ActiveConstraintGraph") -> bool:
        return sorted(self.edges) < sorted(other.edges)

    def __repr__(self) -> str:
        return f"ActiveConstraintGraph(bunches={self.bunch_sizes}, m={self.n_edges})"

    def to_json(self) -> str:
        return json.dumps(
            {
                "bunch_sizes": list(self.bunch_sizes),
                "vertices": [list(self.vertex_label(v)) for v in range(self.n_vertices)],
                "edges": sorted(
                    [list(self.vertex_label(u)), list(self.vertex_label(v))]
                    for u, v in self.edges
                ),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ActiveConstraintGraph":
        data = json.loads(text)
        sizes = tuple(int(s) for s in data["bunch_sizes"])
        acg = cls(sizes, [])
        edges = [
            (acg.flat_of_label(tuple(e[0])), acg.flat_of_label(tuple(e[1])))
            for e in data["edges"]
        ]
        return cls(sizes, edges)

    def to_dot(self) -> str:
        palette = [
            "lightblue", "salmon", "palegreen", "gold", "plum", "khaki",
            "lightgrey", "orange", "cyan",
        ]
        lines = ["graph acg {", "  node [style=filled];"]
        for v in range(self.n_vertices):
            i, l = self.vertex_label(v)
            color = palette[l % len(palette)]
            lines.append(f'  v{v} [label="({i + 1},{l + 1})", fillcolor={color}];')
        for u, v in sorted(self.edges):
            lines.append(f"  v{u} -- v{v};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _in_well(sq, lo, hi) -> bool:
    """lo^2 <= sq <= hi^2, exactly when everything is rational."""
    if _is_exact(sq) and _is_exact(lo) and _is_exact(hi):
        return Fraction(lo) ** 2 <= sq <= Fraction(hi) ** 2
    from .assembly import REL_TOL

    sqf, lof, hif = float(sq), float(lo) ** 2, float(hi) ** 2
    slack = REL_TOL * max(1.0, abs(sqf))
    return lof - slack <= sqf <= hif + slack


def active_constraint_graph(config: AssemblyConfiguration) -> ActiveConstraintGraph:
    """Edge for every cross-bunch pair inside the closed well interval."""
    sizes = [b.size for b in config.bunches]
    edges = []
    for l, m in itertools.combinations(range(config.k), 2):
        bl, bm = config.bunches[l], config.bunches[m]
        for i, p in enumerate(bl.points):
            for j, q in enumerate(bm.points):
                lo = Fraction(bl.radii[i]) + Fraction(bm.radii[j]) if (
                    _is_exact(bl.radii[i]) and _is_exact(bm.radii[j])
                ) else float(bl.radii[i]) + float(bm.radii[j])
                hi = (
                    Fraction(bl.radii[i]) + Fraction(bl.annuli[i])
                    + Fraction(bm.radii[j]) + Fraction(bm.annuli[j])
                ) if all(
                    _is_exact(x) for x in (bl.radii[i], bl.annuli[i], bm.radii[j], bm.annuli[j])
                ) else (
                    float(bl.radii[i]) + float(bl.annuli[i])
                    + float(bm.radii[j]) + float(bm.annuli[j])
                )
                if _in_well(sqdist(p, q), lo, hi):
                    edges.append(
                        (config.flat_index(l, i), config.flat_index(m, j))
                    )
    return ActiveConstraintGraph(sizes, edges)


def full_graph(acg: ActiveConstraintGraph) -> FlatGraph:
    """The constraint graph plus a clique on each bunch."""
    edges = set(acg.edges)
    for l, size in enumerate(acg.bunch_sizes):
        base = acg._offsets[l]
        edges.update(
            (base + i, base + j) for i, j in itertools.combinations(range(size), 2)
        )
    return FlatGraph(acg.n_vertices, edges)


def apply_to_acg(psi: WautElement, acg: ActiveConstraintGraph) -> ActiveConstraintGraph:
    """Relabel the graph by (i, l) -> (pi_l(i), sigma(l))."""
    f = psi.flat
    return ActiveConstraintGraph(
        acg.bunch_sizes, ((f(u), f(v)) for u, v in acg.edges)
    )


def acg_isomorphic(
    g1: ActiveConstraintGraph,
    g2: ActiveConstraintGraph,
    group: WautGroup,
) -> WautElement | None:
    """A witness relabeling with psi(g1) = g2, or None.

    Candidates are pruned by the per-bunch degree multisets before any
    edge set is remapped.
    """
    if g1.bunch_sizes != g2.bunch_sizes or g1.n_edges != g2.n_edges:
        return None

    def bunch_profile(g: ActiveConstraintGraph) -> list:
        degs = g.degrees()
        return [
            sorted(degs[g._offsets[l] : g._offsets[l + 1]])
            for l in range(len(g.bunch_sizes))
        ]

    prof1, prof2 = bunch_profile(g1), bunch_profile(g2)
    for psi in group.elements:
        if any(prof1[l] != prof2[psi.sigma(l)] for l in range(len(prof1))):
            continue
        if apply_to_acg(psi, g1) == g2:
            return psi
    return None


def acg_stabilizer(acg: ActiveConstraintGraph, group: WautGroup) -> WautGroup:
    """All relabelings fixing the graph."""
    members = [psi for psi in group.elements if apply_to_acg(psi, acg) == acg]
    return group.subgroup(members)


# ---------------------------------------------------------------------------
# Generic rigidity via exact matrix rank


def _integer_rank(rows: list[list[int]]) -> int:
    """Rank over the rationals by fraction-free Gaussian elimination."""
    m = [row[:] for row in rows if any(row)]
    if not m:
        return 0
    cols = len(m[0])
    rank = 0
    prev = 1
    for c in range(cols):
        pivot = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pr = m[rank]
        for r in range(rank + 1, len(m)):
            row = m[r]
            if row[c]:
                f = row[c]
                for j in range(c, cols):
                    row[j] = (row[j] * pr[c] - f * pr[j]) // prev
            else:
                for j in range(c, cols):
                    row[j] = (row[j] * pr[c]) // prev
        prev = pr[c]
        rank += 1
        if rank == len(m):
            break
    return rank


def rigidity_rank(n: int, edges: Iterable[tuple[int, int]], coords: Sequence[tuple[int, int, int]]) -> int:
    """Rank of the 3D rigidity matrix at the given integer embedding."""
    rows = []
    for u, v in edges:
        row = [0] * (3 * n)
        for d in range(3):
            diff = coords[u][d] - coords[v][d]
            row[3 * u + d] = diff
            row[3 * v + d] = -diff
        rows.append(row)
    return _integer_rank(rows)


class RigidityVerdict:
    """Outcome of a generic rigidity test."""

    __slots__ = ("n", "rank", "rigid", "redundant")

    def __init__(self, n: int, rank: int, n_edges: int):
        self.n = n
        self.rank = rank
        target = 3 * n - 6 if n >= 3 else (1 if n == 2 else 0)
        self.rigid = rank >= target if n >= 3 else (n == 1 or n_edges >= 1)
        self.redundant = n_edges > rank

    @property
    def status(self) -> str:
        if not self.rigid:
            return "flexible"
        return "rigid-redundant" if self.redundant else "rigid"

    def __repr__(self) -> str:
        return f"RigidityVerdict({self.status}, rank={self.rank})"


@lru_cache(maxsize=100_000)
def _generic_rank_cached(n: int, edges: frozenset) -> int:
    rng = random.Random(0xACE ^ hash((n, tuple(sorted(edges)))) & 0xFFFFFFFF)
    span = 10_000
    while True:
        ranks = []
        for _ in range(3):
            coords = [
                (rng.randrange(-span, span), rng.randrange(-span, span), rng.randrange(-span, span))
                for _ in range(n)
            ]
            ranks.append(rigidity_rank(n, edges, coords))
        best = max(ranks)
        if ranks.count(best) >= 2:
            return best
        span *= 100


def generic_rigidity(graph: FlatGraph | ActiveConstraintGraph) -> RigidityVerdict:
    """Generic 3D rigidity by exact rank at random integer embeddings.

    Three independent embeddings are sampled and majority-voted; on
    disagreement the coordinate range escalates.  The rank is exact for
    each embedding, so the only failure mode is an unlucky non-generic
    sample, never floating-point error.
    """
    if isinstance(graph, ActiveConstraintGraph):
        graph = graph.graph()
    rank = _generic_rank_cached(graph.n, graph.edges)
    return RigidityVerdict(graph.n, rank, graph.m)


def _subset_rigid(graph: FlatGraph, vertices: tuple[int, ...]) -> bool:
    k = len(vertices)
    if k == 1:
        return True
    if k == 2:
        return graph.has_edge(*vertices)
    sub = graph.induced(vertices)
    return generic_rigidity(sub).rigid


def rigid_components(graph: FlatGraph) -> list[frozenset[int]]:
    """Maximal vertex sets whose induced subgraph is generically rigid.

    Exhaustive over vertex subsets (descending size), intended for small
    graphs.  Sanity-checks that no two components share three or more
    vertices.
    """
    if graph.n > 12:
        raise EnumerationSizeError("rigid components supported up to 12 vertices")
    comps: list[frozenset[int]] = []
    for size in range(graph.n, 0, -1):
        for subset in itertools.combinations(range(graph.n), size):
            s = frozenset(subset)
            if any(s <= c for c in comps):
                continue
            if _subset_rigid(graph, subset):
                comps.append(s)
    for a, b in itertools.combinations(comps, 2):
        if len(a & b) > 2:
            raise AssertionError(
                f"rigid components {sorted(a)} and {sorted(b)} overlap on 3+ vertices"
            )
    return sorted(comps, key=lambda c: (len(c), sorted(c)), reverse=True)


# ---------------------------------------------------------------------------
# Orbit enumeration


class GraphOrbit:
    """One isomorphism class of constraint graphs under the weak
    automorphism group."""

    __slots__ = ("representative", "size", "stabilizer", "label")

    def __init__(self, representative: ActiveConstraintGraph, size: int, stabilizer: WautGroup, label: str = ""):
        self.representative = representative
        self.size = size
        self.stabilizer = stabilizer
        self.label = label

    def __repr__(self) -> str:
        return (
            f"GraphOrbit({self.label or self.representative!r}, size={self.size}, "
            f"stab={self.stabilizer.order})"
        )


def cross_bunch_pairs(sizes: Sequence[int]) -> list[tuple[int, int]]:
    offsets = [0]
    for s in sizes:
        offsets.append(offsets[-1] + s)
    pairs = []
    for l, m in itertools.combinations(range(len(sizes)), 2):
        for i in range(sizes[l]):
            for j in range(sizes[m]):
                pairs.append((offsets[l] + i, offsets[m] + j))
    return sorted(pairs)


def _pair_tables(group: WautGroup, pairs: list[tuple[int, int]]) -> list[list[int]]:
    """For each group element, the induced permutation of pair indices."""
    index = {p: i for i, p in enumerate(pairs)}
    tables = []
    for psi in group.elements:
        f = psi.flat
        tables.append([index[norm_edge(f(u), f(v))] for u, v in pairs])
    return tables


def _remap_mask(mask: int, table: list[int]) -> int:
    out = 0
    m = mask
    while m:
        low = m & -m
        out |= 1 << table[low.bit_length() - 1]
        m ^= low
    return out


def canonical_edge_mask(mask: int, tables: list[list[int]]) -> int:
    return min(_remap_mask(mask, t) for t in tables)


def enumerate_acg_orbits(
    system: AssemblyConfiguration,
    edge_count: int,
    group: WautGroup | None = None,
    min_degree: int | None = None,
    require_rigid: bool = False,
    require_connected: bool = False,
    threads: int = 1,
) -> list[GraphOrbit]:
    """All orbits of bunch-respecting graphs with the given edge count.

    Each graph is canonicalized as the minimum edge bitmask over the
    weak automorphism group; filters apply to orbit representatives
    (they are class functions).  Deterministic output order by canonical
    mask.
    """
    sizes = [b.size for b in system.bunches]
    total = sum(sizes)
    if total > ENUMERATION_SPHERE_CAP:
        raise EnumerationSizeError(
            f"exhaustive enumeration capped at {ENUMERATION_SPHERE_CAP} spheres"
        )
    pairs = cross_bunch_pairs(sizes)
    import math

    if math.comb(len(pairs), edge_count) > ENUMERATION_GRAPH_CAP:
        raise EnumerationSizeError("too many candidate graphs for an exhaustive scan")
    group = group or waut(system)
    tables = _pair_tables(group, pairs)

    combos = [
        sum(1 << i for i in combo)
        for combo in itertools.combinations(range(len(pairs)), edge_count)
    ]

    def scan(chunk: list[int]) -> set[int]:
        return {canonical_edge_mask(m, tables) for m in chunk}

    if threads > 1 and len(combos) > 1000:
        size = (len(combos) + threads - 1) // threads
        chunks = [combos[i : i + size] for i in range(0, len(combos), size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            canon: set[int] = set()
            for part in pool.map(scan, chunks):
                canon |= part
    else:
        canon = scan(combos)

    orbits = []
    for mask in sorted(canon):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        rep = ActiveConstraintGraph(sizes, edges)
        if min_degree is not None and min(rep.degrees(), default=0) < min_degree:
            continue
        if require_connected and not rep.graph().is_connected():
            continue
        if require_rigid and not generic_rigidity(full_graph(rep)).rigid:
            continue
        images = {_remap_mask(mask, t) for t in tables}
        stab = group.subgroup(
            psi
            for psi, t in zip(group.elements, tables)
            if _remap_mask(mask, t) == mask
        )
        if len(images) * stab.order != group.order:
            raise AssertionError("orbit-stabilizer mismatch during enumeration")
        orbits.append(GraphOrbit(rep, len(images), stab))
    for i, orb in enumerate(orbits):
        orb.label = f"e{edge_count}g{i}"
    return orbits


# ---------------------------------------------------------------------------
# Heuristic realizability


def realizability(
    system: AssemblyConfiguration,
    acg: ActiveConstraintGraph,
    starts: int = 50,
    seed: int = 0,
) -> str:
    """'realizable' when a penalty search finds sphere positions whose
    contact graph is exactly ``acg``; otherwise 'undetermined'.

    Failure never proves emptiness, so 'empty' is not a possible answer.
    """
    import numpy as np
    from scipy.optimize import minimize

    sizes = [b.size for b in system.bunches]
    if list(acg.bunch_sizes) != sizes:
        raise ValueError("graph shape does not match the assembly system")
    k = len(sizes)
    locals_ = [np.array([[float(c) for c in p] for p in b.points]) for b in system.bunches]
    radii = [b.radii for b in system.bunches]
    annuli = [b.annuli for b in system.bunches]

    flat_info = []
    for l in range(k):
        for i in range(sizes[l]):
            flat_info.append((l, i, float(radii[l][i]), float(annuli[l][i])))

    pair_bounds = []
    for u, v in cross_bunch_pairs(sizes):
        _, _, ru, du = flat_info[u]
        _, _, rv, dv = flat_info[v]
        lo = (ru + rv) ** 2
        hi = (ru + du + rv + dv) ** 2
        pair_bounds.append((u, v, lo, hi, norm_edge(u, v) in acg.edges))

    def rot(vec):
        theta = np.linalg.norm(vec)
        if theta < 1e-12:
            return np.eye(3)
        ax = vec / theta
        K = np.array(
            [[0, -ax[2], ax[1]], [ax[2], 0, -ax[0]], [-ax[1], ax[0], 0]]
        )
        return np.eye(3) + np.sin(theta) * K + (1 - np.cos(theta)) * (K @ K)

    def positions(x):
        pts = [None] * sum(sizes)
        idx = 0
        base = 0
        for l in range(k):
            if l == 0:
                R, t = np.eye(3), np.zeros(3)
            else:
                t = x[idx : idx + 3]
                R = rot(x[idx + 3 : idx + 6])
                idx += 6
            world = locals_[l] @ R.T + t
            for i in range(sizes[l]):
                pts[base + i] = world[i]
            base += sizes[l]
        return np.array(pts)

    margin = 1e-4

    def penalty(x):
        pts = positions(x)
        total = 0.0
        for u, v, lo, hi, active in pair_bounds:
            d2 = float(np.sum((pts[u] - pts[v]) ** 2))
            if active:
                total += max(0.0, lo - d2) ** 2 + max(0.0, d2 - hi) ** 2
            else:
                total += max(0.0, hi * (1 + margin) - d2) ** 2
        return total

    def satisfied(x) -> bool:
        pts = positions(x)
        for u, v, lo, hi, active in pair_bounds:
            d2 = float(np.sum((pts[u] - pts[v]) ** 2))
            if active and not (lo - 1e-9 <= d2 <= hi + 1e-9):
                return False
            if not active and d2 <= hi * (1 + margin / 2):
                return False
        return True

    rng = np.random.default_rng(seed)
    dims = 6 * (k - 1)
    scale = 3.0 * max(float(r) for rs in radii for r in rs) * max(1, k)
    for _ in range(starts):
        x0 = rng.uniform(-scale, scale, size=dims)
        res = minimize(penalty, x0, method="L-BFGS-B")
        if satisfied(res.x):
            return "realizable"
    return "undetermined"
