"""Stratification atlases: Hasse diagrams of constraint-graph orbits,
assembly paths, coarse paths, merge forests, and path censuses.

Atlas nodes are orbit representatives keyed by labels like ``e12g0``
(edge count, then deterministic orbit index).  Path enumeration works on
concrete graphs whose orbits appear in the atlas, so parent/child means
"no atlas-represented graph strictly between".
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .acg import (
    ActiveConstraintGraph,
    GraphOrbit,
    _pair_tables,
    _remap_mask,
    canonical_edge_mask,
    cross_bunch_pairs,
    full_graph,
    generic_rigidity,
    rigid_components,
    EnumerationSizeError,
)
from .assembly import AssemblyConfiguration, WautGroup, waut
from .graphs import FlatGraph
from .permgroup import Permutation


class PathCapError(RuntimeError):
    """Raised when a path enumeration hits its length or count cap.

    The partial result is attached so callers can report truncation.
    """

    def __init__(self, message: str, partial):
        super().__init__(message)
        self.partial = partial


class AtlasNode:
    __slots__ = (
        "label",
        "mask",
        "representative",
        "edge_count",
        "independent_count",
        "dimension",
        "orbit_size",
        "stabilizer_order",
        "realizability",
    )

    def __init__(self, label, mask, representative, edge_count, independent_count,
                 dimension, orbit_size, stabilizer_order, realizability="unknown"):
        self.label = label
        self.mask = mask
        self.representative = representative
        self.edge_count = edge_count
        self.independent_count = independent_count
        self.dimension = dimension
        self.orbit_size = orbit_size
        self.stabilizer_order = stabilizer_order
        self.realizability = realizability

    def __repr__(self) -> str:
        return f"AtlasNode({self.label}, dim={self.dimension}, orbit={self.orbit_size})"


@lru_cache(maxsize=50_000)
def _rigid_components_cached(graph: FlatGraph) -> tuple[frozenset[int], ...]:
    return tuple(rigid_components(graph))


class StratificationAtlas:
    """Orbit representatives of active constraint regions, ordered by
    containment up to the weak automorphism group."""

    def __init__(
        self,
        system: AssemblyConfiguration,
        group: WautGroup,
        nodes: dict[str, AtlasNode],
        pairs: list[tuple[int, int]],
        tables: list[list[int]],
    ):
        self.system = system
        self.group = group
        self.nodes = nodes
        self.pairs = pairs
        self.tables = tables
        self._label_by_mask = {node.mask: label for label, node in nodes.items()}
        self._less: dict[tuple[str, str], bool] = {}
        self.parents: dict[str, list[str]] = {}
        self.children: dict[str, list[str]] = {}
        self._build_order()

    # -- order structure -----------------------------------------------

    def _contained_up_to_symmetry(self, a: AtlasNode, b: AtlasNode) -> bool:
        if a.edge_count >= b.edge_count:
            return False
        return any(
            _remap_mask(a.mask, t) & b.mask == _remap_mask(a.mask, t)
            for t in self.tables
        )

    def _build_order(self) -> None:
        labels = list(self.nodes)
        for la, lb in itertools.permutations(labels, 2):
            self._less[(la, lb)] = self._contained_up_to_symmetry(
                self.nodes[la], self.nodes[lb]
            )
        from .graphs import transitive_reduction

        covers = transitive_reduction(labels, self._less)
        self.parents = {l: sorted(covers[l]) for l in labels}
        self.children = {l: [] for l in labels}
        for child, pars in self.parents.items():
            for p in pars:
                self.children[p].append(child)
        for l in labels:
            self.children[l].sort()

    def less(self, a: str, b: str) -> bool:
        return self._less.get((a, b), False)

    # -- lookup ----------------------------------------------------------

    def mask_of_graph(self, acg: ActiveConstraintGraph) -> int:
        index = {p: i for i, p in enumerate(self.pairs)}
        mask = 0
        for e in acg.edges:
            mask |= 1 << index[e]
        return mask

    def graph_of_mask(self, mask: int) -> ActiveConstraintGraph:
        sizes = [b.size for b in self.system.bunches]
        edges = [self.pairs[i] for i in range(len(self.pairs)) if mask >> i & 1]
        return ActiveConstraintGraph(sizes, edges)

    def label_of(self, acg: ActiveConstraintGraph) -> str | None:
        canon = canonical_edge_mask(self.mask_of_graph(acg), self.tables)
        return self._label_by_mask.get(canon)

    def node_of(self, acg: ActiveConstraintGraph) -> AtlasNode | None:
        label = self.label_of(acg)
        return self.nodes[label] if label else None

    def __contains__(self, label: str) -> bool:
        return label in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    # -- export ----------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "nodes": [
                    {
                        "label": n.label,
                        "edges": n.edge_count,
                        "independent_edges": n.independent_count,
                        "dimension": n.dimension,
                        "orbit_size": n.orbit_size,
                        "stabilizer_order": n.stabilizer_order,
                        "realizability": n.realizability,
                        "graph": json.loads(n.representative.to_json()),
                    }
                    for n in self.nodes.values()
                ],
                "hasse": [
                    {"parent": p, "child": c}
                    for c, ps in sorted(self.parents.items())
                    for p in ps
                ],
            },
            indent=2,
        )

    def to_dot(self) -> str:
        """Layered Hasse diagram; grey fill marks nodes whose region is
        not shown realizable."""
        lines = [
            "digraph atlas {",
            "  rankdir=TB;",
            "  node [shape=circle, style=filled];",
        ]
        by_dim: dict[int, list[str]] = {}
        for label, node in self.nodes.items():
            by_dim.setdefault(node.dimension, []).append(label)
        for dim in sorted(by_dim, reverse=True):
            members = " ".join(f'"{l}";' for l in sorted(by_dim[dim]))
            lines.append(f"  {{ rank=same; {members} }}")
        for label, node in sorted(self.nodes.items()):
            fill = "grey" if node.realizability == "undetermined" else "white"
            if node.realizability == "realizable":
                fill = "lightblue"
            lines.append(
                f'  "{label}" [fillcolor={fill}, label="{label}\\ndim {node.dimension}"];'
            )
        for child, pars in sorted(self.parents.items()):
            for p in pars:
                lines.append(f'  "{p}" -> "{child}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _independent_active_count(system: AssemblyConfiguration, acg: ActiveConstraintGraph) -> int:
    """Number of independent active constraints given rigid bunches."""
    full = full_graph(acg)
    rank_full = generic_rigidity(full).rank
    bunch_only = ActiveConstraintGraph(acg.bunch_sizes, [])
    rank_bunches = generic_rigidity(full_graph(bunch_only)).rank
    return rank_full - rank_bunches


def build_atlas(
    system: AssemblyConfiguration,
    edges: tuple[int, int] | None = None,
    group: WautGroup | None = None,
    independent_only: bool = True,
    min_degree: int | None = None,
    require_connected: bool = False,
    collapse_orbits: bool = True,
    realizability: str = "skip",
    realizability_starts: int = 50,
) -> StratificationAtlas:
    """Atlas of constraint-graph orbits for every edge count in range.

    ``independent_only`` keeps only graphs whose active constraints are
    generically independent, which makes dimension strictly decrease
    along every parent-child edge.  With ``collapse_orbits=False`` every
    concrete graph becomes its own node (used by ``fundamental_domain``).
    ``realizability='heuristic'`` runs the penalty search per node.
    """
    sizes = [b.size for b in system.bunches]
    total = sum(sizes)
    if total > 9:
        raise EnumerationSizeError("atlas construction capped at 9 spheres")
    group = group or waut(system)
    pairs = cross_bunch_pairs(sizes)
    if edges is None:
        edges = (0, len(pairs))
    lo, hi = edges
    hi = min(hi, len(pairs))
    tables = _pair_tables(group, pairs)

    k = len(sizes)
    nodes: dict[str, AtlasNode] = {}
    for edge_count in range(lo, hi + 1):
        layer: list[tuple[int, int]] = []  # (canonical mask, concrete mask)
        seen: set[int] = set()
        for combo in itertools.combinations(range(len(pairs)), edge_count):
            mask = sum(1 << i for i in combo)
            canon = canonical_edge_mask(mask, tables)
            if collapse_orbits:
                if canon in seen:
                    continue
                seen.add(canon)
                layer.append((canon, canon))
            else:
                layer.append((canon, mask))
        layer.sort(key=lambda cm: (cm[0], cm[1]))
        idx = 0
        for canon, mask in layer:
            sizes_tuple = tuple(sizes)
            rep_edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
            rep = ActiveConstraintGraph(sizes_tuple, rep_edges)
            indep = _independent_active_count(system, rep)
            if independent_only and indep != edge_count:
                continue
            if min_degree is not None and min(rep.degrees(), default=0) < min_degree:
                continue
            if require_connected and not rep.graph().is_connected():
                continue
            images = {_remap_mask(mask, t) for t in tables}
            orbit_size = len(images)
            stab_order = group.order // orbit_size
            tag = "g" if collapse_orbits else "x"
            label = f"e{edge_count}{tag}{idx}"
            idx += 1
            dimension = 6 * (k - 1) - indep
            node = AtlasNode(
                label, mask, rep, edge_count, indep, dimension,
                orbit_size, stab_order,
            )
            if realizability == "heuristic":
                from .acg import realizability as realize

                node.realizability = realize(system, rep, starts=realizability_starts)
            nodes[label] = node
    return StratificationAtlas(system, group, nodes, pairs, tables)


def neighbors(atlas: StratificationAtlas, label: str) -> tuple[list[str], list[str]]:
    """(parents, children) of one node in the Hasse diagram."""
    if label not in atlas.nodes:
        raise KeyError(f"unknown atlas node {label!r}")
    return (atlas.parents[label], atlas.children[label])


# ---------------------------------------------------------------------------
# Concrete-graph interval machinery


def _interval_masks(atlas: StratificationAtlas, lo_mask: int, hi_mask: int) -> list[int]:
    """All concrete masks between lo and hi whose orbit is in the atlas."""
    free = hi_mask & ~lo_mask
    bits = [i for i in range(len(atlas.pairs)) if free >> i & 1]
    out = []
    for r in range(len(bits) + 1):
        for combo in itertools.combinations(bits, r):
            mask = lo_mask | sum(1 << i for i in combo)
            canon = canonical_edge_mask(mask, atlas.tables)
            if canon in atlas._label_by_mask:
                out.append(mask)
    return sorted(out)


def _resolve_endpoints(atlas, g1, g2) -> tuple[int, int]:
    """Accept node labels or concrete graphs; return concrete masks.

    When both endpoints are labels, the upper representative is used
    as-is and a symmetry image of the lower one embeds into it.
    """
    def as_mask(g) -> int | None:
        if isinstance(g, str):
            if g not in atlas.nodes:
                raise KeyError(f"unknown atlas node {g!r}")
            return atlas.nodes[g].mask
        return atlas.mask_of_graph(g)

    m1, m2 = as_mask(g1), as_mask(g2)
    if m1 & m2 == m1:
        return m1, m2
    for t in atlas.tables:
        image = _remap_mask(m1, t)
        if image & m2 == image:
            return image, m2
    raise ValueError("endpoints are not nested, even up to symmetry")


def assembly_paths(
    atlas: StratificationAtlas,
    g1,
    g2,
    max_length: int = 14,
    max_paths: int = 200_000,
) -> list[list[ActiveConstraintGraph]]:
    """All parent-to-child chains from g1 to g2 over concrete graphs.

    Endpoints may be atlas labels or concrete graphs; g1 must embed in
    g2 up to symmetry.  Raises PathCapError (with partial results) when
    a cap is hit.
    """
    lo, hi = _resolve_endpoints(atlas, g1, g2)
    if lo == hi:
        return [[atlas.graph_of_mask(lo)]]
    interval = set(_interval_masks(atlas, lo, hi))

    def covers_of(mask: int) -> list[int]:
        supers = [
            m for m in interval if m != mask and m & mask == mask
        ]
        out = []
        for m in supers:
            if not any(s != m and s & m == s and s & mask == mask and s != mask for s in supers):
                pass
            out.append(m)
        return [
            m
            for m in supers
            if not any(s != m and s != mask and s & m == s and mask & s == mask for s in supers)
        ]

    paths: list[list[int]] = []

    def dfs(chain: list[int]) -> None:
        cur = chain[-1]
        if cur == hi:
            paths.append(chain[:])
            if len(paths) > max_paths:
                raise PathCapError(
                    f"more than {max_paths} assembly paths",
                    [[atlas.graph_of_mask(m) for m in p] for p in paths],
                )
            return
        if len(chain) > max_length:
            raise PathCapError(
                f"assembly path longer than {max_length} steps",
                [[atlas.graph_of_mask(m) for m in p] for p in paths],
            )
        for nxt in covers_of(cur):
            chain.append(nxt)
            dfs(chain)
            chain.pop()

    dfs([lo])
    return [[atlas.graph_of_mask(m) for m in p] for p in paths]


def is_assembly_path(atlas: StratificationAtlas, chain: Sequence[ActiveConstraintGraph]) -> bool:
    """Each step must be a cover in the stratification restricted to the
    atlas's node set."""
    if len(chain) < 2:
        return True
    masks = [atlas.mask_of_graph(g) for g in chain]
    for a, b in zip(masks, masks[1:]):
        if a & b != a or a == b:
            return False
        between = _interval_masks(atlas, a, b)
        if any(m not in (a, b) for m in between):
            return False
    return all(atlas.label_of(g) is not None for g in chain)


def coarse_step(
    system: AssemblyConfiguration,
    g_lo: ActiveConstraintGraph,
    g_hi: ActiveConstraintGraph,
) -> bool:
    """Does the step create exactly one new rigid component merging at
    least two previous ones, with no rigid proper sub-merge?"""
    if not (g_lo.edges < g_hi.edges):
        return False
    full_lo = full_graph(g_lo)
    full_hi = full_graph(g_hi)
    comps_lo = set(_rigid_components_cached(full_lo))
    comps_hi = set(_rigid_components_cached(full_hi))
    new = comps_hi - comps_lo
    if len(new) != 1:
        return False
    s = next(iter(new))
    merged = [c for c in comps_lo if c <= s]
    if len(merged) < 2:
        return False
    for r in range(2, len(merged)):
        for q in itertools.combinations(merged, r):
            union = frozenset().union(*q)
            sub = full_hi.induced(union)
            if len(union) >= 2 and generic_rigidity(sub).rigid and (
                len(union) > 2 or sub.m >= 1
            ):
                return False
    return True


def coarse_assembly_paths(
    atlas: StratificationAtlas,
    g1,
    g2,
    max_length: int = 14,
    max_paths: int = 200_000,
) -> list[list[ActiveConstraintGraph]]:
    """All coarse chains from g1 to g2.

    Steps are proper containments (they may skip Hasse levels); each
    must merge exactly one new rigid component.
    """
    lo, hi = _resolve_endpoints(atlas, g1, g2)
    if lo == hi:
        return [[atlas.graph_of_mask(lo)]]
    interval = sorted(set(_interval_masks(atlas, lo, hi)))
    graphs = {m: atlas.graph_of_mask(m) for m in interval}
    system = atlas.system

    step_ok: dict[tuple[int, int], bool] = {}

    def ok(a: int, b: int) -> bool:
        key = (a, b)
        if key not in step_ok:
            step_ok[key] = coarse_step(system, graphs[a], graphs[b])
        return step_ok[key]

    paths: list[list[int]] = []

    def dfs(chain: list[int]) -> None:
        cur = chain[-1]
        if cur == hi:
            paths.append(chain[:])
            if len(paths) > max_paths:
                raise PathCapError(
                    f"more than {max_paths} coarse paths",
                    [[graphs[m] for m in p] for p in paths],
                )
            return
        if len(chain) > max_length:
            raise PathCapError(
                f"coarse path longer than {max_length} steps",
                [[graphs[m] for m in p] for p in paths],
            )
        for nxt in interval:
            if nxt != cur and nxt & cur == cur and ok(cur, nxt):
                chain.append(nxt)
                dfs(chain)
                chain.pop()

    dfs([lo])
    return [[graphs[m] for m in p] for p in paths]


def is_coarse_assembly_path(
    system: AssemblyConfiguration, chain: Sequence[ActiveConstraintGraph]
) -> bool:
    if len(chain) < 2:
        return True
    return all(coarse_step(system, a, b) for a, b in zip(chain, chain[1:]))


class AssemblyForest:
    """Merge forest of rigid components along a coarse path."""

    def __init__(
        self,
        nodes: list[frozenset[int]],
        children: dict[frozenset[int], list[frozenset[int]]],
        roots: list[frozenset[int]],
        leaves: list[frozenset[int]],
    ):
        self.nodes = nodes
        self.children = children
        self.roots = roots
        self.leaves = leaves

    @property
    def is_tree(self) -> bool:
        return len(self.roots) == 1

    def validate(self) -> None:
        for a, b in itertools.combinations(self.nodes, 2):
            nested = a <= b or b <= a
            if not nested and a & b:
                raise AssertionError(
                    f"incomparable forest nodes overlap: {sorted(a)}, {sorted(b)}"
                )

    def to_json(self) -> str:
        def render(s: frozenset[int]) -> list[int]:
            return sorted(s)

        return json.dumps(
            {
                "roots": [render(r) for r in self.roots],
                "leaves": [render(l) for l in self.leaves],
                "children": [
                    {"node": render(n), "children": [render(c) for c in cs]}
                    for n, cs in self.children.items()
                    if cs
                ],
            },
            indent=2,
        )

    def __repr__(self) -> str:
        kind = "tree" if self.is_tree else "forest"
        return f"AssemblyForest({kind}, {len(self.nodes)} nodes)"


def assembly_forest(
    system: AssemblyConfiguration, chain: Sequence[ActiveConstraintGraph]
) -> AssemblyForest:
    """The unique merge forest of a coarse path.

    Leaves are the rigid components of the first full graph; each step
    contributes its new component with the merged components as
    children; roots are the rigid components of the last full graph.
    """
    if not is_coarse_assembly_path(system, chain):
        raise ValueError("input is not a coarse assembly path")
    first = full_graph(chain[0])
    leaves = list(_rigid_components_cached(first))
    nodes: list[frozenset[int]] = list(leaves)
    children: dict[frozenset[int], list[frozenset[int]]] = {l: [] for l in leaves}
    current = set(leaves)
    for g_lo, g_hi in zip(chain, chain[1:]):
        comps_lo = set(_rigid_components_cached(full_graph(g_lo)))
        comps_hi = set(_rigid_components_cached(full_graph(g_hi)))
        (new,) = comps_hi - comps_lo
        merged = sorted((c for c in comps_lo if c <= new), key=sorted)
        nodes.append(new)
        children[new] = merged
        current -= set(merged)
        current.add(new)
    roots = sorted(_rigid_components_cached(full_graph(chain[-1])), key=sorted)
    forest = AssemblyForest(nodes, children, roots, leaves)
    forest.validate()
    return forest


def zigzag_paths(
    atlas: StratificationAtlas,
    g1,
    g2,
    max_length: int = 6,
    max_paths: int = 100_000,
) -> list[list[ActiveConstraintGraph]]:
    """Alternating ascending/descending sequences between two
    incomparable graphs; either phase may start.

    Only graphs whose orbit is in the atlas participate.
    """
    m1 = atlas.mask_of_graph(g1) if not isinstance(g1, str) else atlas.nodes[g1].mask
    m2 = atlas.mask_of_graph(g2) if not isinstance(g2, str) else atlas.nodes[g2].mask
    if m1 & m2 in (m1, m2):
        raise ValueError("zigzag endpoints must be incomparable")
    universe = []
    for r in range(len(atlas.pairs) + 1):
        for combo in itertools.combinations(range(len(atlas.pairs)), r):
            mask = sum(1 << i for i in combo)
            if canonical_edge_mask(mask, atlas.tables) in atlas._label_by_mask:
                universe.append(mask)

    paths: list[list[int]] = []

    def dfs(chain: list[int], going_up: bool) -> None:
        cur = chain[-1]
        if cur == m2 and len(chain) > 1:
            paths.append(chain[:])
            if len(paths) > max_paths:
                raise PathCapError("too many zigzag paths", paths)
            return
        if len(chain) > max_length:
            return
        for nxt in universe:
            if nxt == cur or nxt in chain:
                continue
            up = cur & nxt == cur
            down = nxt & cur == nxt
            if (going_up and up) or (not going_up and down):
                chain.append(nxt)
                dfs(chain, not going_up)
                chain.pop()

    dfs([m1], True)
    dfs([m1], False)
    uniq = {tuple(p) for p in paths}
    return [
        [atlas.graph_of_mask(m) for m in p] for p in sorted(uniq, key=lambda p: (len(p), p))
    ]


def fundamental_domain(unreduced: StratificationAtlas) -> StratificationAtlas:
    """Collapse an orbit-per-node atlas to one representative per orbit.

    Checks that the orbits of the chosen representatives reconstruct the
    original node set exactly.
    """
    by_canon: dict[int, list[AtlasNode]] = {}
    for node in unreduced.nodes.values():
        canon = canonical_edge_mask(node.mask, unreduced.tables)
        by_canon.setdefault(canon, []).append(node)

    reduced_nodes: dict[str, AtlasNode] = {}
    counters: dict[int, int] = {}
    total = 0
    for canon in sorted(by_canon):
        members = by_canon[canon]
        rep = min(members, key=lambda n: n.mask)
        e = rep.edge_count
        idx = counters.get(e, 0)
        counters[e] = idx + 1
        label = f"e{e}g{idx}"
        orbit_masks = {
            _remap_mask(rep.mask, t) for t in unreduced.tables
        }
        if orbit_masks != {n.mask for n in members}:
            raise AssertionError("orbit reconstruction failed for a node class")
        total += len(orbit_masks)
        reduced_nodes[label] = AtlasNode(
            label, canon, unreduced.graph_of_mask(canon), e,
            rep.independent_count, rep.dimension, len(orbit_masks),
            unreduced.group.order // len(orbit_masks), rep.realizability,
        )
    if total != len(unreduced.nodes):
        raise AssertionError("orbit sizes do not add up to the full atlas")
    return StratificationAtlas(
        unreduced.system, unreduced.group, reduced_nodes, unreduced.pairs, unreduced.tables
    )


def path_orbit_census(
    atlas: StratificationAtlas,
    paths: Sequence[Sequence[ActiveConstraintGraph]],
    group: WautGroup,
) -> dict:
    """Orbit partition of concrete paths under simultaneous relabeling.

    Returns representatives, orbit sizes and a size histogram; orbit
    sizes always divide the acting group's order.
    """
    mask_paths = [tuple(atlas.mask_of_graph(g) for g in p) for p in paths]
    pair_index = {p: i for i, p in enumerate(atlas.pairs)}
    tables = _pair_tables(group, atlas.pairs)

    remaining = set(mask_paths)
    orbits = []
    for p in mask_paths:
        if p not in remaining:
            continue
        images = {tuple(_remap_mask(m, t) for m in p) for t in tables}
        orbit_members = images & set(mask_paths)
        remaining -= images
        orbits.append((min(orbit_members), len(orbit_members)))

    histogram: dict[int, int] = {}
    for _, size in orbits:
        histogram[size] = histogram.get(size, 0) + 1
        if group.order % size:
            raise AssertionError("orbit size does not divide the group order")
    return {
        "orbit_count": len(orbits),
        "orbit_sizes": sorted(s for _, s in orbits),
        "histogram": histogram,
        "representatives": [
            [atlas.graph_of_mask(m) for m in rep] for rep, _ in sorted(orbits)
        ],
    }
