"""Leaf-labeled assembly trees, group actions on them, and censuses.

A tree on leaf set {0..n-1} is stored as its family of vertex label
sets, each set a bitmask: the root mask, every singleton, and one mask
per internal vertex.  The family determines the tree (parent = smallest
strict superset), set equality is tree equality, and a group element
acts by remapping every mask through a precomputed bit table.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Iterator

from . import egf
from .permgroup import (
    PermGroup,
    Permutation,
    SubgroupLattice,
    subgroups as enumerate_subgroups,
)

MAX_LEAVES = 9


class TreeSizeError(ValueError):
    """Raised when an exhaustive tree scan would be too large."""


class SimplifiedAssemblyTree:
    """Rooted tree, internal degrees >= 2, leaves labeled 0..n-1."""

    __slots__ = ("n", "masks")

    def __init__(self, n: int, masks: Iterable[int]):
        self.n = n
        self.masks = tuple(sorted(masks))

    @classmethod
    def from_nested(cls, nested, n: int | None = None) -> "SimplifiedAssemblyTree":
        """Build from nested lists of leaf labels, e.g. ``[[0, 1], 2]``."""
        masks: list[int] = []

        def walk(node) -> int:
            if isinstance(node, int):
                masks.append(1 << node)
                return 1 << node
            children = [walk(c) for c in node]
            if len(children) < 2:
                raise ValueError("internal vertices need at least two children")
            m = 0
            for c in children:
                if m & c:
                    raise ValueError("leaf label used twice")
                m |= c
            masks.append(m)
            return m

        root = walk(nested)
        if n is None:
            n = root.bit_length()
        if root != (1 << n) - 1:
            raise ValueError("leaves must be labeled bijectively by 0..n-1")
        tree = cls(n, set(masks))
        tree.validate()
        return tree

    def root_mask(self) -> int:
        return (1 << self.n) - 1

    def children_of(self, mask: int) -> list[int]:
        """Maximal family members strictly inside ``mask``."""
        inside = [m for m in self.masks if m != mask and (m & mask) == m]
        return [m for m in inside if not any(m != o and (m & o) == m for o in inside)]

    def to_nested(self):
        def build(mask: int):
            if mask & (mask - 1) == 0:
                return mask.bit_length() - 1
            return [build(c) for c in sorted(self.children_of(mask))]

        return build(self.root_mask())

    def validate(self) -> None:
        masks = set(self.masks)
        full = self.root_mask()
        if full not in masks:
            raise ValueError("missing root label set")
        for i in range(self.n):
            if (1 << i) not in masks:
                raise ValueError(f"missing leaf {i}")
        for a in masks:
            for b in masks:
                if a & b and (a | b) not in (a, b):
                    raise ValueError("label sets must be nested or disjoint")
        for m in masks:
            if m & (m - 1) == 0:
                continue
            kids = self.children_of(m)
            if len(kids) < 2:
                raise ValueError("internal vertex with fewer than two children")
            cover = 0
            for k in kids:
                cover |= k
            if cover != m:
                raise ValueError("children do not partition their parent")

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SimplifiedAssemblyTree)
            and self.n == other.n
            and self.masks == other.masks
        )

    def __hash__(self) -> int:
        return hash((self.n, self.masks))

    def __lt__(self, other: "SimplifiedAssemblyTree") -> bool:
        return self.masks < other.masks

    def __repr__(self) -> str:
        return f"SimplifiedAssemblyTree({self.to_nested()!r})"


def _mask_table(g: Permutation) -> list[int]:
    """Image of every bitmask on g's domain under relabeling by g."""
    n = g.degree
    table = [0] * (1 << n)
    singles = [1 << g(i) for i in range(n)]
    for m in range(1, 1 << n):
        low = m & -m
        table[m] = table[m ^ low] | singles[low.bit_length() - 1]
    return table


_TABLE_CACHE: dict[tuple[int, ...], list[int]] = {}


def _cached_table(g: Permutation) -> list[int]:
    t = _TABLE_CACHE.get(g.mapping)
    if t is None:
        if g.degree > MAX_LEAVES:
            raise TreeSizeError(f"tree actions supported up to {MAX_LEAVES} leaves")
        t = _mask_table(g)
        if len(_TABLE_CACHE) > 4096:
            _TABLE_CACHE.clear()
        _TABLE_CACHE[g.mapping] = t
    return t


def act_on_tree(g: Permutation, tree: SimplifiedAssemblyTree) -> SimplifiedAssemblyTree:
    """Relabel every vertex label set of the tree through ``g``."""
    if g.degree != tree.n:
        raise ValueError("permutation degree differs from the leaf count")
    table = _cached_table(g)
    return SimplifiedAssemblyTree(tree.n, (table[m] for m in tree.masks))


def _act_masks(table: list[int], masks: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sorted(table[m] for m in masks))


def _partitions(mask: int) -> Iterator[tuple[int, ...]]:
    """All set partitions of the bitmask, each as a tuple of block masks."""
    if mask == 0:
        yield ()
        return
    low = mask & -mask
    rest = mask ^ low
    # Enumerate the block containing the lowest element as low | sub,
    # where sub runs over all submasks of the rest.
    sub = rest
    while True:
        first = low | sub
        for tail in _partitions(mask ^ first):
            yield (first,) + tail
        if sub == 0:
            break
        sub = (sub - 1) & rest


def _tree_families(mask: int) -> Iterator[tuple[int, ...]]:
    """All tree families on the given leaf mask, as sorted mask tuples."""
    if mask & (mask - 1) == 0:
        yield (mask,)
        return
    for blocks in _partitions(mask):
        if len(blocks) < 2:
            continue
        def combine(i: int, acc: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
            if i == len(blocks):
                yield tuple(sorted(acc + (mask,)))
                return
            for fam in _tree_families(blocks[i]):
                yield from combine(i + 1, acc + fam)
        yield from combine(0, ())


def iter_trees(n: int) -> Iterator[SimplifiedAssemblyTree]:
    """Stream every tree on leaves 0..n-1 exactly once, canonical order
    not guaranteed to be sorted but deterministic."""
    if n < 1:
        raise ValueError("need at least one leaf")
    if n > MAX_LEAVES:
        raise TreeSizeError(f"exhaustive enumeration capped at {MAX_LEAVES} leaves")
    for fam in _tree_families((1 << n) - 1):
        yield SimplifiedAssemblyTree(n, fam)


def enumerate_trees(n: int) -> list[SimplifiedAssemblyTree]:
    """All trees on leaves 0..n-1, deterministically sorted."""
    return sorted(iter_trees(n))


def count_trees(n: int) -> int:
    """Number of trees on n labeled leaves by direct enumeration."""
    return sum(1 for _ in iter_trees(n))


def fixed_tree_count_bruteforce(H: PermGroup, n: int | None = None) -> int:
    """Trees on H's domain fixed by every element of H, by full scan.

    This is the independent oracle for the generating-function counts.
    """
    if n is None:
        n = H.domain_size
    if n != H.domain_size:
        raise ValueError("leaf count must equal the group's domain size")
    gens = [g for g in H.generators if not g.is_identity()]
    if not gens:
        return count_trees(n)
    tables = [_cached_table(g) for g in gens]
    count = 0
    for fam in _tree_families((1 << n) - 1):
        if all(_act_masks(t, fam) == fam for t in tables):
            count += 1
    return count


def t_bar(H, lattice: SubgroupLattice, t_values: dict[int, int]) -> int:
    """Count of trees whose exact stabilizer is H, by Möbius inversion.

    ``t_values`` maps lattice indices to fixed-tree counts and must cover
    every subgroup containing H.
    """
    i = H if isinstance(H, int) else lattice.index_of(H)
    total = 0
    for j in lattice.superset_indices(i):
        total += lattice.mobius(i, j) * t_values[j]
    if total < 0:
        raise ValueError(f"negative exact-stabilizer count {total}: inconsistent inputs")
    return total


class PathwayCensus:
    """Orbit-size histogram N(m) for tree orbits under a free action."""

    def __init__(
        self,
        group_order: int,
        leaf_count: int,
        counts: dict[int, int],
        t_by_subgroup: dict[int, int] | None = None,
        t_bar_by_subgroup: dict[int, int] | None = None,
    ):
        self.group_order = group_order
        self.leaf_count = leaf_count
        self.counts = dict(counts)
        self.t_by_subgroup = dict(t_by_subgroup or {})
        self.t_bar_by_subgroup = dict(t_bar_by_subgroup or {})

    def __getitem__(self, m: int) -> int:
        return self.counts.get(m, 0)

    def total_pathways(self) -> int:
        return sum(self.counts.values())

    def total_trees(self) -> int:
        return sum(m * c for m, c in self.counts.items())

    def nonzero_rows(self) -> list[tuple[int, int]]:
        return [(m, c) for m, c in sorted(self.counts.items()) if c]

    def to_json(self) -> str:
        return json.dumps(
            {
                "group_order": self.group_order,
                "leaf_count": self.leaf_count,
                "census": [
                    {"size": m, "pathways": str(c)} for m, c in self.nonzero_rows()
                ],
            },
            indent=2,
        )


def sci3(value: int) -> str:
    """Three-significant-digit scientific rendering of a big integer.

    The mantissa keeps the three leading digits verbatim (no rounding),
    matching the display convention of published census tables.
    """
    if value == 0:
        return "0.00e+00"
    s = str(abs(value))
    exp = len(s) - 1
    digits = (s + "00")[:3]
    sign = "-" if value < 0 else ""
    return f"{sign}{digits[0]}.{digits[1:]}e+{exp:02d}"


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def pathway_census(
    group: PermGroup,
    n_orbits: int = 1,
    lattice: SubgroupLattice | None = None,
) -> PathwayCensus:
    """Number of tree orbits of each size under a free action.

    Pipeline: subgroup lattice -> per-class generating functions (read at
    index |X|/|H|) -> exact-stabilizer counts by Möbius inversion ->
    ``N(m) = (1/m) * sum over subgroups of index m``.  Every division
    must be exact.
    """
    group.require_free()
    if lattice is None:
        lattice = enumerate_subgroups(group)
    total = n_orbits * group.order
    seqs = egf.solve_group_egf(group, lattice, n_orbits=n_orbits)

    t_by_subgroup: dict[int, int] = {}
    for i, sub in enumerate(lattice.subgroups):
        seq = seqs[lattice.class_of[i]]
        t_by_subgroup[i] = seq[total // sub.order - 1]

    t_bar_by_subgroup = {
        i: t_bar(i, lattice, t_by_subgroup) for i in range(len(lattice.subgroups))
    }

    counts: dict[int, int] = {m: 0 for m in _divisors(group.order)}
    for m in counts:
        acc = sum(
            t_bar_by_subgroup[i]
            for i, sub in enumerate(lattice.subgroups)
            if group.order // sub.order == m
        )
        q, r = divmod(acc, m)
        if r:
            raise ArithmeticError(f"orbit count for size {m} is not integral")
        counts[m] = q

    census = PathwayCensus(group.order, total, counts, t_by_subgroup, t_bar_by_subgroup)
    if census.total_trees() != egf.solve_base_egf(total)[-1]:
        raise ArithmeticError("census does not partition the full tree count")
    return census


def pathways_bruteforce(group: PermGroup) -> list[list[SimplifiedAssemblyTree]]:
    """Explicit tree orbits under the group's own domain action."""
    n = group.domain_size
    if n > 8:
        raise TreeSizeError("explicit orbit listing capped at 8 leaves")
    tables = [_cached_table(g) for g in group.elements]
    orbits = []
    seen: set[tuple[int, ...]] = set()
    for fam in _tree_families((1 << n) - 1):
        if fam in seen:
            continue
        images = {_act_masks(t, fam) for t in tables}
        seen.update(images)
        orbits.append(sorted(SimplifiedAssemblyTree(n, f) for f in images))
    return orbits


def pathway_histogram_bruteforce(group: PermGroup) -> dict[int, int]:
    """Orbit-size histogram by streaming scan, no tree storage.

    Each orbit is counted at its lexicographically smallest member.
    """
    n = group.domain_size
    if n > 8:
        raise TreeSizeError("exhaustive orbit histogram capped at 8 leaves")
    tables = [_cached_table(g) for g in group.elements]
    hist: dict[int, int] = {}
    for fam in _tree_families((1 << n) - 1):
        images = {_act_masks(t, fam) for t in tables}
        if min(images) == fam:
            hist[len(images)] = hist.get(len(images), 0) + 1
    return hist


def trees_to_json(trees: Iterable[SimplifiedAssemblyTree]) -> str:
    return json.dumps([t.to_nested() for t in trees])


def tree_to_dot(tree: SimplifiedAssemblyTree) -> str:
    """Graphviz rendering with internal vertices labeled by leaf sets."""
    lines = ["digraph assembly_tree {", "  node [shape=box];"]
    def label(mask: int) -> str:
        return "{" + ",".join(str(i + 1) for i in range(tree.n) if mask >> i & 1) + "}"
    for m in tree.masks:
        shape = "circle" if m & (m - 1) == 0 else "box"
        lines.append(f'  m{m} [label="{label(m)}", shape={shape}];')
    for m in tree.masks:
        if m & (m - 1) == 0:
            continue
        for c in tree.children_of(m):
            lines.append(f"  m{m} -> m{c};")
    lines.append("}")
    return "\n".join(lines) + "\n"
