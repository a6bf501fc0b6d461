"""Exact finite permutation groups.

Groups are stored as explicit element lists (all targets here have order
at most a few hundred), which keeps orbit, stabilizer, Burnside and
subgroup-lattice computations simple and exact.  Cycle notation is
1-based on input and output; internally everything is 0-based.
"""

from __future__ import annotations

import itertools
import json
import re
from typing import Callable, Hashable, Iterable, Iterator, Sequence


class GroupTooLargeError(RuntimeError):
    """Raised when a closure or lattice computation exceeds its cap."""


class NonFreeActionError(ValueError):
    """Raised when a free action is required but some element has a fixed point."""

    def __init__(self, element: "Permutation", point: int):
        self.element = element
        self.point = point
        super().__init__(
            f"action is not free: {element} fixes point {point + 1}"
        )


class Permutation:
    """A permutation of {0, ..., n-1}, stored as its image tuple."""

    __slots__ = ("mapping",)

    def __init__(self, mapping: Sequence[int]):
        m = tuple(mapping)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"not a bijection on 0..{len(m) - 1}: {m!r}")
        self.mapping = m

    @property
    def degree(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def from_cycles(cls, text: str, degree: int | None = None) -> "Permutation":
        """Parse 1-based cycle notation, e.g. ``(1 2)(3 4)``.

        ``()``, ``id`` and the empty string denote the identity (degree
        must then be given).  Separators inside a cycle may be spaces or
        commas.
        """
        text = text.strip()
        cycles: list[list[int]] = []
        if text not in ("", "()", "id"):
            if not re.fullmatch(r"(\(\s*\d+(?:[\s,]+\d+)*\s*\))+", text):
                raise ValueError(f"cannot parse cycle notation: {text!r}")
            for body in re.findall(r"\(([^()]*)\)", text):
                labels = [int(tok) for tok in re.split(r"[\s,]+", body.strip()) if tok]
                if any(l < 1 for l in labels):
                    raise ValueError("cycle labels are 1-based and positive")
                cycles.append([l - 1 for l in labels])
        top = max((max(c) for c in cycles if c), default=-1) + 1
        n = degree if degree is not None else top
        if n < top:
            raise ValueError(f"degree {n} too small for labels up to {top}")
        images = list(range(n))
        for cyc in cycles:
            if len(set(cyc)) != len(cyc):
                raise ValueError(f"repeated label in cycle {cyc}")
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                images[a] = b
        return cls(images)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition: ``(p * q)(i) == p(q(i))`` (q acts first)."""
        if len(self.mapping) != len(other.mapping):
            raise ValueError("degree mismatch in composition")
        m = self.mapping
        return Permutation(tuple(m[j] for j in other.mapping))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(inv)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))

    def fixed_points(self) -> list[int]:
        return [i for i, j in enumerate(self.mapping) if i == j]

    def order(self) -> int:
        k, p = 1, self
        while not p.is_identity():
            p = p * self
            k += 1
        return k

    def cycles(self) -> list[tuple[int, ...]]:
        """Nontrivial cycles, 0-based, each starting at its minimum."""
        seen = [False] * len(self.mapping)
        out = []
        for start in range(len(self.mapping)):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            j = self.mapping[start]
            while j != start:
                cyc.append(j)
                seen[j] = True
                j = self.mapping[j]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def cycle_string(self) -> str:
        """1-based cycle notation, identity rendered as ``()``."""
        cycs = self.cycles()
        if not cycs:
            return "()"
        return "".join("(" + " ".join(str(i + 1) for i in c) + ")" for c in cycs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Permutation) and self.mapping == other.mapping

    def __hash__(self) -> int:
        return hash(self.mapping)

    def __lt__(self, other: "Permutation") -> bool:
        return self.mapping < other.mapping

    def __repr__(self) -> str:
        return f"Permutation[{self.cycle_string()}]"


class PermGroup:
    """A finite permutation group given by its full element list."""

    __slots__ = ("domain_size", "elements", "generators", "_element_set")

    def __init__(
        self,
        domain_size: int,
        elements: Iterable[Permutation],
        generators: Iterable[Permutation] = (),
    ):
        elems = tuple(sorted(set(elements)))
        if not elems:
            elems = (Permutation.identity(domain_size),)
        for g in elems:
            if g.degree != domain_size:
                raise ValueError("element degree differs from domain size")
        if Permutation.identity(domain_size) not in elems:
            raise ValueError("group must contain the identity")
        self.domain_size = domain_size
        self.elements = elems
        self.generators = tuple(generators) or elems
        self._element_set = frozenset(elems)

    @property
    def order(self) -> int:
        return len(self.elements)

    def identity(self) -> Permutation:
        return Permutation.identity(self.domain_size)

    def __contains__(self, g: Permutation) -> bool:
        return g in self._element_set

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, PermGroup)
            and self.domain_size == other.domain_size
            and self._element_set == other._element_set
        )

    def __hash__(self) -> int:
        return hash((self.domain_size, self._element_set))

    def __repr__(self) -> str:
        return f"PermGroup(order={self.order}, domain={self.domain_size})"

    def element_set(self) -> frozenset[Permutation]:
        return self._element_set

    def is_subgroup_of(self, other: "PermGroup") -> bool:
        return self._element_set <= other._element_set

    def subgroup(self, elements: Iterable[Permutation]) -> "PermGroup":
        elems = tuple(sorted(set(elements)))
        return PermGroup(self.domain_size, elems)

    def conjugate_by(self, g: Permutation) -> "PermGroup":
        ginv = g.inverse()
        return PermGroup(self.domain_size, (g * h * ginv for h in self.elements))

    def is_free(self) -> bool:
        try:
            self.require_free()
        except NonFreeActionError:
            return False
        return True

    def require_free(self) -> None:
        for g in self.elements:
            if g.is_identity():
                continue
            fixed = g.fixed_points()
            if fixed:
                raise NonFreeActionError(g, fixed[0])

    def validate(self) -> None:
        """Check the group axioms on the explicit element list."""
        for g in self.elements:
            if g.inverse() not in self._element_set:
                raise AssertionError(f"missing inverse of {g}")
        for g in self.elements:
            for h in self.elements:
                if g * h not in self._element_set:
                    raise AssertionError(f"not closed: {g} * {h}")


def closure(
    generators: Iterable[Permutation],
    domain_size: int,
    max_order: int = 10**6,
) -> PermGroup:
    """Smallest group containing the generators, by breadth-first products."""
    gens = list(generators)
    for g in gens:
        if g.degree != domain_size:
            raise ValueError(
                f"generator degree {g.degree} does not match domain size {domain_size}"
            )
    ident = Permutation.identity(domain_size)
    elems = {ident}
    frontier = [ident]
    while frontier:
        new: list[Permutation] = []
        for h in frontier:
            for g in gens:
                p = g * h
                if p not in elems:
                    elems.add(p)
                    new.append(p)
                    if len(elems) > max_order:
                        raise GroupTooLargeError(
                            f"group exceeds the configured cap of {max_order} elements"
                        )
        frontier = new
    return PermGroup(domain_size, elems, generators=tuple(gens))


def orbit(group, item: Hashable, act: Callable) -> set:
    """Orbit of ``item`` under ``group`` via the action callback.

    ``group`` only needs an ``elements`` iterable, so this also works for
    weak-automorphism groups.
    """
    return {act(g, item) for g in group.elements}


def orbit_list(group, item: Hashable, act: Callable) -> list:
    """Orbit as a deterministic list (first-seen order over sorted elements)."""
    seen = []
    seen_set = set()
    for g in group.elements:
        image = act(g, item)
        if image not in seen_set:
            seen_set.add(image)
            seen.append(image)
    return seen


def stabilizer(group: PermGroup, item: Hashable, act: Callable) -> PermGroup:
    """Subgroup of elements fixing ``item`` under the action callback."""
    fixing = [g for g in group.elements if act(g, item) == item]
    return PermGroup(group.domain_size, fixing)


def count_orbits_burnside(group, fixed_count: Callable) -> int:
    """Number of orbits as the average number of fixed points.

    ``fixed_count(g)`` must return the number of items fixed by ``g``.
    A non-integral average means the callback is inconsistent with a
    group action and raises.
    """
    total = sum(fixed_count(g) for g in group.elements)
    n = len(group.elements)
    q, r = divmod(total, n)
    if r:
        raise ValueError(
            f"fixed-point total {total} is not divisible by the group order {n}"
        )
    return q


class SubgroupLattice:
    """All subgroups of a parent group with containment, Möbius and classes.

    Subgroups are sorted by (order, element list), so indices are stable
    for a given parent group.
    """

    def __init__(self, parent: PermGroup, subgroups: list[PermGroup]):
        self.parent = parent
        self.subgroups = subgroups
        n = len(subgroups)
        sets = [s.element_set() for s in subgroups]
        self.leq = [[sets[i] <= sets[j] for j in range(n)] for i in range(n)]
        self._index_by_set = {s: i for i, s in enumerate(sets)}
        self.mobius_table = self._compute_mobius()
        self.conjugacy_classes = self._compute_classes()
        self.class_of = [0] * n
        for c, members in enumerate(self.conjugacy_classes):
            for i in members:
                self.class_of[i] = c

    def __len__(self) -> int:
        return len(self.subgroups)

    def index_of(self, subgroup: PermGroup) -> int:
        try:
            return self._index_by_set[subgroup.element_set()]
        except KeyError:
            raise KeyError("subgroup is not a member of this lattice") from None

    def _compute_mobius(self) -> dict[tuple[int, int], int]:
        n = len(self.subgroups)
        mob: dict[tuple[int, int], int] = {}
        order = sorted(range(n), key=lambda i: self.subgroups[i].order)
        for i in range(n):
            for j in order:
                if not self.leq[i][j]:
                    continue
                if i == j:
                    mob[(i, j)] = 1
                    continue
                acc = 0
                for k in range(n):
                    if k != j and self.leq[i][k] and self.leq[k][j]:
                        acc += mob[(i, k)]
                mob[(i, j)] = -acc
        return mob

    def _compute_classes(self) -> list[list[int]]:
        n = len(self.subgroups)
        assigned = [False] * n
        classes: list[list[int]] = []
        for i in range(n):
            if assigned[i]:
                continue
            members = set()
            for g in self.parent.elements:
                members.add(self.index_of(self.subgroups[i].conjugate_by(g)))
            cls = sorted(members)
            for j in cls:
                assigned[j] = True
            classes.append(cls)
        return classes

    def mobius(self, i: int, j: int) -> int:
        if not self.leq[i][j]:
            raise ValueError(f"subgroup {i} is not contained in subgroup {j}")
        return self.mobius_table[(i, j)]

    def covers(self) -> list[tuple[int, int]]:
        """Cover pairs (i, j): i < j with no subgroup strictly between."""
        n = len(self.subgroups)
        out = []
        for i in range(n):
            for j in range(n):
                if i == j or not self.leq[i][j]:
                    continue
                if any(
                    k != i and k != j and self.leq[i][k] and self.leq[k][j]
                    for k in range(n)
                ):
                    continue
                out.append((i, j))
        return out

    def superset_indices(self, i: int) -> list[int]:
        return [j for j in range(len(self.subgroups)) if self.leq[i][j]]

    def class_order_census(self) -> dict[int, int]:
        """Map subgroup order -> number of subgroups of that order."""
        census: dict[int, int] = {}
        for s in self.subgroups:
            census[s.order] = census.get(s.order, 0) + 1
        return census

    def to_json(self) -> str:
        nodes = [
            {
                "id": i,
                "order": s.order,
                "class": self.class_of[i],
                "generators": [g.cycle_string() for g in minimal_generators(s)],
            }
            for i, s in enumerate(self.subgroups)
        ]
        edges = [{"lower": i, "upper": j} for i, j in self.covers()]
        mobius = [
            {"lower": i, "upper": j, "mu": v}
            for (i, j), v in sorted(self.mobius_table.items())
        ]
        return json.dumps(
            {"nodes": nodes, "containment": edges, "mobius": mobius}, indent=2
        )

    def to_dot(self) -> str:
        """Class-level Hasse diagram.

        One node per conjugacy class labeled with the common order and the
        class size; each edge carries the number of lower-class subgroups
        inside one upper-class member, with the reverse count in
        parentheses.
        """
        lines = ["digraph subgroup_lattice {", "  rankdir=BT;", '  node [shape=ellipse];']
        classes = self.conjugacy_classes
        for c, members in enumerate(classes):
            order = self.subgroups[members[0]].order
            lines.append(
                f'  c{c} [label="order {order}\\n×{len(members)}"];'
            )
        cover_pairs = set(self.covers())
        class_edges = sorted(
            {(self.class_of[i], self.class_of[j]) for i, j in cover_pairs}
        )
        for cl, cu in class_edges:
            upper = self.conjugacy_classes[cu][0]
            down = sum(
                1 for i in classes[cl] if self.leq[i][upper]
            )
            lower = classes[cl][0]
            up = sum(1 for j in classes[cu] if self.leq[lower][j])
            lines.append(f'  c{cl} -> c{cu} [label="{down} ({up})"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def minimal_generators(group: PermGroup) -> list[Permutation]:
    """A small (greedy, not provably minimum) generating set."""
    chosen: list[Permutation] = []
    have = PermGroup(group.domain_size, [group.identity()])
    for g in group.elements:
        if g in have:
            continue
        chosen.append(g)
        have = closure(chosen, group.domain_size, max_order=group.order)
        if have.order == group.order:
            break
    return chosen


def subgroups(group: PermGroup, max_order: int = 360) -> SubgroupLattice:
    """Enumerate every subgroup of ``group``.

    All cyclic subgroups are generated first, then the set is closed
    under pairwise joins until a fixed point.  Each subgroup keeps the
    generator pair that produced it so join closures stay cheap.
    """
    if group.order > max_order:
        raise GroupTooLargeError(
            f"subgroup enumeration capped at order {max_order}; group has order {group.order}"
        )
    n = group.domain_size
    found: dict[frozenset[Permutation], tuple[Permutation, ...]] = {}
    ident = Permutation.identity(n)
    found[frozenset([ident])] = ()
    for g in group.elements:
        if g.is_identity():
            continue
        cyc = closure([g], n, max_order=group.order)
        found.setdefault(cyc.element_set(), (g,))

    while True:
        current = list(found.items())
        added = False
        for (set_a, gens_a), (set_b, gens_b) in itertools.combinations(current, 2):
            if set_a <= set_b or set_b <= set_a:
                continue
            join = closure(list(gens_a) + list(gens_b), n, max_order=group.order)
            key = join.element_set()
            if key not in found:
                found[key] = tuple(join.generators)
                added = True
        if not added:
            break

    subs = sorted(
        (PermGroup(n, elems, generators=gens) for elems, gens in found.items()),
        key=lambda s: (s.order, [g.mapping for g in s.elements]),
    )
    return SubgroupLattice(group, subs)


def mobius_value(lattice: SubgroupLattice, lower, upper) -> int:
    """Möbius function value μ(H, K) for H ≤ K in the lattice.

    ``lower``/``upper`` may be lattice indices or PermGroup members.
    """
    i = lower if isinstance(lower, int) else lattice.index_of(lower)
    j = upper if isinstance(upper, int) else lattice.index_of(upper)
    return lattice.mobius(i, j)


def regular_representation(group: PermGroup) -> PermGroup:
    """The group acting on itself by left multiplication.

    The result has domain size equal to the group order and acts freely,
    which is the standard way to realize a free action of a given group.
    """
    elems = list(group.elements)
    index = {g: i for i, g in enumerate(elems)}
    images = []
    for g in elems:
        images.append(Permutation(tuple(index[g * h] for h in elems)))
    gens = [Permutation(tuple(index[g * h] for h in elems)) for g in group.generators]
    return PermGroup(group.order, images, generators=gens)


def free_action_copies(group: PermGroup, copies: int) -> PermGroup:
    """The same abstract group acting diagonally on ``copies`` disjoint
    copies of its domain."""
    if copies < 1:
        raise ValueError("need at least one copy")
    d = group.domain_size
    def widen(g: Permutation) -> Permutation:
        images = []
        for b in range(copies):
            images.extend(g(i) + b * d for i in range(d))
        return Permutation(images)
    elems = [widen(g) for g in group.elements]
    gens = [widen(g) for g in group.generators]
    return PermGroup(d * copies, elems, generators=gens)


def icosahedral_rotation_group() -> PermGroup:
    """The order-60 rotation group of the icosahedron as permutations
    of 5 letters (the five inscribed compounds it permutes evenly)."""
    a = Permutation.from_cycles("(1 2 3 4 5)")
    b = Permutation.from_cycles("(1 2 3)", degree=5)
    return closure([a, b], 5)


_NAMED_RE = re.compile(r"^(trivial|cyclic|symmetric):(\d+)$")


def named_group(spec: str) -> PermGroup:
    """Construct a group from a short spec string.

    Accepted forms: ``trivial:n``, ``cyclic:n``, ``symmetric:n``,
    ``klein4``, ``icosahedral-regular``, and explicit generators as
    ``cycles:<n>:<gen>;<gen>;...`` in 1-based cycle notation.
    """
    spec = spec.strip()
    if spec == "klein4":
        gens = [
            Permutation.from_cycles("(1 2)(3 4)"),
            Permutation.from_cycles("(1 3)(2 4)"),
        ]
        return closure(gens, 4)
    if spec == "icosahedral-regular":
        return regular_representation(icosahedral_rotation_group())
    m = _NAMED_RE.match(spec)
    if m:
        kind, num = m.group(1), int(m.group(2))
        if num < 1:
            raise ValueError(f"domain size must be positive in {spec!r}")
        if kind == "trivial":
            return PermGroup(num, [Permutation.identity(num)])
        if kind == "cyclic":
            gen = Permutation(tuple((i + 1) % num for i in range(num)))
            return closure([gen], num)
        if kind == "symmetric":
            if num > 8:
                raise GroupTooLargeError("symmetric groups supported up to degree 8")
            elems = [Permutation(p) for p in itertools.permutations(range(num))]
            gens = [Permutation.from_cycles("(1 2)", degree=num)] if num >= 2 else []
            if num >= 3:
                gens.append(Permutation(tuple((i + 1) % num for i in range(num))))
            return PermGroup(num, elems, generators=gens or elems)
    if spec.startswith("cycles:"):
        parts = spec.split(":", 2)
        if len(parts) != 3:
            raise ValueError(f"explicit generator spec must be cycles:<n>:<gens>: {spec!r}")
        degree = int(parts[1])
        gens = [
            Permutation.from_cycles(tok, degree=degree)
            for tok in parts[2].split(";")
            if tok.strip()
        ]
        return closure(gens, degree)
    raise ValueError(f"unknown group spec {spec!r}")
