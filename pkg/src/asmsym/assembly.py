"""Bunches, assembly configurations, and their symmetry groups.

Coordinates, radii and well widths may be exact rationals or floats.
When every number in a comparison is exact, all geometry (squared
distances, signed volumes) is decided exactly; otherwise a relative
tolerance of 1e-9 applies.  Only orientation-preserving isometries
count as congruences, so chirality is checked through the sign of the
signed volume of the first non-degenerate point quadruple.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .permgroup import Permutation

REL_TOL = 1e-9

Scalar = Fraction | int | float
Point = tuple[Scalar, Scalar, Scalar]


class InvalidConfigurationError(ValueError):
    """Raised when spheres interpenetrate or fields are malformed."""


class SearchCapError(RuntimeError):
    """Raised when a symmetry search exceeds its element cap."""


def _is_exact(v: Scalar) -> bool:
    return isinstance(v, (int, Fraction))


def parse_scalar(v) -> Scalar:
    """Accept JSON numbers, integer strings, 'p/q' and decimal strings."""
    if isinstance(v, bool):
        raise InvalidConfigurationError(f"not a number: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, Fraction):
        return v
    raise InvalidConfigurationError(f"not a number: {v!r}")


def render_scalar(v: Scalar):
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return int(v)
        return f"{v.numerator}/{v.denominator}"
    return v


def _values_eq(a: Scalar, b: Scalar) -> bool:
    if _is_exact(a) and _is_exact(b):
        return Fraction(a) == Fraction(b)
    fa, fb = float(a), float(b)
    return abs(fa - fb) <= REL_TOL * max(1.0, abs(fa), abs(fb))


def sqdist(p: Point, q: Point) -> Scalar:
    if all(_is_exact(c) for c in (*p, *q)):
        return sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(p, q))
    return sum((float(a) - float(b)) ** 2 for a, b in zip(p, q))


def signed_volume(p0: Point, p1: Point, p2: Point, p3: Point) -> Scalar:
    exact = all(_is_exact(c) for pt in (p0, p1, p2, p3) for c in pt)
    conv = Fraction if exact else float
    u = [conv(p1[i]) - conv(p0[i]) for i in range(3)]
    v = [conv(p2[i]) - conv(p0[i]) for i in range(3)]
    w = [conv(p3[i]) - conv(p0[i]) for i in range(3)]
    return (
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )


def _volume_sign(points: Sequence[Point], quad: tuple[int, int, int, int]) -> int:
    vol = signed_volume(*(points[i] for i in quad))
    if _is_exact(vol):
        return (vol > 0) - (vol < 0)
    span = max(
        (max(float(c) for c in p) - min(float(c) for c in p))
        for p in zip(*(points[i] for i in quad))
    )
    eps = REL_TOL * max(1.0, span) ** 3
    if abs(vol) <= eps:
        return 0
    return 1 if vol > 0 else -1


def first_nondegenerate_quadruple(
    points: Sequence[Point],
) -> tuple[int, int, int, int] | None:
    """First (lexicographic) quadruple with nonzero signed volume."""
    n = len(points)
    for quad in itertools.combinations(range(n), 4):
        if _volume_sign(points, quad) != 0:
            return quad
    return None


class Bunch:
    """A rigid ordered set of colored spheres."""

    __slots__ = ("points", "colors", "radii", "annuli")

    def __init__(
        self,
        points: Iterable[Point],
        colors: Iterable,
        radii: Iterable[Scalar],
        annuli: Iterable[Scalar],
    ):
        self.points = tuple(tuple(p) for p in points)
        self.colors = tuple(colors)
        self.radii = tuple(radii)
        self.annuli = tuple(annuli)
        n = len(self.points)
        if n == 0:
            raise InvalidConfigurationError("a bunch needs at least one sphere")
        if not (len(self.colors) == len(self.radii) == len(self.annuli) == n):
            raise InvalidConfigurationError("attribute lists must match the point count")
        for p in self.points:
            if len(p) != 3:
                raise InvalidConfigurationError("points must be 3D")
        for r in self.radii:
            if float(r) <= 0:
                raise InvalidConfigurationError("radii must be positive")
        for d in self.annuli:
            if float(d) < 0:
                raise InvalidConfigurationError("well widths must be nonnegative")
        for i in range(n):
            for j in range(i + 1, n):
                if not _at_least(sqdist(self.points[i], self.points[j]),
                                 (self.radii[i], self.radii[j])):
                    raise InvalidConfigurationError(
                        f"spheres {i} and {j} in one bunch intersect"
                    )

    @property
    def size(self) -> int:
        return len(self.points)

    def attrs(self, i: int) -> tuple:
        return (self.colors[i], self.radii[i], self.annuli[i])

    def attrs_eq(self, i: int, other: "Bunch", j: int) -> bool:
        return (
            self.colors[i] == other.colors[j]
            and _values_eq(self.radii[i], other.radii[j])
            and _values_eq(self.annuli[i], other.annuli[j])
        )

    def reordered(self, pi: Permutation) -> "Bunch":
        """The bunch with point i moved to slot pi(i)."""
        inv = pi.inverse()
        idx = [inv(j) for j in range(self.size)]
        return Bunch(
            (self.points[i] for i in idx),
            (self.colors[i] for i in idx),
            (self.radii[i] for i in idx),
            (self.annuli[i] for i in idx),
        )

    def translated(self, offset: Point) -> "Bunch":
        pts = [tuple(c + o for c, o in zip(p, offset)) for p in self.points]
        return Bunch(pts, self.colors, self.radii, self.annuli)

    def __repr__(self) -> str:
        return f"Bunch(size={self.size})"


def _at_least(sq: Scalar, radii: tuple[Scalar, Scalar]) -> bool:
    """sq >= (r1 + r2)^2, exactly or within tolerance."""
    if _is_exact(sq) and all(_is_exact(r) for r in radii):
        return sq >= (Fraction(radii[0]) + Fraction(radii[1])) ** 2
    bound = (float(radii[0]) + float(radii[1])) ** 2
    return float(sq) >= bound * (1.0 - REL_TOL)


class AssemblyConfiguration:
    """An ordered tuple of bunches with no cross-bunch interpenetration."""

    __slots__ = ("bunches", "_offsets")

    def __init__(self, bunches: Iterable[Bunch]):
        self.bunches = tuple(bunches)
        if not self.bunches:
            raise InvalidConfigurationError("need at least one bunch")
        offsets = [0]
        for b in self.bunches:
            offsets.append(offsets[-1] + b.size)
        self._offsets = tuple(offsets)
        for (l1, b1), (l2, b2) in itertools.combinations(enumerate(self.bunches), 2):
            for i, p in enumerate(b1.points):
                for j, q in enumerate(b2.points):
                    if not _at_least(sqdist(p, q), (b1.radii[i], b2.radii[j])):
                        raise InvalidConfigurationError(
                            f"sphere {i} of bunch {l1} intersects sphere {j} of bunch {l2}"
                        )

    @property
    def k(self) -> int:
        return len(self.bunches)

    @property
    def total_points(self) -> int:
        return self._offsets[-1]

    def flat_index(self, bunch: int, i: int) -> int:
        return self._offsets[bunch] + i

    def vertex_of_flat(self, idx: int) -> tuple[int, int]:
        """Flat index -> (point index, bunch index)."""
        for l in range(self.k):
            if idx < self._offsets[l + 1]:
                return (idx - self._offsets[l], l)
        raise IndexError(idx)

    def vertices(self) -> list[tuple[int, int]]:
        """All (point index, bunch index) labels in flat order."""
        return [
            (i, l) for l in range(self.k) for i in range(self.bunches[l].size)
        ]

    def flat_points(self) -> list[Point]:
        return [p for b in self.bunches for p in b.points]

    def flat_attrs(self) -> list[tuple]:
        return [b.attrs(i) for b in self.bunches for i in range(b.size)]

    def to_json(self) -> str:
        return json.dumps(
            {
                "bunches": [
                    {
                        "points": [[render_scalar(c) for c in p] for p in b.points],
                        "colors": list(b.colors),
                        "radii": [render_scalar(r) for r in b.radii],
                        "annuli": [render_scalar(d) for d in b.annuli],
                    }
                    for b in self.bunches
                ]
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "AssemblyConfiguration":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfigurationError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict) or "bunches" not in data:
            raise InvalidConfigurationError('top level must be {"bunches": [...]}')
        bunches = []
        for idx, spec in enumerate(data["bunches"]):
            try:
                pts = [tuple(parse_scalar(c) for c in p) for p in spec["points"]]
                colors = list(spec["colors"])
                radii = [parse_scalar(r) for r in spec["radii"]]
                annuli = [parse_scalar(d) for d in spec["annuli"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidConfigurationError(f"bunch {idx}: {exc}") from exc
            bunches.append(Bunch(pts, colors, radii, annuli))
        return cls(bunches)

    def __repr__(self) -> str:
        return f"AssemblyConfiguration(bunches={[b.size for b in self.bunches]})"


def singleton_spheres(
    positions: Iterable[Point],
    radius: Scalar = 1,
    annulus: Scalar = Fraction(1, 10),
    color: str = "a",
) -> AssemblyConfiguration:
    """Identical one-sphere bunches at the given centers."""
    return AssemblyConfiguration(
        Bunch([p], [color], [radius], [annulus]) for p in positions
    )


# ---------------------------------------------------------------------------
# Congruence and isomorphism of bunches


def _ordered_congruent(
    pts_a: Sequence[Point],
    pts_b: Sequence[Point],
    attrs_eq,
) -> bool:
    """Indexwise congruence: equal distance matrices, attributes and
    chirality.  ``attrs_eq(i)`` compares the i-th attribute records."""
    n = len(pts_a)
    if n != len(pts_b):
        return False
    if not all(attrs_eq(i) for i in range(n)):
        return False
    for i in range(n):
        for j in range(i + 1, n):
            if not _values_eq(sqdist(pts_a[i], pts_a[j]), sqdist(pts_b[i], pts_b[j])):
                return False
    quad = first_nondegenerate_quadruple(pts_a)
    if quad is None:
        return True
    return _volume_sign(pts_a, quad) == _volume_sign(pts_b, quad)


def bunches_congruent(a: Bunch, b: Bunch, return_witness: bool = False):
    """Order-preserving congruence: some proper rigid motion carries
    point i of ``a`` onto point i of ``b`` with matching attributes."""
    ok = a.size == b.size and _ordered_congruent(
        a.points, b.points, lambda i: a.attrs_eq(i, b, i)
    )
    if not return_witness:
        return ok
    return ok, (congruence_witness(a.points, b.points) if ok else None)


def congruence_witness(pts_a: Sequence[Point], pts_b: Sequence[Point]):
    """Rotation matrix and translation (floats) mapping a onto b.

    Assumes the point lists are already known to be congruent; built from
    an orthonormal frame on the first affinely independent triple.
    """
    import numpy as np

    A = np.array([[float(c) for c in p] for p in pts_a])
    B = np.array([[float(c) for c in p] for p in pts_b])
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    H = (A - ca).T @ (B - cb)
    U, _, Vt = np.linalg.svd(H)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0])
    R = Vt.T @ D @ U.T
    t = cb - R @ ca
    return R, t


def _witness_permutations(
    a: Bunch,
    b: Bunch,
    first_only: bool = False,
    cap: int | None = None,
) -> list[Permutation]:
    """All pi such that moving point i of ``a`` to slot pi(i) yields a
    bunch congruent to ``b`` (ordered, attributes and chirality)."""
    n = a.size
    if n != b.size:
        return []
    allowed = []
    for i in range(n):
        cand = [j for j in range(n) if a.attrs_eq(i, b, j)]
        if not cand:
            return []
        allowed.append(cand)
    quad = first_nondegenerate_quadruple(a.points)
    sign_a = _volume_sign(a.points, quad) if quad else 0

    order = sorted(range(n), key=lambda i: len(allowed[i]))
    assign = [-1] * n
    used = [False] * n
    results: list[Permutation] = []

    def backtrack(pos: int) -> bool:
        if pos == n:
            if quad is not None:
                image = tuple(assign[i] for i in quad)
                if _volume_sign(b.points, image) != sign_a:
                    return False
            results.append(Permutation(assign))
            if cap is not None and len(results) > cap:
                raise SearchCapError("bunch symmetry search exceeded its cap")
            return first_only
        i = order[pos]
        for j in allowed[i]:
            if used[j]:
                continue
            ok = True
            for k in order[:pos]:
                if not _values_eq(
                    sqdist(a.points[i], a.points[k]),
                    sqdist(b.points[j], b.points[assign[k]]),
                ):
                    ok = False
                    break
            if ok:
                assign[i] = j
                used[j] = True
                if backtrack(pos + 1):
                    return True
                assign[i] = -1
                used[j] = False
        return False

    backtrack(0)
    return results


def bunches_isomorphic(a: Bunch, b: Bunch) -> Permutation | None:
    """Witness permutation pi with a ~ b as bunches, or None.

    The search runs over attribute-compatible assignments, pruned by
    pairwise distances, with a final chirality check.
    """
    found = _witness_permutations(a, b, first_only=True)
    return found[0] if found else None


def same_assembly_system(
    c1: AssemblyConfiguration, c2: AssemblyConfiguration
) -> bool:
    """Do the two configurations consist of matching bunch types?

    Bunches are matched bipartitely under bunch isomorphism.
    """
    if c1.k != c2.k:
        return False
    k = c1.k
    compat = [
        [bunches_isomorphic(c1.bunches[i], c2.bunches[j]) is not None for j in range(k)]
        for i in range(k)
    ]
    used = [False] * k

    def match(i: int) -> bool:
        if i == k:
            return True
        for j in range(k):
            if compat[i][j] and not used[j]:
                used[j] = True
                if match(i + 1):
                    return True
                used[j] = False
        return False

    return match(0)


# ---------------------------------------------------------------------------
# Weak automorphism group


class WautElement:
    """A relabeling tuple: sigma on bunch indices plus one permutation
    per bunch, with pis[l] sending point i of bunch l to slot pis[l](i)
    of bunch sigma(l)."""

    __slots__ = ("sigma", "pis", "flat")

    def __init__(self, sigma: Permutation, pis: Sequence[Permutation], offsets: Sequence[int]):
        self.sigma = sigma
        self.pis = tuple(pis)
        images = [0] * offsets[-1]
        for l, pi in enumerate(self.pis):
            for i in range(pi.degree):
                images[offsets[l] + i] = offsets[sigma(l)] + pi(i)
        self.flat = Permutation(images)

    @classmethod
    def from_flat(cls, flat: Permutation, offsets: Sequence[int]) -> "WautElement":
        k = len(offsets) - 1
        sigma_imgs = []
        pis = []
        for l in range(k):
            size = offsets[l + 1] - offsets[l]
            target = None
            imgs = []
            for i in range(size):
                j = flat(offsets[l] + i)
                m = _bunch_of(j, offsets)
                if target is None:
                    target = m
                elif m != target:
                    raise ValueError("flat permutation does not respect bunches")
                imgs.append(j - offsets[m])
            sigma_imgs.append(target)
            pis.append(Permutation(imgs))
        return cls(Permutation(sigma_imgs), pis, offsets)

    def vertex_image(self, vertex: tuple[int, int]) -> tuple[int, int]:
        """(i, l) -> (pis[l](i), sigma(l))."""
        i, l = vertex
        return (self.pis[l](i), self.sigma(l))

    def is_identity(self) -> bool:
        return self.flat.is_identity()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, WautElement) and self.flat == other.flat

    def __hash__(self) -> int:
        return hash(self.flat)

    def __lt__(self, other: "WautElement") -> bool:
        return self.flat < other.flat

    def __repr__(self) -> str:
        pis = ", ".join(p.cycle_string() for p in self.pis)
        return f"WautElement(sigma={self.sigma.cycle_string()}; {pis})"


def _bunch_of(flat_idx: int, offsets: Sequence[int]) -> int:
    for l in range(len(offsets) - 1):
        if flat_idx < offsets[l + 1]:
            return l
    raise IndexError(flat_idx)


class WautGroup:
    """The weak automorphism group of an assembly configuration space."""

    def __init__(self, config: AssemblyConfiguration, elements: Iterable[WautElement]):
        self.config = config
        self.offsets = config._offsets
        self.elements = tuple(sorted(elements))
        self._by_flat = {e.flat: e for e in self.elements}

    @property
    def order(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[WautElement]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, e: WautElement) -> bool:
        return e.flat in self._by_flat

    def identity(self) -> WautElement:
        return WautElement.from_flat(
            Permutation.identity(self.offsets[-1]), self.offsets
        )

    def compose(self, a: WautElement, b: WautElement) -> WautElement:
        """Apply b first, then a."""
        return WautElement.from_flat(a.flat * b.flat, self.offsets)

    def inverse(self, a: WautElement) -> WautElement:
        return WautElement.from_flat(a.flat.inverse(), self.offsets)

    def subgroup(self, elements: Iterable[WautElement]) -> "WautGroup":
        return WautGroup(self.config, elements)

    def validate(self) -> None:
        for a in self.elements:
            if self.inverse(a) not in self:
                raise AssertionError(f"missing inverse of {a}")
            for b in self.elements:
                if self.compose(a, b) not in self:
                    raise AssertionError(f"not closed under composition: {a}, {b}")

    def __repr__(self) -> str:
        return f"WautGroup(order={self.order})"


def waut(config: AssemblyConfiguration, cap: int = 10**6) -> WautGroup:
    """Weak automorphism group of the configuration's assembly system.

    A tuple is admitted when each relabeled bunch is congruent (as an
    ordered bunch) to the bunch whose index it takes over, so applying
    the tuple always lands inside the same assembly system.
    """
    k = config.k
    witness: dict[tuple[int, int], list[Permutation]] = {}
    for l in range(k):
        for m in range(k):
            if config.bunches[l].size == config.bunches[m].size:
                perms = _witness_permutations(
                    config.bunches[l], config.bunches[m], cap=cap
                )
                if perms:
                    witness[(l, m)] = perms

    elements: list[WautElement] = []
    targets = [[m for m in range(k) if (l, m) in witness] for l in range(k)]

    def place(l: int, sigma_imgs: list[int], used: list[bool]):
        if l == k:
            pools = [witness[(i, sigma_imgs[i])] for i in range(k)]
            total = 1
            for p in pools:
                total *= len(p)
            if len(elements) + total > cap:
                raise SearchCapError(
                    f"weak automorphism search exceeded the cap of {cap} elements"
                )
            sigma = Permutation(sigma_imgs)
            for pis in itertools.product(*pools):
                elements.append(WautElement(sigma, pis, config._offsets))
            return
        for m in targets[l]:
            if not used[m]:
                used[m] = True
                place(l + 1, sigma_imgs + [m], used)
                used[m] = False

    place(0, [], [False] * k)
    return WautGroup(config, elements)


def apply_waut(psi: WautElement, config: AssemblyConfiguration) -> AssemblyConfiguration:
    """The relabeled configuration: spatial points stay put, labels move."""
    k = config.k
    new_bunches: list[Bunch | None] = [None] * k
    for l, bunch in enumerate(config.bunches):
        target = psi.sigma(l)
        new_bunches[target] = bunch.reordered(psi.pis[l])
    return AssemblyConfiguration(new_bunches)


# ---------------------------------------------------------------------------
# Relations between configurations


def configurations_congruent(
    c1: AssemblyConfiguration, c2: AssemblyConfiguration
) -> bool:
    """One proper rigid motion maps every labeled point of c1 onto the
    same-labeled point of c2 (bunch order and point order preserved)."""
    if [b.size for b in c1.bunches] != [b.size for b in c2.bunches]:
        return False
    attrs1, attrs2 = c1.flat_attrs(), c2.flat_attrs()

    def attrs_eq(i: int) -> bool:
        a, b = attrs1[i], attrs2[i]
        return a[0] == b[0] and _values_eq(a[1], b[1]) and _values_eq(a[2], b[2])

    return _ordered_congruent(c1.flat_points(), c2.flat_points(), attrs_eq)


def configurations_strictly_isomorphic(
    c1: AssemblyConfiguration, c2: AssemblyConfiguration
) -> bool:
    """Same unordered partition of the unordered point set into bunches,
    with every point carrying the same attributes in both."""
    if c1.k != c2.k:
        return False

    def bunch_key(b: Bunch):
        return frozenset(
            (tuple(map(_canon_scalar, b.points[i])), b.colors[i],
             _canon_scalar(b.radii[i]), _canon_scalar(b.annuli[i]))
            for i in range(b.size)
        )

    from collections import Counter

    return Counter(map(bunch_key, c1.bunches)) == Counter(map(bunch_key, c2.bunches))


def _canon_scalar(v: Scalar):
    if _is_exact(v):
        return Fraction(v)
    return round(float(v), 12)


def _global_isometry_search(
    c1: AssemblyConfiguration,
    c2: AssemblyConfiguration,
    allowed: list[list[int]],
) -> bool:
    """Is there a proper rigid motion realizing some bijection of the
    flat point lists restricted to ``allowed`` targets per point?"""
    pts1, pts2 = c1.flat_points(), c2.flat_points()
    n = len(pts1)
    if n != len(pts2):
        return False
    quad = first_nondegenerate_quadruple(pts1)
    sign1 = _volume_sign(pts1, quad) if quad else 0
    order = sorted(range(n), key=lambda i: len(allowed[i]))
    assign = [-1] * n
    used = [False] * n

    def backtrack(pos: int) -> bool:
        if pos == n:
            if quad is not None:
                image = tuple(assign[i] for i in quad)
                if _volume_sign(pts2, image) != sign1:
                    return False
            return True
        i = order[pos]
        for j in allowed[i]:
            if used[j]:
                continue
            ok = True
            for kk in order[:pos]:
                if not _values_eq(sqdist(pts1[i], pts1[kk]), sqdist(pts2[j], pts2[assign[kk]])):
                    ok = False
                    break
            if ok:
                assign[i] = j
                used[j] = True
                if backtrack(pos + 1):
                    return True
                assign[i] = -1
                used[j] = False
        return False

    return backtrack(0)


def configurations_order_preserving_isomorphic(
    c1: AssemblyConfiguration, c2: AssemblyConfiguration
) -> bool:
    """One rigid motion maps bunch i of c1 onto bunch i of c2, allowing
    any attribute-preserving reordering of points inside each bunch."""
    if [b.size for b in c1.bunches] != [b.size for b in c2.bunches]:
        return False
    attrs2 = c2.flat_attrs()
    allowed: list[list[int]] = []
    for l, bunch in enumerate(c1.bunches):
        base = c2._offsets[l]
        for i in range(bunch.size):
            a = bunch.attrs(i)
            cand = [
                base + j
                for j in range(bunch.size)
                if attrs2[base + j][0] == a[0]
                and _values_eq(attrs2[base + j][1], a[1])
                and _values_eq(attrs2[base + j][2], a[2])
            ]
            if not cand:
                return False
            allowed.append(cand)
    return _global_isometry_search(c1, c2, allowed)


def configurations_permuted_congruent(
    c1: AssemblyConfiguration, c2: AssemblyConfiguration
) -> bool:
    """One rigid motion maps bunch i of c1 onto bunch sigma(i) of c2 for
    some bunch permutation, preserving point order within bunches."""
    if c1.k != c2.k:
        return False
    k = c1.k
    pts1, pts2 = c1.flat_points(), c2.flat_points()
    quad = first_nondegenerate_quadruple(pts1)
    sign1 = _volume_sign(pts1, quad) if quad else 0

    def bunch_pair_ok(l: int, m: int) -> bool:
        b1, b2 = c1.bunches[l], c2.bunches[m]
        if b1.size != b2.size:
            return False
        if not all(b1.attrs_eq(i, b2, i) for i in range(b1.size)):
            return False
        return all(
            _values_eq(sqdist(b1.points[i], b1.points[j]), sqdist(b2.points[i], b2.points[j]))
            for i in range(b1.size)
            for j in range(i + 1, b1.size)
        )

    compat = [[m for m in range(k) if bunch_pair_ok(l, m)] for l in range(k)]
    assign = [-1] * k
    used = [False] * k

    def cross_ok(l: int, m: int) -> bool:
        b1, b2 = c1.bunches[l], c2.bunches[m]
        for lp in range(l):
            mp = assign[lp]
            o1, o2 = c1.bunches[lp], c2.bunches[mp]
            for i in range(b1.size):
                for j in range(o1.size):
                    if not _values_eq(
                        sqdist(b1.points[i], o1.points[j]),
                        sqdist(b2.points[i], o2.points[j]),
                    ):
                        return False
        return True

    def flat_of(c: AssemblyConfiguration, sigma: list[int], i: int) -> int:
        pt, l = c1.vertex_of_flat(i)
        return c2._offsets[sigma[l]] + pt

    def backtrack(l: int) -> bool:
        if l == k:
            if quad is not None:
                image = tuple(flat_of(c2, assign, i) for i in quad)
                if _volume_sign(pts2, image) != sign1:
                    return False
            return True
        for m in compat[l]:
            if used[m]:
                continue
            if cross_ok(l, m):
                assign[l] = m
                used[m] = True
                if backtrack(l + 1):
                    return True
                assign[l] = -1
                used[m] = False
        return False

    return backtrack(0)


def configurations_strictly_congruent(c1, c2) -> bool:
    return configurations_strictly_isomorphic(c1, c2) and configurations_congruent(c1, c2)


def configurations_strictly_order_preserving(c1, c2) -> bool:
    return configurations_strictly_isomorphic(c1, c2) and configurations_order_preserving_isomorphic(c1, c2)


def configurations_strictly_permuted_congruent(c1, c2) -> bool:
    return configurations_strictly_isomorphic(c1, c2) and configurations_permuted_congruent(c1, c2)


# ---------------------------------------------------------------------------
# Stabilizer subgroups of the relations


def _relation_subgroup(config: AssemblyConfiguration, group: WautGroup, relation) -> WautGroup:
    members = [
        psi for psi in group.elements if relation(apply_waut(psi, config), config)
    ]
    return group.subgroup(members)


def strict_congruence_group(
    config: AssemblyConfiguration, group: WautGroup | None = None
) -> WautGroup:
    """Stabilizer of the configuration up to strict congruence."""
    group = group or waut(config)
    return _relation_subgroup(config, group, configurations_strictly_congruent)


def strict_order_preserving_group(
    config: AssemblyConfiguration, group: WautGroup | None = None
) -> WautGroup:
    group = group or waut(config)
    return _relation_subgroup(config, group, configurations_strictly_order_preserving)


def strict_permuted_congruence_group(
    config: AssemblyConfiguration, group: WautGroup | None = None
) -> WautGroup:
    group = group or waut(config)
    return _relation_subgroup(config, group, configurations_strictly_permuted_congruent)


def configuration_orbit(
    config: AssemblyConfiguration, group: WautGroup | None = None
) -> list[AssemblyConfiguration]:
    """Orbit representatives of the configuration under the weak
    automorphism group, one per strict-congruence class."""
    group = group or waut(config)
    reps: list[AssemblyConfiguration] = []
    for psi in group.elements:
        image = apply_waut(psi, config)
        if not any(configurations_strictly_congruent(image, r) for r in reps):
            reps.append(image)
    return reps
