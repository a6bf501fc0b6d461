"""Truncated power series over exact rationals and fixed-tree counters.

Series coefficients are plain ``fractions.Fraction`` values; nothing in
this module touches floating point.  The solvers convert coefficients to
integer counts ``t_n = n! * a_n`` at the boundary and assert integrality
as a built-in tripwire for recurrence bugs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .permgroup import PermGroup, SubgroupLattice


class RationalSeries:
    """A power series truncated at ``order`` (inclusive exponent)."""

    __slots__ = ("order", "coeffs")

    def __init__(self, coeffs: Iterable[Fraction | int], order: int | None = None):
        cs = [Fraction(c) for c in coeffs]
        if order is None:
            order = len(cs) - 1
        if order < 0:
            raise ValueError("order must be nonnegative")
        cs = cs[: order + 1]
        cs.extend([Fraction(0)] * (order + 1 - len(cs)))
        self.order = order
        self.coeffs = tuple(cs)

    @classmethod
    def zero(cls, order: int) -> "RationalSeries":
        return cls([], order)

    @classmethod
    def x(cls, order: int) -> "RationalSeries":
        return cls([0, 1], order)

    def coefficient(self, n: int) -> Fraction:
        if n < 0:
            return Fraction(0)
        if n > self.order:
            raise IndexError(f"coefficient {n} beyond truncation order {self.order}")
        return self.coeffs[n]

    def truncate(self, order: int) -> "RationalSeries":
        return RationalSeries(self.coeffs, order)

    def __add__(self, other: "RationalSeries") -> "RationalSeries":
        n = min(self.order, other.order)
        return RationalSeries(
            [self.coeffs[i] + other.coeffs[i] for i in range(n + 1)], n
        )

    def __sub__(self, other: "RationalSeries") -> "RationalSeries":
        n = min(self.order, other.order)
        return RationalSeries(
            [self.coeffs[i] - other.coeffs[i] for i in range(n + 1)], n
        )

    def __neg__(self) -> "RationalSeries":
        return RationalSeries([-c for c in self.coeffs], self.order)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            k = Fraction(other)
            return RationalSeries([c * k for c in self.coeffs], self.order)
        n = min(self.order, other.order)
        out = [Fraction(0)] * (n + 1)
        for i, a in enumerate(self.coeffs[: n + 1]):
            if not a:
                continue
            for j in range(n + 1 - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] += a * b
        return RationalSeries(out, n)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, RationalSeries)
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((self.order, self.coeffs))

    def __repr__(self) -> str:
        terms = [f"{c}*x^{i}" for i, c in enumerate(self.coeffs) if c]
        return "RationalSeries(" + (" + ".join(terms) or "0") + f", O(x^{self.order + 1}))"


def series_exp(s: RationalSeries) -> RationalSeries:
    """exp of a series with zero constant term.

    Uses the derivative recurrence ``n*b_n = sum_k k*a_k*b_{n-k}`` with
    ``b_0 = 1``; everything stays rational.
    """
    if s.coeffs[0] != 0:
        raise ValueError("series_exp requires a zero constant term")
    n = s.order
    b = [Fraction(0)] * (n + 1)
    b[0] = Fraction(1)
    for m in range(1, n + 1):
        acc = Fraction(0)
        for k in range(1, m + 1):
            a = s.coeffs[k]
            if a:
                acc += k * a * b[m - k]
        b[m] = acc / m
    return RationalSeries(b, n)


def scale_arg(s: RationalSeries, c: Fraction | int) -> RationalSeries:
    """Substitute ``c*x`` for ``x``: coefficient n becomes ``c^n * a_n``."""
    c = Fraction(c)
    out = []
    power = Fraction(1)
    for a in s.coeffs:
        out.append(a * power)
        power *= c
    return RationalSeries(out, s.order)


def _ints_from_egf(coeffs: Sequence[Fraction]) -> list[int]:
    """Convert EGF coefficients a_n to counts t_n = n! * a_n, checking
    integrality."""
    out = []
    fact = 1
    for n, a in enumerate(coeffs):
        if n == 0:
            continue
        fact *= n
        t = a * fact
        if t.denominator != 1:
            raise ArithmeticError(f"coefficient t_{n} = {t} is not an integer")
        out.append(int(t))
    return out


def base_egf(order: int) -> RationalSeries:
    """EGF of leaf-labeled trees with all internal degrees >= 2.

    Solves ``1 - x + 2 f = exp(f)`` coefficient by coefficient.  The
    joint recurrence with ``b = exp(f)`` is ``a_n = (1/n) sum_{k<n}
    k a_k b_{n-k}`` and ``b_n = 2 a_n`` for n >= 2.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    a = [Fraction(0)] * (order + 1)
    b = [Fraction(0)] * (order + 1)
    a[1] = Fraction(1)
    b[0] = Fraction(1)
    b[1] = Fraction(1)
    for n in range(2, order + 1):
        acc = Fraction(0)
        for k in range(1, n):
            if a[k]:
                acc += k * a[k] * b[n - k]
        a[n] = acc / n
        b[n] = 2 * a[n]
    return RationalSeries(a, order)


def solve_base_egf(order: int) -> list[int]:
    """Counts t_1..t_order of trees on labeled leaf sets, exact integers."""
    return _ints_from_egf(base_egf(order).coeffs)


def _group_egf(prior_sum: RationalSeries) -> RationalSeries:
    """Solve ``1 + 2 f = exp(P + f)`` for f, with P = ``prior_sum`` known.

    The unknown coefficient enters both sides linearly (the constant term
    of the exponential is 1), giving the closed recurrence
    ``a_n = p_n + (1/n) sum_{k<n} k (p_k + a_k) b_{n-k}``.
    """
    order = prior_sum.order
    if prior_sum.coeffs[0] != 0:
        raise ValueError("subgroup contribution must have zero constant term")
    p = prior_sum.coeffs
    a = [Fraction(0)] * (order + 1)
    b = [Fraction(0)] * (order + 1)
    b[0] = Fraction(1)
    for n in range(1, order + 1):
        acc = Fraction(0)
        for k in range(1, n):
            s_k = p[k] + a[k]
            if s_k:
                acc += k * s_k * b[n - k]
        a[n] = p[n] + acc / n
        b[n] = 2 * a[n]
    return RationalSeries(a, order)


def solve_group_egf(
    group: PermGroup,
    lattice: SubgroupLattice,
    order: int | None = None,
    n_orbits: int = 1,
) -> dict[int, list[int]]:
    """Fixed-tree counts per conjugacy class of subgroups.

    Returns a map from conjugacy-class index (in ``lattice``) to the
    sequence t_1..t_N for that class, where a class of order h gets
    ``N = n_orbits * |G| / h`` terms unless ``order`` overrides it.
    The group must act freely on its domain; subgroups are processed
    bottom-up, and conjugate subgroups share one series.
    """
    group.require_free()
    if lattice.parent != group:
        raise ValueError("lattice does not belong to the given group")
    total = n_orbits * group.order

    class_orders = [lattice.subgroups[cls[0]].order for cls in lattice.conjugacy_classes]
    def class_trunc(c: int) -> int:
        if order is not None:
            return order
        n, r = divmod(total, class_orders[c])
        if r:
            raise ValueError("class order does not divide the leaf count")
        return n

    # Every computed series is kept long enough for all classes above it.
    max_order = order if order is not None else total
    series_by_class: dict[int, RationalSeries] = {}
    by_size = sorted(range(len(class_orders)), key=lambda c: class_orders[c])
    for c in by_size:
        rep_idx = lattice.conjugacy_classes[c][0]
        h = class_orders[c]
        if h == 1:
            series_by_class[c] = base_egf(max_order)
            continue
        prior = RationalSeries.zero(max_order)
        for k_idx in range(len(lattice.subgroups)):
            if k_idx == rep_idx or not lattice.leq[k_idx][rep_idx]:
                continue
            k_cls = lattice.class_of[k_idx]
            idx = h // lattice.subgroups[k_idx].order
            prior = prior + scale_arg(series_by_class[k_cls], idx) * Fraction(1, idx)
        series_by_class[c] = _group_egf(prior)

    return {
        c: _ints_from_egf(series_by_class[c].truncate(class_trunc(c)).coeffs)
        for c in by_size
    }
