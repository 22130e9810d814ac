"""Certified enclosures on mpmath's interval context.

Intervals and complex boxes wrap ``iv.mpf`` and ``iv.mpc`` values. Each one
remembers the precision it was built at, and arithmetic runs at the larger
precision of its operands with outward rounding. Endpoints read back as
exact Fractions, so callers compare them with rational bounds directly.
Root enclosures wrap sympy's isolating intervals and rectangles, which can
be refined to any width without losing the identity of the root.
"""

import logging
import operator
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple, Union

from mpmath import iv
from mpmath.libmp import finf, fnan, fninf, to_rational
from sympy.polys.domains import QQ, ZZ
from sympy.polys.rootisolation import dup_isolate_all_roots_sqf

from arithmetic.gns_errors import EnclosureFailure

logger = logging.getLogger(__name__)

DEFAULT_BOX_PRECISION = 64
GUARD_BITS = 32

Number = Union[int, Fraction]


@contextmanager
def working_precision(bits: int) -> Iterator[None]:
    saved = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = saved


def to_fraction(value: Any) -> Fraction:
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return Fraction(int(value.numerator), int(value.denominator))


def _precision_for(x: Fraction) -> int:
    # enough bits to hold an integer exactly
    return max(DEFAULT_BOX_PRECISION, abs(x.numerator).bit_length(), x.denominator.bit_length())


def _to_iv(x: Number, prec: int):
    x = Fraction(x)
    with working_precision(prec):
        if x.denominator == 1:
            return iv.mpf(x.numerator)
        return iv.mpf(x.numerator) / x.denominator


def _endpoint(raw) -> Fraction:
    if raw in (finf, fninf, fnan):
        raise EnclosureFailure("interval enclosure is unbounded")
    return Fraction(*to_rational(raw))


@dataclass(frozen=True, eq=False)
class Interval:
    value: Any
    prec: int = DEFAULT_BOX_PRECISION

    @classmethod
    def point(cls, x: Number, prec: Optional[int] = None) -> "Interval":
        x = Fraction(x)
        prec = prec or _precision_for(x)
        return cls(_to_iv(x, prec), prec)

    @classmethod
    def between(cls, lo: Number, hi: Number, prec: int = DEFAULT_BOX_PRECISION) -> "Interval":
        with working_precision(prec):
            value = iv.mpf((_to_iv(lo, prec), _to_iv(hi, prec)))
        return cls(value, prec)

    @property
    def lo(self) -> Fraction:
        return _endpoint(self.value._mpi_[0])

    @property
    def hi(self) -> Fraction:
        return _endpoint(self.value._mpi_[1])

    def _apply(self, op: Callable, other: Union["Interval", Number]) -> "Interval":
        other = _as_interval(other)
        prec = max(self.prec, other.prec)
        with working_precision(prec):
            return Interval(op(self.value, other.value), prec)

    def __add__(self, other: Union["Interval", Number]) -> "Interval":
        return self._apply(operator.add, other)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.value, self.prec)

    def __sub__(self, other: Union["Interval", Number]) -> "Interval":
        return self._apply(operator.sub, other)

    def __rsub__(self, other: Number) -> "Interval":
        return _as_interval(other) - self

    def __mul__(self, other: Union["Interval", Number]) -> "Interval":
        return self._apply(operator.mul, other)

    __rmul__ = __mul__

    def square(self) -> "Interval":
        with working_precision(self.prec):
            magnitude = abs(self.value)
            return Interval(magnitude * magnitude, self.prec)

    def reciprocal(self) -> "Interval":
        if self.contains(0):
            raise ZeroDivisionError("interval contains zero")
        with working_precision(self.prec):
            return Interval(1 / self.value, self.prec)

    def contains(self, x: Number) -> bool:
        return self.lo <= x <= self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mag(self) -> Fraction:
        return max(abs(self.lo), abs(self.hi))

    def rounded(self, bits: int) -> "Interval":
        with working_precision(bits):
            return Interval(+self.value, bits)


def _as_interval(value: Union[Interval, Number]) -> Interval:
    if isinstance(value, Interval):
        return value
    return Interval.point(value)


@dataclass(frozen=True, eq=False)
class ComplexBox:
    """Axis-parallel rectangle re x im in the complex plane, held as an ``iv.mpc``."""

    value: Any
    prec: int = DEFAULT_BOX_PRECISION

    @classmethod
    def point(cls, re: Number, im: Number = 0, prec: Optional[int] = None) -> "ComplexBox":
        re, im = Fraction(re), Fraction(im)
        prec = prec or max(_precision_for(re), _precision_for(im))
        return cls.from_intervals(Interval.point(re, prec), Interval.point(im, prec))

    @classmethod
    def from_intervals(cls, re: Interval, im: Interval) -> "ComplexBox":
        prec = max(re.prec, im.prec)
        with working_precision(prec):
            return cls(iv.mpc(re.value, im.value), prec)

    @property
    def re(self) -> Interval:
        return Interval(self.value.real, self.prec)

    @property
    def im(self) -> Interval:
        return Interval(self.value.imag, self.prec)

    def _apply(self, op: Callable, other: Union["ComplexBox", Number]) -> "ComplexBox":
        other = _as_box(other)
        prec = max(self.prec, other.prec)
        with working_precision(prec):
            return ComplexBox(op(self.value, other.value), prec)

    def __add__(self, other: Union["ComplexBox", Number]) -> "ComplexBox":
        return self._apply(operator.add, other)

    __radd__ = __add__

    def __neg__(self) -> "ComplexBox":
        return ComplexBox(-self.value, self.prec)

    def __sub__(self, other: Union["ComplexBox", Number]) -> "ComplexBox":
        return self._apply(operator.sub, other)

    def __mul__(self, other: Union["ComplexBox", Number]) -> "ComplexBox":
        return self._apply(operator.mul, other)

    __rmul__ = __mul__

    def conjugate(self) -> "ComplexBox":
        return ComplexBox.from_intervals(self.re, -self.im)

    def abs_squared(self) -> Interval:
        return self.re.square() + self.im.square()

    def abs_upper(self, bits: int = DEFAULT_BOX_PRECISION) -> Fraction:
        with working_precision(bits):
            return Interval(abs(self.value), bits).hi

    def abs_lower(self, bits: int = DEFAULT_BOX_PRECISION) -> Fraction:
        with working_precision(bits):
            return Interval(abs(self.value), bits).lo

    def reciprocal(self) -> "ComplexBox":
        if self.contains_zero():
            raise ZeroDivisionError("box contains zero")
        with working_precision(self.prec):
            return ComplexBox(1 / self.value, self.prec)

    def contains(self, re: Number, im: Number = 0) -> bool:
        return self.re.contains(re) and self.im.contains(im)

    def contains_zero(self) -> bool:
        return self.contains(0, 0)

    def overlaps(self, other: "ComplexBox") -> bool:
        a, b = (self.re, self.im), (other.re, other.im)
        return all(x.lo <= y.hi and y.lo <= x.hi for x, y in zip(a, b))

    @property
    def center(self) -> complex:
        re, im = self.re, self.im
        return complex(float((re.lo + re.hi) / 2), float((im.lo + im.hi) / 2))

    @property
    def radius(self) -> Fraction:
        return max(self.re.width, self.im.width) / 2

    def rounded(self, bits: int) -> "ComplexBox":
        with working_precision(bits):
            return ComplexBox(+self.value, bits)


def _as_box(value: Union[ComplexBox, Number]) -> ComplexBox:
    if isinstance(value, ComplexBox):
        return value
    return ComplexBox.point(value)


def horner(coeffs: Sequence[Union[ComplexBox, Number]], z: ComplexBox) -> ComplexBox:
    """Evaluate sum coeffs[j] * z**j; coefficients low to high."""
    acc = ComplexBox.point(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


@dataclass(frozen=True, eq=False)
class RootEnclosure:
    """One isolated root; ``interval`` is a sympy RealInterval or ComplexInterval."""

    interval: Any
    real: bool
    bits: int = 0

    def _precision(self, endpoints: Sequence[Fraction]) -> int:
        magnitude = max(abs(int(x)) for x in endpoints).bit_length()
        return max(DEFAULT_BOX_PRECISION, self.bits + GUARD_BITS + magnitude)

    def box(self) -> ComplexBox:
        i = self.interval
        if self.real:
            lo, hi = to_fraction(i.a), to_fraction(i.b)
            prec = self._precision((lo, hi))
            return ComplexBox.from_intervals(Interval.between(lo, hi, prec), Interval.point(0, prec))
        ends = [to_fraction(e) for e in (i.ax, i.bx, i.ay, i.by)]
        prec = self._precision(ends)
        return ComplexBox.from_intervals(
            Interval.between(ends[0], ends[1], prec), Interval.between(ends[2], ends[3], prec)
        )

    def refined(self, bits: int) -> "RootEnclosure":
        dx = QQ(1, 1 << bits)
        if self.real:
            return RootEnclosure(self.interval.refine_size(dx), True, bits)
        return RootEnclosure(self.interval.refine_size(dx, dx), False, bits)


def isolate_roots(coeffs: Sequence[int]) -> Tuple[RootEnclosure, ...]:
    """Isolate every complex root of a squarefree integer polynomial.

    Real roots come first in ascending order, then each non-real pair as
    (upper half-plane root, its conjugate).
    """
    dense = [ZZ(c) for c in reversed(list(coeffs))]
    while dense and dense[0] == 0:
        dense.pop(0)
    if len(dense) <= 1:
        return ()
    real_roots, complex_roots = dup_isolate_all_roots_sqf(dense, ZZ, blackbox=True)
    enclosures: List[RootEnclosure] = [RootEnclosure(r, True) for r in real_roots]
    for lower, upper in zip(complex_roots[0::2], complex_roots[1::2]):
        enclosures.append(RootEnclosure(upper, False))
        enclosures.append(RootEnclosure(lower, False))
    logger.debug(f"isolated {len(enclosures)} roots of degree {len(dense) - 1} polynomial")
    return tuple(enclosures)


def refine_all(roots: Sequence[RootEnclosure], bits: int) -> Tuple[RootEnclosure, ...]:
    return tuple(r.refined(bits) for r in roots)


def pairwise_disjoint(boxes: Sequence[ComplexBox]) -> bool:
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            if boxes[a].overlaps(boxes[b]):
                return False
    return True


def vandermonde_inverse(nodes: Sequence[ComplexBox]) -> List[List[ComplexBox]]:
    """Enclose the inverse of V[m][l] = nodes[m]**l.

    Entry [l][m] is the coefficient of x**l in the Lagrange basis polynomial
    of node m. Raises ZeroDivisionError when two node boxes cannot be told apart.
    """
    n = len(nodes)
    inverse = [[ComplexBox.point(0)] * n for _ in range(n)]
    for m in range(n):
        numerator: List[ComplexBox] = [ComplexBox.point(1)]
        denominator = ComplexBox.point(1)
        for r in range(n):
            if r == m:
                continue
            shifted = [ComplexBox.point(0)] + numerator
            for l in range(len(numerator)):
                shifted[l] = shifted[l] - numerator[l] * nodes[r]
            numerator = shifted
            denominator = denominator * (nodes[m] - nodes[r])
        scale = denominator.reciprocal()
        for l in range(n):
            inverse[l][m] = numerator[l] * scale
    return inverse


def vandermonde_determinant(nodes: Sequence[ComplexBox]) -> ComplexBox:
    det = ComplexBox.point(1)
    for a in range(len(nodes)):
        for b in range(a + 1, len(nodes)):
            det = det * (nodes[b] - nodes[a])
    return det
