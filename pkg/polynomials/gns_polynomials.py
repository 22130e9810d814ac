import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Sequence, Tuple

from sympy import Poly, expand, gcd, resultant, symbols

from arithmetic.enclosures import ComplexBox, horner, isolate_roots
from arithmetic.gns_errors import EnclosureFailure, NotApplicable, NotMonic
from arithmetic.order_arith import DEFAULT_PRECISION_BITS, DEFAULT_PRECISION_CAP, Order, OrderElement

logger = logging.getLogger(__name__)

_x, _y = symbols("x y")


@dataclass(frozen=True)
class OPoly:
    """Polynomial over an order; coeffs[j] is the coefficient of x**j."""

    order: Order
    coeffs: Tuple[OrderElement, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> OrderElement:
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return self.order.zero

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == self.order.one

    def key(self, length: int) -> Tuple[int, ...]:
        """Flat coordinate tuple of the first ``length`` coefficients."""
        flat: List[int] = []
        for j in range(length):
            flat.extend(self.coeff(j).coords)
        return tuple(flat)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"{c}*x^{j}" for j, c in enumerate(self.coeffs) if not c.is_zero())


@dataclass(frozen=True)
class IntPoly:
    """Integer polynomial, coefficients low to high."""

    coeffs: Tuple[int, ...]

    @classmethod
    def of(cls, coeffs: Sequence[int]) -> "IntPoly":
        coeffs = [int(c) for c in coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def to_sympy(self) -> Poly:
        return Poly(list(reversed(self.coeffs)) or [0], _x)

    def is_squarefree(self) -> bool:
        p = self.to_sympy()
        return p.degree() <= 0 or gcd(p, p.diff(_x)).degree() == 0

    def __str__(self) -> str:
        return " ".join(str(c) for c in self.coeffs)


class Expansivity(Enum):
    EXPANSIVE = "expansive"
    NOT_EXPANSIVE = "not_expansive"
    INCONCLUSIVE = "inconclusive"


def make_poly(order: Order, coeffs: Sequence[OrderElement]) -> OPoly:
    coeffs = list(coeffs)
    while coeffs and coeffs[-1].is_zero():
        coeffs.pop()
    return OPoly(order, tuple(coeffs))


def from_coordinates(order: Order, coeffs: Sequence[Sequence[int]]) -> OPoly:
    return make_poly(order, [order.element(c) for c in coeffs])


def from_ints(order: Order, coeffs: Sequence[int]) -> OPoly:
    return make_poly(order, [order.from_int(c) for c in coeffs])


def constant(order: Order, c: OrderElement) -> OPoly:
    return make_poly(order, [c])


def x_power(order: Order, n: int) -> OPoly:
    return make_poly(order, [order.zero] * n + [order.one])


def poly_add(a: OPoly, b: OPoly) -> OPoly:
    n = max(len(a.coeffs), len(b.coeffs))
    return make_poly(a.order, [a.coeff(j) + b.coeff(j) for j in range(n)])


def poly_neg(a: OPoly) -> OPoly:
    return OPoly(a.order, tuple(-c for c in a.coeffs))


def poly_sub(a: OPoly, b: OPoly) -> OPoly:
    return poly_add(a, poly_neg(b))


def poly_scale(a: OPoly, beta: OrderElement) -> OPoly:
    return make_poly(a.order, [a.order.mul(beta, c) for c in a.coeffs])


def poly_shift(a: OPoly, s: int) -> OPoly:
    if a.is_zero():
        return a
    return OPoly(a.order, (a.order.zero,) * s + a.coeffs)


def poly_mul(a: OPoly, b: OPoly) -> OPoly:
    if a.is_zero() or b.is_zero():
        return make_poly(a.order, [])
    order = a.order
    out = [order.zero] * (len(a.coeffs) + len(b.coeffs) - 1)
    for i, x in enumerate(a.coeffs):
        if x.is_zero():
            continue
        for j, y in enumerate(b.coeffs):
            out[i + j] = out[i + j] + order.mul(x, y)
    return make_poly(order, out)


def poly_divmod(a: OPoly, p: OPoly) -> Tuple[OPoly, OPoly]:
    if not p.is_monic():
        raise NotMonic(f"cannot reduce modulo non-monic {p}")
    order = a.order
    n = p.degree
    rem = list(a.coeffs)
    quot = [order.zero] * max(len(rem) - n, 0)
    for top in range(len(rem) - 1, n - 1, -1):
        c = rem[top]
        if c.is_zero():
            continue
        quot[top - n] = c
        for j, pc in enumerate(p.coeffs):
            rem[top - n + j] = rem[top - n + j] - order.mul(c, pc)
    return make_poly(order, quot), make_poly(order, rem[:n])


def poly_rem(a: OPoly, p: OPoly) -> OPoly:
    return poly_divmod(a, p)[1]


def evaluate(a: OPoly, beta: OrderElement) -> OrderElement:
    order = a.order
    acc = order.zero
    for c in reversed(a.coeffs):
        acc = order.mul(acc, beta) + c
    return acc


def coefficient_conjugates(a: OPoly, bits: int = DEFAULT_PRECISION_BITS) -> List[List[ComplexBox]]:
    """Enclosures of a^{(i)}'s coefficients, indexed [embedding][power]."""
    order = a.order
    conj = [order.conjugate_values(c, bits) for c in a.coeffs]
    return [[values[i] for values in conj] for i in range(order.degree)]


def evaluate_embedded(a: OPoly, embedding: int, z: ComplexBox, bits: int = DEFAULT_PRECISION_BITS) -> ComplexBox:
    if a.is_zero():
        return ComplexBox.point(0)
    return horner(coefficient_conjugates(a, bits)[embedding], z)


def height(a: OPoly, bits: int = DEFAULT_PRECISION_BITS) -> Fraction:
    best = Fraction(0)
    for values in (a.order.conjugate_values(c, bits) for c in a.coeffs):
        for v in values:
            best = max(best, v.abs_upper(bits))
    return best


def conjugate_product(p: OPoly) -> IntPoly:
    """Integer polynomial prod_i p^{(i)}(x), via a resultant in theta."""
    if not p.is_monic():
        raise NotMonic(f"conjugate product needs a monic polynomial, got {p}")
    order = p.order
    if order.degree == 1:
        return IntPoly.of([c.coords[0] for c in p.coeffs])
    f_expr = sum(c * _y ** j for j, c in enumerate(order.min_poly))
    p_expr = sum(
        sum(c * _y ** j for j, c in enumerate(coeff.coords)) * _x ** l
        for l, coeff in enumerate(p.coeffs)
    )
    res = Poly(expand(resultant(f_expr, p_expr, _y)), _x)
    coeffs = [int(c) for c in reversed(res.all_coeffs())]
    if coeffs[-1] < 0:
        coeffs = [-c for c in coeffs]
    product = IntPoly.of(coeffs)
    if product.degree != order.degree * p.degree or product.coeffs[-1] != 1:
        raise NotMonic(f"conjugate product {product} is not monic of degree {order.degree * p.degree}")
    return product


def is_expansive(F: IntPoly, precision_cap: int = DEFAULT_PRECISION_CAP) -> Expansivity:
    if F.degree <= 0:
        return Expansivity.EXPANSIVE
    if F.coeffs[0] == 0:
        return Expansivity.NOT_EXPANSIVE
    g = gcd(F.to_sympy(), IntPoly.of(list(reversed(F.coeffs))).to_sympy())
    if g.degree() > 0:
        logger.debug(f"{F} shares a factor with its reciprocal, not expansive")
        return Expansivity.NOT_EXPANSIVE
    squarefree = F.to_sympy().sqf_part()
    roots = isolate_roots([int(c) for c in reversed(squarefree.all_coeffs())])
    for root in roots:
        bits = 16
        while True:
            modulus = root.refined(bits).box().abs_squared()
            if modulus.lo > 1:
                break
            if modulus.hi < 1:
                return Expansivity.NOT_EXPANSIVE
            bits *= 2
            if bits > precision_cap:
                logger.warning(f"expansivity of {F} undecided at {precision_cap} bits")
                return Expansivity.INCONCLUSIVE
    return Expansivity.EXPANSIVE


def _snap_integer_root(F: IntPoly, box: ComplexBox) -> ComplexBox:
    # rational roots of a monic integer polynomial are integers
    if box.im.lo != 0 or box.im.hi != 0:
        return box
    for c in range(math.ceil(box.re.lo), math.floor(box.re.hi) + 1):
        if sum(a * c ** j for j, a in enumerate(F.coeffs)) == 0:
            return ComplexBox.point(c)
    return box


def conjugate_roots(
    p: OPoly, bits: int = DEFAULT_PRECISION_BITS, precision_cap: int = DEFAULT_PRECISION_CAP
) -> Tuple[Tuple[ComplexBox, ...], ...]:
    """Root enclosures alpha_{il} of every conjugate polynomial p^{(i)}.

    Roots of the conjugate product are matched to embeddings by excluding
    every embedding whose p^{(i)} is certified nonzero on the root box.
    """
    order = p.order
    k, n = order.degree, p.degree
    product = conjugate_product(p)
    if not product.is_squarefree():
        raise NotApplicable(f"conjugate product {product} has repeated roots")
    roots = isolate_roots(product.coeffs)
    working = bits
    while working <= precision_cap:
        boxes = [_snap_integer_root(product, r.refined(working).box()) for r in roots]
        if k == 1:
            return (tuple(boxes),)
        conj = coefficient_conjugates(p, working)
        assignment = []
        for box in boxes:
            candidates = [i for i in range(k) if horner(conj[i], box).contains_zero()]
            if len(candidates) != 1:
                break
            assignment.append(candidates[0])
        if len(assignment) == len(boxes) and all(assignment.count(i) == n for i in range(k)):
            return tuple(tuple(b for b, a in zip(boxes, assignment) if a == i) for i in range(k))
        logger.debug(f"root pairing of {p} ambiguous at {working} bits")
        working *= 2
    raise EnclosureFailure(f"could not match the roots of {product} to embeddings", precision_cap)
