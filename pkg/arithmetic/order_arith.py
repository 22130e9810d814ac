"""Exact arithmetic in a monogenic order Z[theta].

Elements are integer coordinate vectors with respect to the power basis
1, theta, ..., theta**(k-1). The minimal polynomial is given low to high,
so ``[3, -1, 1]`` is y**2 - y + 3.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from sympy import Matrix, Poly, divisors, gcd, symbols
from sympy.matrices.normalforms import hermite_normal_form

from arithmetic.enclosures import (
    ComplexBox,
    RootEnclosure,
    horner,
    isolate_roots,
    pairwise_disjoint,
    vandermonde_determinant,
    vandermonde_inverse,
)
from arithmetic.gns_errors import (
    EnclosureFailure,
    GnsError,
    InternalError,
    NotDivisible,
    NotMonic,
    RationalRootFound,
    ZeroModulus,
)

logger = logging.getLogger(__name__)

DEFAULT_PRECISION_BITS = 64
DEFAULT_PRECISION_CAP = 1 << 14

RationalVector = Tuple[Fraction, ...]
MulMatrix = Tuple[Tuple[int, ...], ...]

_y = symbols("y")


@dataclass(frozen=True)
class OrderElement:
    coords: Tuple[int, ...]

    def __add__(self, other: "OrderElement") -> "OrderElement":
        return OrderElement(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "OrderElement") -> "OrderElement":
        return OrderElement(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "OrderElement":
        return OrderElement(tuple(-a for a in self.coords))

    def scale(self, c: int) -> "OrderElement":
        return OrderElement(tuple(c * a for a in self.coords))

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __str__(self) -> str:
        if len(self.coords) == 1:
            return str(self.coords[0])
        return "(" + ",".join(str(c) for c in self.coords) + ")"


@dataclass(frozen=True)
class ModulusData:
    """Everything needed to divide by and reduce modulo a fixed theta."""

    matrix: MulMatrix
    det: int
    adjugate: MulMatrix
    hnf: MulMatrix
    upper: bool


@dataclass(frozen=True)
class EmbeddingMatrix:
    omega: Tuple[Tuple[ComplexBox, ...], ...]
    inverse: Tuple[Tuple[ComplexBox, ...], ...]
    determinant: ComplexBox


@dataclass(frozen=True)
class Order:
    min_poly: Tuple[int, ...]
    power_table: Tuple[Tuple[int, ...], ...]
    roots: Tuple[RootEnclosure, ...] = field(default=(), compare=False, repr=False)
    precision_cap: int = field(default=DEFAULT_PRECISION_CAP, compare=False, repr=False)

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    def element(self, coords: Sequence[int]) -> OrderElement:
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.degree:
            raise GnsError(f"expected {self.degree} coordinates, got {len(coords)}")
        return OrderElement(coords)

    def from_int(self, c: int) -> OrderElement:
        return OrderElement((int(c),) + (0,) * (self.degree - 1))

    @property
    def zero(self) -> OrderElement:
        return self.from_int(0)

    @property
    def one(self) -> OrderElement:
        return self.from_int(1)

    def basis(self, j: int) -> OrderElement:
        return OrderElement(tuple(1 if i == j else 0 for i in range(self.degree)))

    def mul(self, a: OrderElement, b: OrderElement) -> OrderElement:
        k = self.degree
        product = [0] * (2 * k - 1)
        for i, x in enumerate(a.coords):
            if x:
                for j, y in enumerate(b.coords):
                    product[i + j] += x * y
        result = product[:k]
        for extra, c in enumerate(product[k:]):
            if c:
                row = self.power_table[extra]
                for i in range(k):
                    result[i] += c * row[i]
        return OrderElement(tuple(result))

    def mul_matrix(self, theta: OrderElement) -> MulMatrix:
        columns = [self.mul(theta, self.basis(j)).coords for j in range(self.degree)]
        return tuple(tuple(col[i] for col in columns) for i in range(self.degree))

    def norm(self, theta: OrderElement) -> int:
        return modulus_data(self, theta).det

    def exact_div(self, beta: OrderElement, theta: OrderElement) -> OrderElement:
        data = modulus_data(self, theta)
        if data.det == 0:
            raise ZeroModulus("division by zero")
        quotient = []
        for row in data.adjugate:
            s = sum(a * b for a, b in zip(row, beta.coords))
            q, r = divmod(s, data.det)
            if r:
                raise NotDivisible(f"{beta} is not divisible by {theta}")
            quotient.append(q)
        return OrderElement(tuple(quotient))

    def to_rational_coords(self, beta: OrderElement, theta: OrderElement) -> RationalVector:
        data = modulus_data(self, theta)
        if data.det == 0:
            raise ZeroModulus("division by zero")
        return tuple(
            Fraction(sum(a * b for a, b in zip(row, beta.coords)), data.det) for row in data.adjugate
        )

    def reduce(self, beta: OrderElement, theta: OrderElement) -> Tuple[int, ...]:
        """Canonical representative of beta modulo theta, used as residue-class key."""
        data = modulus_data(self, theta)
        if data.det == 0:
            raise ZeroModulus("reduction modulo zero")
        return _reduce(list(beta.coords), data)

    def residues(self, theta: OrderElement) -> List[OrderElement]:
        data = modulus_data(self, theta)
        if data.det == 0:
            raise ZeroModulus(f"{theta} has norm 0")
        ranges = [range(data.hnf[i][i]) for i in range(self.degree)]
        return [OrderElement(tuple(v)) for v in itertools.product(*ranges)]

    def theta_boxes(self, bits: int = DEFAULT_PRECISION_BITS) -> Tuple[ComplexBox, ...]:
        return _theta_boxes(self, bits)

    def conjugate_values(self, beta: OrderElement, bits: int = DEFAULT_PRECISION_BITS) -> Tuple[ComplexBox, ...]:
        target = Fraction(1, 1 << bits)
        working = bits
        while working <= self.precision_cap:
            values = tuple(horner(beta.coords, z) for z in self.theta_boxes(working))
            if all(v.radius <= target for v in values):
                return values
            working += max(8, max(abs(c) for c in beta.coords).bit_length() + self.degree)
        raise EnclosureFailure(f"conjugates of {beta} not certified to {bits} bits", self.precision_cap)

    def embedding_matrix(self, bits: int = DEFAULT_PRECISION_BITS) -> EmbeddingMatrix:
        working = bits
        while working <= self.precision_cap:
            nodes = self.theta_boxes(working)
            determinant = vandermonde_determinant(nodes)
            if not determinant.contains_zero():
                omega = tuple(tuple(_power(z, j) for j in range(self.degree)) for z in nodes)
                inverse = vandermonde_inverse(nodes)
                return EmbeddingMatrix(omega, tuple(tuple(row) for row in inverse), determinant)
            working *= 2
        raise EnclosureFailure("embedding matrix is not certified invertible", self.precision_cap)


def _power(z: ComplexBox, j: int) -> ComplexBox:
    acc = ComplexBox.point(1)
    for _ in range(j):
        acc = acc * z
    return acc


def _reduce(v: List[int], data: ModulusData) -> Tuple[int, ...]:
    k = len(v)
    order = range(k - 1, -1, -1) if data.upper else range(k)
    for i in order:
        pivot = data.hnf[i][i]
        t = v[i] // pivot
        if t:
            for r in range(k):
                v[r] -= t * data.hnf[r][i]
    return tuple(v)


@lru_cache(maxsize=4096)
def modulus_data(order: Order, theta: OrderElement) -> ModulusData:
    matrix = order.mul_matrix(theta)
    m = Matrix(matrix)
    det = int(m.det(method="bareiss"))
    k = order.degree
    if det == 0:
        identity = tuple(tuple(int(i == j) for j in range(k)) for i in range(k))
        return ModulusData(matrix, 0, identity, identity, True)
    adjugate = tuple(tuple(int(x) for x in m.adjugate().row(i)) for i in range(k))
    h = hermite_normal_form(m)
    hnf = [[int(h[i, j]) for j in range(h.cols)] for i in range(h.rows)]
    if h.cols != k:
        raise InternalError(f"unexpected Hermite normal form shape {h.shape} for {theta}")
    for j in range(k):
        if hnf[j][j] < 0:
            for i in range(k):
                hnf[i][j] = -hnf[i][j]
    upper = all(hnf[i][j] == 0 for i in range(k) for j in range(i))
    lower = all(hnf[i][j] == 0 for i in range(k) for j in range(i + 1, k))
    if not (upper or lower):
        raise InternalError(f"Hermite normal form of {theta} is not triangular")
    data = ModulusData(matrix, det, adjugate, tuple(tuple(row) for row in hnf), upper)
    diagonal = 1
    for i in range(k):
        diagonal *= data.hnf[i][i]
    if diagonal != abs(det):
        raise InternalError(f"Hermite normal form of {theta} has index {diagonal}, expected {abs(det)}")
    for j in range(k):
        if any(_reduce([row[j] for row in matrix], data)):
            raise InternalError(f"Hermite normal form of {theta} does not span its lattice")
    return data


@lru_cache(maxsize=256)
def _theta_boxes(order: Order, bits: int) -> Tuple[ComplexBox, ...]:
    if order.degree == 1:
        return (ComplexBox.point(-order.min_poly[0]),)
    return tuple(r.refined(bits).box() for r in order.roots)


def _build_power_table(f: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
    k = len(f) - 1
    current = [-c for c in f[:k]]
    table = [tuple(current)]
    for _ in range(k - 2):
        overflow = current[-1]
        current = [0] + current[:-1]
        for i in range(k):
            current[i] -= overflow * f[i]
        table.append(tuple(current))
    return tuple(table)


def _rational_root(f: Sequence[int]) -> Optional[int]:
    if f[0] == 0:
        return 0
    for d in divisors(abs(f[0])):
        for candidate in (d, -d):
            if sum(c * candidate ** j for j, c in enumerate(f)) == 0:
                return candidate
    return None


def make_order(f: Sequence[int], precision_cap: int = DEFAULT_PRECISION_CAP) -> Order:
    f = tuple(int(c) for c in f)
    if len(f) < 2:
        raise GnsError("minimal polynomial must have degree at least 1")
    if f[-1] != 1:
        raise NotMonic(f"minimal polynomial {list(f)} is not monic")
    k = len(f) - 1
    table = _build_power_table(f) if k >= 2 else ()
    if k == 1:
        logger.info(f"Order Z (theta = {-f[0]})")
        return Order(f, table, (), precision_cap)

    root = _rational_root(f)
    if root is not None:
        raise RationalRootFound(root)
    poly = Poly(list(reversed(f)), _y)
    if gcd(poly, poly.diff(_y)).degree() > 0:
        raise EnclosureFailure(f"minimal polynomial {list(f)} has repeated roots")

    roots = isolate_roots(f)
    bits = 8
    while not pairwise_disjoint([r.refined(bits).box() for r in roots]):
        bits *= 2
        if bits > precision_cap:
            raise EnclosureFailure("conjugates of theta could not be separated", precision_cap)
    logger.info(f"Order Z[theta] with minimal polynomial {list(f)}, degree {k}")
    return Order(f, table, roots, precision_cap)
