"""Backward division dynamics and the certified finiteness decision.

States are polynomials b with deg b < n = deg p. Internally a state is the
flat tuple of the coordinates of b_0, ..., b_{n-1}, which keeps the orbit
memo cheap to hash.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from sympy import Matrix

from arithmetic.enclosures import ComplexBox, vandermonde_inverse
from arithmetic.gns_errors import (
    EnclosureFailure,
    GnsError,
    InternalError,
    NotApplicable,
    NotMonic,
    StepCapExceeded,
    ZeroModulus,
)
from arithmetic.order_arith import DEFAULT_PRECISION_BITS, DEFAULT_PRECISION_CAP, Order, OrderElement
from digits.digit_sets import DigitSet, digit_set
from domains.fundamental_domains import FundamentalDomain
from polynomials.gns_polynomials import (
    Expansivity,
    IntPoly,
    OPoly,
    conjugate_product,
    conjugate_roots,
    constant,
    evaluate_embedded,
    is_expansive,
    make_poly,
    poly_add,
    poly_mul,
    poly_neg,
    poly_rem,
    poly_sub,
    x_power,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP_CAP = 100_000
MAX_CONTRACTION_POWER = 256

State = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class GnsInstance:
    order: Order
    domain: FundamentalDomain
    p: OPoly
    digits: DigitSet
    product: IntPoly
    bits: int = DEFAULT_PRECISION_BITS
    precision_cap: int = DEFAULT_PRECISION_CAP
    step_cap: int = DEFAULT_STEP_CAP

    @property
    def n(self) -> int:
        return self.p.degree

    @property
    def width(self) -> int:
        return self.n * self.order.degree

    @cached_property
    def expansivity(self) -> Expansivity:
        return is_expansive(self.product, self.precision_cap)

    @cached_property
    def squarefree(self) -> bool:
        return self.product.is_squarefree()

    def state(self, b: OPoly) -> State:
        if b.degree >= self.n:
            raise GnsError(f"state {b} has degree >= {self.n}")
        return b.key(self.n)

    def poly(self, state: State) -> OPoly:
        k = self.order.degree
        return make_poly(self.order, [OrderElement(state[l * k:(l + 1) * k]) for l in range(self.n)])

    def describe(self) -> str:
        return f"p = {self.p} over {self.domain.describe()}"


def make_instance(
    order: Order,
    domain: FundamentalDomain,
    p: OPoly,
    bits: int = DEFAULT_PRECISION_BITS,
    precision_cap: int = DEFAULT_PRECISION_CAP,
    step_cap: int = DEFAULT_STEP_CAP,
) -> GnsInstance:
    if p.degree < 1 or not p.is_monic():
        raise NotMonic(f"{p} must be monic of degree at least 1")
    p0 = p.coeff(0)
    if order.norm(p0) == 0:
        raise ZeroModulus(f"p(0) = {p0} has norm 0")
    digits = digit_set(order, domain, p0)
    product = conjugate_product(p)
    logger.info(f"GNS instance p = {p} over {domain.describe()}, {len(digits)} digits")
    return GnsInstance(order, domain, p, digits, product, bits, precision_cap, step_cap)


def _step(inst: GnsInstance, state: State) -> Tuple[OrderElement, OrderElement, State]:
    k, n = inst.order.degree, inst.n
    d, q = inst.digits.digit_for(OrderElement(state[:k]))
    nxt: List[int] = []
    for l in range(n - 1):
        qp = inst.order.mul(q, inst.p.coeffs[l + 1]).coords
        base = (l + 1) * k
        nxt.extend(state[base + j] - qp[j] for j in range(k))
    nxt.extend(-c for c in q.coords)
    return d, q, tuple(nxt)


def backward_step(inst: GnsInstance, b: OPoly) -> Tuple[OrderElement, OPoly, OrderElement]:
    """(d0, b', q) with b = d0 + x*b' + q*p."""
    d, q, nxt = _step(inst, inst.state(b))
    return d, inst.poly(nxt), q


@dataclass(frozen=True)
class Expansion:
    digits: Tuple[OrderElement, ...]

    @property
    def length(self) -> int:
        return len(self.digits)


@dataclass(frozen=True)
class NonTerminating:
    prefix: Tuple[OrderElement, ...]
    cycle: Tuple[OPoly, ...]


def expand(inst: GnsInstance, a: OPoly, step_cap: Optional[int] = None) -> Union[Expansion, NonTerminating]:
    cap = step_cap if step_cap is not None else inst.step_cap
    state = inst.state(poly_rem(a, inst.p))
    digits: List[OrderElement] = []
    seen: Dict[State, int] = {state: 0}
    trail = [state]
    while any(state):
        if len(digits) >= cap:
            raise StepCapExceeded(cap)
        d, _, state = _step(inst, state)
        digits.append(d)
        if state in seen:
            cycle = tuple(inst.poly(s) for s in trail[seen[state]:])
            return NonTerminating(tuple(digits), cycle)
        seen[state] = len(trail)
        trail.append(state)
    total = make_poly(inst.order, digits)
    if not poly_rem(poly_sub(total, a), inst.p).is_zero():
        raise InternalError(f"expansion of {a} does not reproduce it modulo p")
    return Expansion(tuple(digits))


@dataclass(frozen=True)
class StateBound:
    """C and the coordinate box B searched by decide."""

    C: Fraction
    box: Tuple[Tuple[int, int], ...]
    method: str
    value_bounds: Tuple[Tuple[Fraction, ...], ...] = ()
    alphas: Tuple[Tuple[ComplexBox, ...], ...] = field(default=(), repr=False)

    @property
    def size(self) -> int:
        return math.prod(hi - lo + 1 for lo, hi in self.box)


def _digit_height(inst: GnsInstance, bits: int) -> Fraction:
    best = Fraction(0)
    for d in inst.digits.elements:
        for v in inst.order.conjugate_values(d, bits):
            best = max(best, v.abs_upper(bits))
    return best


def _conjugate_bound(inst: GnsInstance, bits: int) -> StateBound:
    order = inst.order
    k, n = order.degree, inst.n
    working = bits
    while True:
        alphas = conjugate_roots(inst.p, working, inst.precision_cap)
        lows = [[a.abs_lower(working) for a in row] for row in alphas]
        if all(low > 1 for row in lows for low in row):
            break
        working *= 2
        if working > inst.precision_cap:
            raise EnclosureFailure("roots of p are not certified outside the unit disk", inst.precision_cap)
    digit_max = _digit_height(inst, working)
    values = tuple(tuple(digit_max * low / (low - 1) + 1 for low in row) for row in lows)

    coefficient_bounds = []
    for i in range(k):
        try:
            w = vandermonde_inverse(alphas[i])
        except ZeroDivisionError:
            raise EnclosureFailure(f"roots of p^({i}) are not separated")
        coefficient_bounds.append(
            [sum(w[l][m].abs_upper(working) * values[i][m] for m in range(n)) for l in range(n)]
        )

    inverse = order.embedding_matrix(working).inverse
    box = []
    for l in range(n):
        for j in range(k):
            bound = sum(inverse[j][i].abs_upper(working) * coefficient_bounds[i][l] for i in range(k))
            r = math.floor(bound)
            box.append((-r, r))
    C = max(b for row in coefficient_bounds for b in row)
    return StateBound(C, tuple(box), "conjugate", values, alphas)


def _shift_matrix(inst: GnsInstance) -> List[List[Fraction]]:
    """Inverse of multiplication by x on Q (x) O[x]/(p), flat basis omega_j x^l."""
    order = inst.order
    k, n = order.degree, inst.n
    N = k * n
    X = [[0] * N for _ in range(N)]
    for l in range(n):
        for j in range(k):
            col = l * k + j
            if l < n - 1:
                X[(l + 1) * k + j][col] = 1
                continue
            for m in range(n):
                coords = order.mul(order.basis(j), inst.p.coeffs[m]).coords
                for r in range(k):
                    X[m * k + r][col] = -coords[r]
    inv = Matrix(X).inv()
    return [[Fraction(int(inv[r, c].p), int(inv[r, c].q)) for c in range(N)] for r in range(N)]


def _matmul(a: List[List[Fraction]], b: List[List[Fraction]]) -> List[List[Fraction]]:
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def _row_norm(a: List[List[Fraction]]) -> Fraction:
    return max(sum(abs(x) for x in row) for row in a)


def _contraction_bound(inst: GnsInstance) -> StateBound:
    A = _shift_matrix(inst)
    digit_max = max(max(abs(c) for c in d.coords) for d in inst.digits.elements)
    power = A
    total = Fraction(0)
    for m in range(1, MAX_CONTRACTION_POWER + 1):
        rho = _row_norm(power)
        total += rho * digit_max
        if rho < 1:
            M = total / (1 - rho)
            r = math.floor(M)
            logger.debug(f"contraction bound with m = {m}, rho = {float(rho):.4f}, M = {float(M):.2f}")
            return StateBound(M, tuple((-r, r) for _ in range(inst.width)), "contraction")
        power = _matmul(power, A)
    raise EnclosureFailure(f"no contracting power of x^-1 up to {MAX_CONTRACTION_POWER}")


def state_bound(inst: GnsInstance, bits: Optional[int] = None) -> StateBound:
    if inst.expansivity is not Expansivity.EXPANSIVE:
        raise NotApplicable(f"conjugate product {inst.product} is not certified expansive")
    return _state_bound(inst, bits or inst.bits)


@lru_cache(maxsize=256)
def _state_bound(inst: GnsInstance, bits: int) -> StateBound:
    if inst.squarefree:
        bound = _conjugate_bound(inst, bits)
    else:
        bound = _contraction_bound(inst)
    logger.debug(f"state bound C = {float(bound.C):.4f}, {bound.size} states ({bound.method})")
    return bound


class Verdict(Enum):
    FINITENESS_HOLDS = "FinitenessHolds"
    FINITENESS_FAILS = "FinitenessFails"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Witness:
    period: int
    states: Tuple[OPoly, ...]
    digits: Tuple[OrderElement, ...]
    q1: OPoly
    q2: OPoly


@dataclass(frozen=True)
class DecisionReport:
    verdict: Verdict
    reason: Optional[str] = None
    bound: Optional[StateBound] = None
    states_checked: int = 0
    states_pruned: int = 0
    cycles: Tuple[Tuple[OPoly, ...], ...] = ()
    witness: Optional[Witness] = None
    precision: Optional[int] = None

    @property
    def cycles_found(self) -> int:
        return len(self.cycles)


def witness_certificate(inst: GnsInstance, cycle: Sequence[OPoly]) -> Witness:
    states = [inst.state(b) for b in cycle]
    if not states or not any(states[0]):
        raise GnsError("witness needs a nonzero cycle")
    h = len(states)
    digits, quotients = [], []
    for j, s in enumerate(states):
        d, q, nxt = _step(inst, s)
        if nxt != states[(j + 1) % h]:
            raise GnsError(f"state {j} of the cycle does not map to its successor")
        digits.append(d)
        quotients.append(q)
    if all(d.is_zero() for d in digits):
        raise GnsError("degenerate witness: all digits are zero")
    order = inst.order
    b0 = inst.poly(states[0])
    r = make_poly(order, quotients)
    q1 = poly_neg(b0)
    q2 = poly_neg(r)
    lhs = make_poly(order, digits)
    x_h_minus_1 = poly_sub(x_power(order, h), constant(order, order.one))
    rhs = poly_add(poly_mul(x_h_minus_1, q1), poly_mul(q2, inst.p))
    if lhs != rhs:
        raise InternalError(f"witness identity fails for the cycle starting at {b0}")
    return Witness(h, tuple(inst.poly(s) for s in states), tuple(digits), q1, q2)


def _canonical_cycle(cycle: List[State]) -> Tuple[State, ...]:
    start = cycle.index(min(cycle))
    return tuple(cycle[start:] + cycle[:start])


def _value_weights(inst: GnsInstance, bound: StateBound, bits: int) -> List[List[List[ComplexBox]]]:
    """w[i][l_root][flat] encloses theta_i^j * alpha_{i,l_root}^l for flat = l*k + j."""
    order = inst.order
    k, n = order.degree, inst.n
    thetas = order.theta_boxes(bits)
    weights = []
    for i in range(k):
        per_root = []
        for alpha in bound.alphas[i]:
            row = []
            alpha_power = ComplexBox.point(1)
            for _ in range(n):
                theta_power = ComplexBox.point(1)
                for _ in range(k):
                    row.append((alpha_power * theta_power).rounded(bits))
                    theta_power = theta_power * thetas[i]
                alpha_power = alpha_power * alpha
            per_root.append(row)
        weights.append(per_root)
    return weights


def candidate_states(inst: GnsInstance, bound: StateBound, bits: int, prune: bool = True) -> Iterator[State]:
    """States of the box that may satisfy every value bound |b^{(i)}(alpha_il)| <= V_il.

    The constant coordinate has weight exactly 1 in every value, so for each
    choice of the remaining coordinates its admissible range is an interval.
    """
    ranges = [range(lo, hi + 1) for lo, hi in bound.box]
    if not prune or bound.method != "conjugate":
        yield from itertools.product(*ranges)
        return
    weights = _value_weights(inst, bound, bits)
    first_lo, first_hi = bound.box[0]
    for prefix in itertools.product(*ranges[1:]):
        low, high = first_lo, first_hi
        for i, per_root in enumerate(weights):
            for m, row in enumerate(per_root):
                rest = ComplexBox.point(0)
                for c, w in zip(prefix, row[1:]):
                    if c:
                        rest = rest + w * c
                limit = bound.value_bounds[i][m]
                if rest.im.lo > limit or rest.im.hi < -limit:
                    high = low - 1
                    break
                low = max(low, math.ceil(-limit - rest.re.hi))
                high = min(high, math.floor(limit - rest.re.lo))
            if high < low:
                break
        for c0 in range(low, high + 1):
            yield (c0,) + prefix


def _classify(inst: GnsInstance, starts, status: Dict[State, bool], cycles: Dict[Tuple[State, ...], None]) -> int:
    zero = (0,) * inst.width
    status.setdefault(zero, True)
    count = 0
    for start in starts:
        count += 1
        if start in status:
            continue
        path: List[State] = []
        index: Dict[State, int] = {}
        s = start
        while s not in status:
            if s in index:
                cycles.setdefault(_canonical_cycle(path[index[s]:]), None)
                for t in path:
                    status[t] = False
                break
            index[s] = len(path)
            path.append(s)
            if len(path) > inst.step_cap:
                raise StepCapExceeded(inst.step_cap)
            s = _step(inst, s)[2]
        else:
            result = status[s]
            for t in path:
                status[t] = result
    return count


def decide(inst: GnsInstance, bits: Optional[int] = None, prune: bool = True) -> DecisionReport:
    bits = bits or inst.bits
    expansivity = inst.expansivity
    if expansivity is Expansivity.INCONCLUSIVE:
        return DecisionReport(Verdict.INCONCLUSIVE, "expansivity_undecided", precision=inst.precision_cap)
    if expansivity is Expansivity.NOT_EXPANSIVE:
        logger.info(f"{inst.describe()}: conjugate product {inst.product} is not expansive")
        return DecisionReport(Verdict.FINITENESS_FAILS, "not_expansive", precision=bits)
    if abs(inst.order.norm(inst.p.coeff(0))) == 1:
        return DecisionReport(Verdict.FINITENESS_FAILS, "degenerate_modulus", precision=bits)
    try:
        bound = state_bound(inst, bits)
    except EnclosureFailure as e:
        logger.warning(f"{inst.describe()}: {e}")
        return DecisionReport(Verdict.INCONCLUSIVE, "enclosure_failure", precision=inst.precision_cap)

    status: Dict[State, bool] = {}
    found: Dict[Tuple[State, ...], None] = {}
    traversed = _classify(inst, candidate_states(inst, bound, bits, prune), status, found)
    pruned = bound.size - traversed
    cycles = tuple(tuple(inst.poly(s) for s in c) for c in found)
    if not cycles:
        logger.info(f"{inst.describe()}: finiteness holds ({bound.size} states, {pruned} pruned)")
        return DecisionReport(Verdict.FINITENESS_HOLDS, None, bound, bound.size, pruned, (), None, bits)
    witness = witness_certificate(inst, cycles[0])
    logger.info(f"{inst.describe()}: {len(cycles)} cycles, first of period {witness.period}")
    return DecisionReport(Verdict.FINITENESS_FAILS, "cycle", bound, bound.size, pruned, cycles, witness, bits)


@dataclass(frozen=True)
class LengthBound:
    h: int
    C: int

    @property
    def total(self) -> int:
        return self.h + self.C


class _LengthTable:
    """Expansion lengths of the states that can satisfy the value bounds."""

    def __init__(self, inst: GnsInstance, bound: StateBound, bits: int):
        self.lengths: Dict[State, int] = {(0,) * inst.width: 0}
        self.C = 0
        for start in candidate_states(inst, bound, bits):
            path = []
            s = start
            while s not in self.lengths:
                path.append(s)
                if len(path) > inst.step_cap:
                    raise StepCapExceeded(inst.step_cap)
                s = _step(inst, s)[2]
            base = self.lengths[s]
            for t in reversed(path):
                base += 1
                self.lengths[t] = base
            self.C = max(self.C, self.lengths[start])


@lru_cache(maxsize=32)
def _length_table(inst: GnsInstance, bits: int) -> _LengthTable:
    report = decide(inst, bits)
    if report.verdict is not Verdict.FINITENESS_HOLDS:
        raise NotApplicable(f"length bound needs the finiteness property, got {report.verdict.value}")
    return _LengthTable(inst, report.bound, bits)


def length_bound(inst: GnsInstance, a: OPoly, bits: Optional[int] = None) -> LengthBound:
    bits = bits or inst.bits
    if not inst.squarefree:
        raise NotApplicable(f"conjugate product {inst.product} is not squarefree")
    table = _length_table(inst, bits)
    bound = state_bound(inst, bits)
    reduced = poly_rem(a, inst.p)
    checks = []
    for i, roots in enumerate(bound.alphas):
        for alpha in roots:
            value = evaluate_embedded(reduced, i, alpha, bits).abs_upper(bits)
            checks.append((value, alpha.abs_lower(bits)))
    h = 0
    while not all(value <= low ** h for value, low in checks):
        h += 1
    return LengthBound(h, table.C)


@dataclass(frozen=True)
class OracleReport:
    holds: bool
    checked: int
    counterexample: Optional[OPoly] = None
    cycle: Tuple[OPoly, ...] = ()


def brute_force_finiteness(
    inst: GnsInstance, radius: int, step_cap: int = 10_000, all_states: bool = False
) -> OracleReport:
    """Forward search: expand every small element and look for a cycle."""
    order = inst.order
    k = order.degree
    width = inst.width if all_states else k
    checked = 0
    for coords in itertools.product(range(-radius, radius + 1), repeat=width):
        a = inst.poly(coords + (0,) * (inst.width - width))
        checked += 1
        try:
            result = expand(inst, a, step_cap)
        except StepCapExceeded:
            logger.info(f"oracle: expansion of {a} exceeded {step_cap} steps")
            return OracleReport(False, checked, a)
        if isinstance(result, NonTerminating):
            return OracleReport(False, checked, a, result.cycle)
    return OracleReport(True, checked)
