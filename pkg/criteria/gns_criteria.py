"""Sufficient and necessary finiteness criteria realized as finite searches."""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from arithmetic.gns_errors import GnsError, TooLarge, UnsupportedDomain, ZeroModulus
from arithmetic.order_arith import Order, OrderElement
from digits.digit_sets import digit_set
from domains.fundamental_domains import FundamentalDomain, HypothesisFlags, generates_semigroup
from engine.gns_engine import GnsInstance, Verdict, Witness, decide, make_instance, witness_certificate
from polynomials.gns_polynomials import (
    OPoly,
    constant,
    evaluate,
    make_poly,
    poly_add,
    poly_mul,
    poly_sub,
)

logger = logging.getLogger(__name__)

DEFAULT_Z_CAP = 1_000_000


def delta_set(order: Order, domain: FundamentalDomain, with_unit: bool = False) -> List[OrderElement]:
    delta = [order.element(v) for v in domain.neighbor_superset().vectors]
    if with_unit and order.one not in delta:
        delta.append(order.one)
    return delta


def validate_delta(order: Order, delta: Sequence[OrderElement]) -> List[OrderElement]:
    delta = list(dict.fromkeys(delta))
    if order.zero not in delta:
        raise GnsError("delta must contain 0")
    if not generates_semigroup([d.coords for d in delta]):
        raise GnsError("delta does not generate the order as a semigroup")
    return delta


def z_set(p: OPoly, delta: Sequence[OrderElement], size_cap: int = DEFAULT_Z_CAP) -> List[OrderElement]:
    """All sums delta_1 p_1 + ... + delta_n p_n with p_n = 1, sorted by coordinates."""
    order = p.order
    n = p.degree
    if len(delta) ** n > size_cap:
        raise TooLarge(f"|delta|^n = {len(delta)}^{n} exceeds the cap {size_cap}")
    sums = {order.zero}
    for j in range(1, n + 1):
        pj = p.coeff(j)
        products = {order.mul(d, pj) for d in delta}
        sums = {s + t for s in sums for t in products}
    return sorted(sums, key=lambda e: e.coords)


@dataclass(frozen=True)
class ConditionOutcome:
    passed: bool
    counterexample: Optional[Tuple[OrderElement, ...]] = None


@dataclass(frozen=True)
class DominantReport:
    delta: Tuple[OrderElement, ...]
    z_size: int
    conditions: Tuple[Tuple[str, ConditionOutcome], ...]

    @property
    def passed(self) -> bool:
        return all(outcome.passed for _, outcome in self.conditions)

    def failed(self) -> List[str]:
        return [name for name, outcome in self.conditions if not outcome.passed]


def check_dominant(
    inst: GnsInstance, delta: Optional[Sequence[OrderElement]] = None, size_cap: int = DEFAULT_Z_CAP
) -> DominantReport:
    order = inst.order
    if delta is None:
        delta = delta_set(order, inst.domain)
    else:
        delta = validate_delta(order, delta)
    zeta = z_set(inst.p, delta, size_cap)
    members = set(delta)
    digits = inst.digits
    zero, minus_one = order.zero, order.from_int(-1)

    def quotient(e: OrderElement) -> OrderElement:
        return digits.digit_for(e)[1]

    first = ConditionOutcome(True)
    for z in zeta:
        bad = next((d for d in digits.elements if quotient(z + d) not in members), None)
        if bad is not None:
            first = ConditionOutcome(False, (z, bad))
            break

    second = ConditionOutcome(True)
    for z in zeta:
        if quotient(z) not in (zero, minus_one):
            second = ConditionOutcome(False, (z,))
            break

    third = ConditionOutcome(True)
    n = inst.n
    for size in range(n + 1):
        for subset in itertools.combinations(range(1, n + 1), size):
            s = zero
            for j in subset:
                s = s + inst.p.coeff(j)
            if quotient(s) != zero:
                third = ConditionOutcome(False, (s,))
                break
        if not third.passed:
            break

    report = DominantReport(tuple(delta), len(zeta), (("i", first), ("ii", second), ("iii", third)))
    logger.debug(f"dominant condition for {inst.describe()}: failed {report.failed()}")
    return report


def taylor_shift(p: OPoly, alpha: OrderElement, sign: int = 1) -> OPoly:
    """p(x + sign*alpha) by Horner composition."""
    order = p.order
    shift = alpha if sign > 0 else -alpha
    linear = make_poly(order, [shift, order.one])
    result = make_poly(order, [])
    for c in reversed(p.coeffs):
        result = poly_add(poly_mul(result, linear), constant(order, c))
    return result


def additive_shift(p: OPoly, alpha: OrderElement, sign: int = 1) -> OPoly:
    """p(x) + sign*alpha."""
    shift = alpha if sign > 0 else -alpha
    return poly_add(p, constant(p.order, shift))


@dataclass(frozen=True)
class ShiftStep:
    m: int
    passed: bool
    failed: Tuple[str, ...] = ()
    verdict: Optional[str] = None


@dataclass(frozen=True)
class ShiftSearchResult:
    m: Optional[int]
    m_max: int
    trail: Tuple[ShiftStep, ...]
    hypothesis_met: bool
    observed_threshold: Optional[int] = None

    @property
    def found(self) -> bool:
        return self.m is not None


def _shift_hypotheses(domain: FundamentalDomain, delta: OrderElement, mode: str, sign: int) -> bool:
    try:
        flags = domain.hypothesis_flags()
    except UnsupportedDomain:
        return False
    if flags.zero_in_int:
        return True
    along_first = delta.coords[0] > 0 and not any(delta.coords[1:])
    return mode == "compose" and sign > 0 and along_first and flags.zero_in_int_union and flags.zero_in_int_plus


def shifted_polynomial(p: OPoly, delta: OrderElement, m: int, mode: str, sign: int = 1) -> OPoly:
    alpha = delta.scale(m)
    if mode == "compose":
        return taylor_shift(p, alpha, sign)
    if mode == "add":
        return additive_shift(p, alpha, sign)
    raise GnsError(f"unknown shift mode {mode}")


def shift_search(
    order: Order,
    domain: FundamentalDomain,
    p: OPoly,
    delta: OrderElement,
    mode: str = "compose",
    m_max: int = 50,
    sign: int = 1,
    cross_check: bool = False,
    z_cap: int = DEFAULT_Z_CAP,
    window: Optional[int] = None,
    **instance_options,
) -> ShiftSearchResult:
    """Find where the shifted family settles into passing the dominant condition.

    Every m in 1..m_max is checked and the result is the start of the final
    run of passes reaching m_max. With ``window`` the scan stops as soon as
    that many consecutive shifts pass and the run start is returned. An
    isolated pass followed by a failure is never reported.
    """
    if window is not None and window < 1:
        raise GnsError(f"shift window must be positive, got {window}")
    hypothesis_met = _shift_hypotheses(domain, delta, mode, sign)
    if not hypothesis_met:
        logger.info(f"shift search on {domain.describe()}: hypotheses not met, result is still sound")
    if delta.is_zero():
        return ShiftSearchResult(None, m_max, (), hypothesis_met)

    trail: List[ShiftStep] = []
    run_start: Optional[int] = None
    instances: Dict[int, GnsInstance] = {}
    for m in range(1, m_max + 1):
        q = shifted_polynomial(p, delta, m, mode, sign)
        try:
            inst = make_instance(order, domain, q, **instance_options)
        except ZeroModulus:
            trail.append(ShiftStep(m, False, ("zero_modulus",)))
            run_start = None
            continue
        instances[m] = inst
        report = check_dominant(inst, size_cap=z_cap)
        trail.append(ShiftStep(m, report.passed, tuple(report.failed())))
        if not report.passed:
            run_start = None
            continue
        if run_start is None:
            run_start = m
        if window is not None and m - run_start + 1 >= window:
            break
    found = run_start

    threshold = None
    if cross_check:
        checked = []
        for step in trail:
            inst = instances.get(step.m)
            verdict = decide(inst).verdict.value if inst is not None else None
            checked.append(ShiftStep(step.m, step.passed, step.failed, verdict))
        trail = checked
        for step in reversed(trail):
            if step.verdict != Verdict.FINITENESS_HOLDS.value:
                break
            threshold = step.m
    if found is None:
        logger.info(f"shift search: no run of passes reaches m = {trail[-1].m if trail else 0}")
    return ShiftSearchResult(found, m_max, tuple(trail), hypothesis_met, threshold)


def _divide_by_x_minus_one(a: OPoly) -> Tuple[OPoly, OrderElement]:
    coeffs = list(a.coeffs)
    quotient = [a.order.zero] * max(len(coeffs) - 1, 0)
    carry = a.order.zero
    for j in range(len(coeffs) - 1, 0, -1):
        carry = carry + coeffs[j]
        quotient[j - 1] = carry
    return make_poly(a.order, quotient), carry + (coeffs[0] if coeffs else a.order.zero)


@dataclass(frozen=True)
class FamilyRecord:
    m: int
    flagged: bool
    witness: Optional[Witness] = None
    note: Optional[str] = None


@dataclass(frozen=True)
class FamilyReport:
    flags: Optional[HypothesisFlags]
    records: Tuple[FamilyRecord, ...]


def non_finiteness_family(
    order: Order, domain: FundamentalDomain, p: OPoly, m_range: Iterable[int], **instance_options
) -> FamilyReport:
    """h = 1 test: is p(-m) a digit modulo p(-m-1)?"""
    try:
        flags = domain.hypothesis_flags()
    except UnsupportedDomain:
        flags = None
    records = []
    for m in m_range:
        value = evaluate(p, order.from_int(-m))
        modulus = evaluate(p, order.from_int(-m - 1))
        if order.norm(modulus) == 0:
            records.append(FamilyRecord(m, False, note="zero_modulus"))
            continue
        flagged = value in digit_set(order, domain, modulus)
        if not flagged:
            records.append(FamilyRecord(m, False))
            continue
        if value.is_zero():
            records.append(FamilyRecord(m, True, note="degenerate_witness"))
            continue
        shifted = taylor_shift(p, order.from_int(m + 1), -1)
        inst = make_instance(order, domain, shifted, **instance_options)
        state, remainder = _divide_by_x_minus_one(poly_sub(shifted, constant(order, value)))
        if not remainder.is_zero():
            raise GnsError(f"p(-{m}) is not the value of the shifted polynomial at 1")
        records.append(FamilyRecord(m, True, witness_certificate(inst, [state])))
    return FamilyReport(flags, tuple(records))
