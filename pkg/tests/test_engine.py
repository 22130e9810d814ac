from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arithmetic.gns_errors import GnsError, NotApplicable, StepCapExceeded
from arithmetic.order_arith import OrderElement, make_order
from criteria.gns_criteria import shift_search, taylor_shift
from domains.fundamental_domains import BoxDomain
from engine.gns_engine import (
    Expansion,
    NonTerminating,
    Verdict,
    backward_step,
    brute_force_finiteness,
    decide,
    expand,
    length_bound,
    make_instance,
    state_bound,
    witness_certificate,
)
from polynomials.gns_polynomials import (
    constant,
    from_coordinates,
    from_ints,
    make_poly,
    poly_add,
    poly_mul,
    poly_rem,
    poly_sub,
    x_power,
)


def check_witness_identity(inst, witness):
    order = inst.order
    lhs = make_poly(order, witness.digits)
    x_h_minus_1 = poly_sub(x_power(order, witness.period), constant(order, order.one))
    rhs = poly_add(poly_mul(x_h_minus_1, witness.q1), poly_mul(witness.q2, inst.p))
    assert lhs == rhs
    assert any(not d.is_zero() for d in witness.digits)


def test_backward_step_base_minus_two(z_instance, z_order):
    inst = z_instance([2, 1])
    d, b, q = backward_step(inst, from_ints(z_order, [9]))
    assert (d, b, q) == (OrderElement((1,)), from_ints(z_order, [-4]), OrderElement((4,)))
    zero = from_ints(z_order, [])
    assert backward_step(inst, zero) == (z_order.zero, zero, z_order.zero)


def test_backward_step_base_two_uses_negative_digit(z_instance, z_order):
    inst = z_instance([-2, 1])
    d, b, q = backward_step(inst, from_ints(z_order, [-1]))
    assert (d, b, q) == (OrderElement((-1,)), from_ints(z_order, []), z_order.zero)


def test_expand_base_minus_two(z_instance, z_order):
    inst = z_instance([2, 1])
    result = expand(inst, from_ints(z_order, [9]))
    assert isinstance(result, Expansion)
    assert [d.coords[0] for d in result.digits] == [1, 0, 0, 1, 1]
    assert result.length == 5
    assert expand(inst, from_ints(z_order, [1])).digits == (z_order.one,)
    assert expand(inst, from_ints(z_order, [])).length == 0


def test_expand_reduces_high_degree_input(z_instance, z_order):
    inst = z_instance([2, 1])
    # x^2 + 1 is congruent to 5
    result = expand(inst, from_ints(z_order, [1, 0, 1]))
    assert [d.coords[0] for d in result.digits] == [1, 0, 1]


def test_expand_base_two_cycle(z_instance, z_order):
    inst = z_instance([-2, 1])
    assert expand(inst, from_ints(z_order, [-1])).digits == (OrderElement((-1,)),)
    result = expand(inst, from_ints(z_order, [1]))
    assert isinstance(result, NonTerminating)
    assert result.cycle == (from_ints(z_order, [1]),)


def test_expand_step_cap(z_instance, z_order):
    inst = z_instance([2, 1])
    with pytest.raises(StepCapExceeded):
        expand(inst, from_ints(z_order, [10 ** 6]), step_cap=3)


@pytest.mark.parametrize(
    "coeffs, domain_offset, C",
    [([2, 1], 0, 3), ([3, 1], 0, 4), ([2, 1], "-1/2", 3)],
)
def test_state_bound_linear(z_order, coeffs, domain_offset, C):
    inst = make_instance(z_order, BoxDomain([Fraction(domain_offset)]), from_ints(z_order, coeffs))
    bound = state_bound(inst)
    assert bound.C == C
    assert bound.box == ((-C, C),)
    assert bound.method == "conjugate"


def test_decide_base_minus_two(z_instance):
    report = decide(z_instance([2, 1]))
    assert report.verdict is Verdict.FINITENESS_HOLDS
    assert report.bound.C == 3
    assert report.states_checked == 7
    assert report.witness is None


def test_decide_base_two(z_instance, z_order):
    inst = z_instance([-2, 1])
    report = decide(inst)
    assert report.verdict is Verdict.FINITENESS_FAILS
    assert report.reason == "cycle"
    assert report.cycles_found == 1
    w = report.witness
    assert w.period == 1
    assert w.states == (from_ints(z_order, [1]),)
    assert w.digits == (OrderElement((-1,)),)
    assert w.q1 == from_ints(z_order, [-1])
    assert w.q2 == from_ints(z_order, [1])
    check_witness_identity(inst, w)


def test_decide_not_expansive_skips_enumeration(z_instance):
    report = decide(z_instance([2, -3, 1]))
    assert report.verdict is Verdict.FINITENESS_FAILS
    assert report.reason == "not_expansive"
    assert report.states_checked == 0


def test_decide_unit_constant_term(z_instance):
    report = decide(z_instance([-1, 0, 1]))
    assert report.verdict is Verdict.FINITENESS_FAILS


def test_decide_without_pruning_agrees(z_instance):
    for coeffs in ([12, 4, 1], [3, -2, 1], [5, 2, 1]):
        inst = z_instance(coeffs)
        pruned, full = decide(inst), decide(inst, prune=False)
        assert pruned.verdict is full.verdict
        assert pruned.states_pruned >= 0 and full.states_pruned == 0


def test_decide_repeated_root_uses_contraction(z_instance, z_order):
    inst = z_instance([9, -6, 1])
    report = decide(inst)
    assert report.bound.method == "contraction"
    assert report.verdict is Verdict.FINITENESS_FAILS
    check_witness_identity(inst, report.witness)


def test_witness_for_known_cycle(z_instance, z_order):
    inst = z_instance([9, -6, 1])
    w = witness_certificate(inst, [from_ints(z_order, [-5, 1])])
    assert w.period == 1
    assert w.digits == (OrderElement((4,)),)
    assert w.q2 == from_ints(z_order, [1])
    check_witness_identity(inst, w)


def test_witness_rejects_zero_and_broken_cycles(z_instance, z_order):
    inst = z_instance([-2, 1])
    with pytest.raises(GnsError):
        witness_certificate(inst, [from_ints(z_order, [])])
    with pytest.raises(GnsError):
        witness_certificate(inst, [from_ints(z_order, [2])])


def test_x2_minus_2x_plus_2_is_not_finite(z_instance):
    assert decide(z_instance([2, -2, 1])).verdict is Verdict.FINITENESS_FAILS


@pytest.mark.slow
@pytest.mark.parametrize("m", range(11))
def test_x2_minus_2x_plus_2_plus_m_is_not_finite(z_instance, m):
    report = decide(z_instance([2 + m, -2, 1]))
    assert report.verdict is Verdict.FINITENESS_FAILS


QUADRATICS = [(-1, 2), (0, 2), (2, 2), (3, 2), (-2, 3), (5, 5), (6, 5), (-1, 8), (-3, 4), (4, 7)]


@pytest.mark.parametrize("b, c", QUADRATICS)
def test_decide_matches_oracle_and_classical_region(z_instance, b, c):
    inst = z_instance([c, b, 1])
    report = decide(inst)
    oracle = brute_force_finiteness(inst, radius=50, step_cap=10_000)
    assert (report.verdict is Verdict.FINITENESS_HOLDS) == oracle.holds
    assert oracle.holds == (-1 <= b <= c)


@pytest.mark.slow
def test_quadratic_oracle_sweep(z_instance):
    for c in range(2, 9):
        for b in range(-c - 2, c + 3):
            inst = z_instance([c, b, 1])
            report = decide(inst)
            oracle = brute_force_finiteness(inst, radius=50, step_cap=10_000)
            assert (report.verdict is Verdict.FINITENESS_HOLDS) == oracle.holds, (b, c)
            assert oracle.holds == (-1 <= b <= c), (b, c)


def test_gaussian_base(gaussian_instance, gaussian_order):
    inst = gaussian_instance([[1, -1], [1, 0]])
    assert decide(inst).verdict is Verdict.FINITENESS_HOLDS
    a = from_coordinates(gaussian_order, [[7, -3]])
    result = expand(inst, a)
    assert poly_rem(poly_sub(make_poly(gaussian_order, result.digits), a), inst.p).is_zero()
    assert result.length <= length_bound(inst, a).total


def test_length_bound_base_minus_two(z_instance, z_order):
    inst = z_instance([2, 1])
    bound = length_bound(inst, from_ints(z_order, [9]))
    assert bound.h == 4
    assert bound.C == 4
    assert expand(inst, from_ints(z_order, [9])).length <= bound.total
    assert length_bound(inst, from_ints(z_order, [])).total >= 0


def test_length_bound_needs_finiteness(z_instance, z_order):
    with pytest.raises(NotApplicable):
        length_bound(z_instance([-2, 1]), from_ints(z_order, [3]))
    with pytest.raises(NotApplicable):
        length_bound(z_instance([9, 6, 1]), from_ints(z_order, [3]))


def test_oracle_finds_counterexample(z_instance):
    report = brute_force_finiteness(z_instance([-2, 1]), radius=3)
    assert not report.holds
    assert report.cycle


@given(st.integers(-10 ** 6, 10 ** 6))
@settings(max_examples=100, deadline=None)
def test_round_trip_and_length_bound(a):
    order = make_order([-1, 1])
    inst = make_instance(order, BoxDomain([0]), from_ints(order, [2, 1]))
    value = from_ints(order, [a])
    result = expand(inst, value)
    assert poly_rem(poly_sub(make_poly(order, result.digits), value), inst.p).is_zero()
    assert not result.digits or not result.digits[-1].is_zero()
    assert result.length <= length_bound(inst, value).total


@lru_cache(maxsize=None)
def shifted_gaussian_instance():
    """x + i over Z[i] with the centred square, shifted until the dominant condition settles."""
    order = make_order([1, 0, 1])
    centred = BoxDomain([Fraction(-1, 2)] * 2)
    p = from_coordinates(order, [[0, 1], [1, 0]])
    result = shift_search(order, centred, p, order.one, m_max=12)
    assert result.found and result.hypothesis_met
    inst = make_instance(order, centred, taylor_shift(p, order.from_int(result.m)))
    assert decide(inst).verdict is Verdict.FINITENESS_HOLDS
    return inst


@given(st.integers(-60, 60), st.integers(-60, 60))
@settings(max_examples=100, deadline=None)
def test_gaussian_round_trip(re, im):
    inst = shifted_gaussian_instance()
    value = from_coordinates(inst.order, [[re, im]])
    result = expand(inst, value)
    assert poly_rem(poly_sub(make_poly(inst.order, result.digits), value), inst.p).is_zero()
    assert result.length <= length_bound(inst, value).total
