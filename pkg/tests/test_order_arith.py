from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from arithmetic.gns_errors import GnsError, NotDivisible, NotMonic, RationalRootFound
from arithmetic.order_arith import OrderElement, make_order

pair = st.tuples(st.integers(-50, 50), st.integers(-50, 50))


def test_make_order_degrees(z_order, gaussian_order, sqrt11_order):
    assert z_order.degree == 1
    assert gaussian_order.degree == 2
    assert sqrt11_order.min_poly == (3, -1, 1)


def test_make_order_rejects_bad_polynomials():
    with pytest.raises(NotMonic):
        make_order([1, 2])
    with pytest.raises(RationalRootFound):
        make_order([-1, 0, 1])
    with pytest.raises(GnsError):
        make_order([1])


def test_mul_gaussian(gaussian_order):
    i = gaussian_order.element([0, 1])
    assert gaussian_order.mul(i, i) == OrderElement((-1, 0))
    t = gaussian_order.element([-1, 1])
    assert gaussian_order.mul(t, t) == OrderElement((0, -2))
    assert gaussian_order.mul(t, gaussian_order.one) == t


def test_mul_matrix(z_order, gaussian_order):
    assert z_order.mul_matrix(z_order.from_int(-2)) == ((-2,),)
    # columns (-1, 1) and (-1, -1)
    assert gaussian_order.mul_matrix(gaussian_order.element([-1, 1])) == ((-1, -1), (1, -1))
    assert gaussian_order.mul_matrix(gaussian_order.one) == ((1, 0), (0, 1))


def test_norm(z_order, gaussian_order):
    assert gaussian_order.norm(gaussian_order.element([-1, 1])) == 2
    assert z_order.norm(z_order.from_int(7)) == 7
    assert z_order.norm(z_order.from_int(-2)) == -2
    assert gaussian_order.norm(gaussian_order.zero) == 0


def test_exact_div(z_order, gaussian_order):
    theta = gaussian_order.element([-1, 1])
    assert gaussian_order.exact_div(gaussian_order.from_int(2), theta) == OrderElement((-1, -1))
    assert gaussian_order.exact_div(theta, gaussian_order.one) == theta
    with pytest.raises(NotDivisible):
        z_order.exact_div(z_order.from_int(1), z_order.from_int(2))


def test_to_rational_coords(z_order, gaussian_order):
    theta = gaussian_order.element([-1, 1])
    half = Fraction(-1, 2)
    assert gaussian_order.to_rational_coords(gaussian_order.one, theta) == (half, half)
    assert gaussian_order.to_rational_coords(theta, theta) == (1, 0)
    assert z_order.to_rational_coords(z_order.from_int(3), z_order.from_int(2)) == (Fraction(3, 2),)


def test_residues(z_order, gaussian_order):
    assert z_order.residues(z_order.from_int(2)) == [OrderElement((0,)), OrderElement((1,))]
    assert len(z_order.residues(z_order.from_int(3))) == 3
    theta = gaussian_order.element([-1, 1])
    residues = gaussian_order.residues(theta)
    assert len(residues) == 2
    assert len({gaussian_order.reduce(r, theta) for r in residues}) == 2


def test_conjugate_values(gaussian_order, sqrt11_order):
    values = gaussian_order.conjugate_values(gaussian_order.element([2, 1]))
    assert any(v.contains(2, 1) for v in values)
    assert any(v.contains(2, -1) for v in values)
    assert all(v.contains(5) for v in gaussian_order.conjugate_values(gaussian_order.from_int(5)))
    centres = sorted(v.center.imag for v in sqrt11_order.conjugate_values(sqrt11_order.basis(1)))
    assert centres[0] == pytest.approx(-(11 ** 0.5) / 2, abs=1e-12)
    assert centres[1] == pytest.approx((11 ** 0.5) / 2, abs=1e-12)


def test_embedding_matrix(z_order, gaussian_order):
    trivial = z_order.embedding_matrix()
    assert trivial.omega[0][0].contains(1)
    assert trivial.inverse[0][0].contains(1)
    em = gaussian_order.embedding_matrix()
    assert not em.determinant.contains_zero()
    assert em.inverse[0][0].contains(Fraction(1, 2))
    assert em.inverse[0][1].contains(Fraction(1, 2))
    signs = sorted(box.center.imag for box in em.inverse[1])
    assert signs == pytest.approx([-0.5, 0.5])


@given(pair, pair, pair)
@settings(max_examples=200, deadline=None)
def test_mul_is_commutative_and_associative(a, b, c):
    order = make_order([3, -1, 1])
    x, y, z = (order.element(v) for v in (a, b, c))
    assert order.mul(x, y) == order.mul(y, x)
    assert order.mul(order.mul(x, y), z) == order.mul(x, order.mul(y, z))


@given(pair, pair)
@settings(max_examples=200, deadline=None)
def test_exact_div_inverts_mul(a, b):
    assume(any(b))
    order = make_order([1, 0, 1])
    x, y = order.element(a), order.element(b)
    assert order.exact_div(order.mul(x, y), y) == x
    assert order.norm(order.mul(x, y)) == order.norm(x) * order.norm(y)
