from fractions import Fraction

import pytest

from arithmetic.order_arith import make_order
from domains.fundamental_domains import BoxDomain, SailDomain
from engine.gns_engine import make_instance
from polynomials.gns_polynomials import from_coordinates, from_ints


@pytest.fixture(scope="session")
def z_order():
    return make_order([-1, 1])


@pytest.fixture(scope="session")
def gaussian_order():
    return make_order([1, 0, 1])


@pytest.fixture(scope="session")
def sqrt11_order():
    return make_order([3, -1, 1])


@pytest.fixture(scope="session")
def unit_box():
    return BoxDomain([0])


@pytest.fixture(scope="session")
def centred_box():
    return BoxDomain([Fraction(-1, 2)])


@pytest.fixture(scope="session")
def square():
    return BoxDomain([0, 0])


@pytest.fixture(scope="session")
def gaussian_sail():
    return SailDomain(0, 1)


@pytest.fixture
def z_instance(z_order, unit_box):
    def build(coeffs, domain=None, **options):
        return make_instance(z_order, domain or unit_box, from_ints(z_order, coeffs), **options)

    return build


@pytest.fixture
def gaussian_instance(gaussian_order, square):
    def build(coeffs, domain=None, **options):
        return make_instance(gaussian_order, domain or square, from_coordinates(gaussian_order, coeffs), **options)

    return build
