import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from arithmetic.gns_errors import DegenerateModulus, InternalError, NotDivisible, ZeroModulus
from arithmetic.order_arith import Order, OrderElement
from domains.fundamental_domains import FundamentalDomain

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DigitSet:
    """D = (theta * (F . omega)) intersected with O, ordered by residue enumeration."""

    order: Order
    domain: FundamentalDomain = field(compare=False)
    modulus: OrderElement
    elements: Tuple[OrderElement, ...]
    lookup: Dict[Tuple[int, ...], OrderElement] = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, d: OrderElement) -> bool:
        return self.lookup.get(self.order.reduce(d, self.modulus)) == d

    def digit_for(self, beta: OrderElement) -> Tuple[OrderElement, OrderElement]:
        """The digit d congruent to beta and the quotient q with beta = d + q*theta."""
        d = self.lookup[self.order.reduce(beta, self.modulus)]
        try:
            q = self.order.exact_div(beta - d, self.modulus)
        except NotDivisible as e:
            raise InternalError(f"digit {d} is not congruent to {beta} modulo {self.modulus}") from e
        return d, q

    def lines(self) -> List[str]:
        return [" ".join(str(c) for c in d.coords) for d in self.elements]


def digit_set(order: Order, domain: FundamentalDomain, theta: OrderElement, strict: bool = False) -> DigitSet:
    norm = order.norm(theta)
    if norm == 0:
        raise ZeroModulus(f"{theta} has norm 0")
    if abs(norm) == 1 and strict:
        raise DegenerateModulus(f"{theta} is a unit, the digit set would be {{0}}")
    if domain.dimension != order.degree:
        raise InternalError(f"domain of dimension {domain.dimension} for an order of degree {order.degree}")
    elements = []
    lookup = {}
    for rho in order.residues(theta):
        m = domain.locate(order.to_rational_coords(rho, theta))
        digit = rho - order.mul(order.element(m), theta)
        elements.append(digit)
        lookup[order.reduce(rho, theta)] = digit
    logger.debug(f"digit set modulo {theta} over {domain.describe()}: {len(elements)} digits")
    return DigitSet(order, domain, theta, tuple(elements), lookup)


def digit_for(digits: DigitSet, beta: OrderElement) -> Tuple[OrderElement, OrderElement]:
    return digits.digit_for(beta)
