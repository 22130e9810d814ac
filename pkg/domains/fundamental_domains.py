"""Fundamental domains for Z^k acting on R^k, with exact membership for rational points."""

import itertools
import logging
import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Sequence, Tuple

from arithmetic.gns_errors import GnsError, NotTiling, UnsupportedDomain
from arithmetic.order_arith import RationalVector

logger = logging.getLogger(__name__)

LatticeVector = Tuple[int, ...]

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class HypothesisFlags:
    zero_in_int: bool
    zero_in_int_plus: bool
    zero_in_int_union: bool
    zero_in_int_minus_shift: bool


@dataclass(frozen=True)
class NeighborSet:
    vectors: Tuple[LatticeVector, ...]

    def __post_init__(self):
        if not self.vectors:
            raise GnsError("neighbor set is empty")
        k = len(self.vectors[0])
        if (0,) * k not in self.vectors:
            raise GnsError("neighbor set must contain 0")
        if not generates_semigroup(self.vectors):
            raise GnsError("neighbor set does not generate Z^k as a semigroup")

    def __len__(self) -> int:
        return len(self.vectors)


def generates_semigroup(vectors: Sequence[LatticeVector]) -> bool:
    """True when every +-e_j is a finite sum of members."""
    k = len(vectors[0])
    radius = 2 * max(1, max(abs(c) for v in vectors for c in v))
    targets = set()
    for j in range(k):
        for s in (1, -1):
            targets.add(tuple(s if i == j else 0 for i in range(k)))
    seen = {(0,) * k}
    frontier = [(0,) * k]
    while frontier and not targets <= seen:
        nxt = []
        for point in frontier:
            for v in vectors:
                q = tuple(a + b for a, b in zip(point, v))
                if q not in seen and max(abs(c) for c in q) <= radius:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return targets <= seen


class FundamentalDomain(ABC):
    """A bounded F with R^k = F + Z^k without overlaps and 0 in F."""

    dimension: int

    @abstractmethod
    def contains(self, b: RationalVector) -> bool:
        ...

    @abstractmethod
    def bounding_box(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        """Closed box containing the closure of F."""

    def describe(self) -> str:
        return type(self).__name__

    def window(self, b: RationalVector) -> Iterator[LatticeVector]:
        ranges = [
            range(math.ceil(bi - hi), math.floor(bi - lo) + 1)
            for bi, (lo, hi) in zip(b, self.bounding_box())
        ]
        return itertools.product(*ranges)

    def matches(self, b: RationalVector) -> List[LatticeVector]:
        return [m for m in self.window(b) if self.contains(_translate(b, m))]

    def locate(self, b: RationalVector) -> LatticeVector:
        found = self.matches(b)
        if len(found) != 1:
            raise NotTiling(b, found)
        return found[0]

    def neighbor_superset(self) -> NeighborSet:
        ranges = []
        for lo, hi in self.bounding_box():
            w = math.floor(hi - lo)
            ranges.append(range(-w, w + 1))
        return NeighborSet(tuple(itertools.product(*ranges)))

    def hypothesis_flags(self) -> HypothesisFlags:
        raise UnsupportedDomain(f"{self.describe()} has no analytic hypothesis flags")


def _translate(b: RationalVector, m: LatticeVector) -> RationalVector:
    return tuple(bi - mi for bi, mi in zip(b, m))


class BoxDomain(FundamentalDomain):
    """F = prod [a_i, a_i + 1)."""

    def __init__(self, offsets: Sequence[Fraction]):
        self.offsets = tuple(Fraction(a) for a in offsets)
        self.dimension = len(self.offsets)
        if not self.offsets:
            raise GnsError("box needs at least one offset")
        for a in self.offsets:
            if not (a <= 0 < a + 1):
                raise GnsError(f"box offset {a} does not put 0 in [a, a+1)")

    def describe(self) -> str:
        return "box[" + ",".join(str(a) for a in self.offsets) + "]"

    def contains(self, b: RationalVector) -> bool:
        return all(a <= bi < a + 1 for a, bi in zip(self.offsets, b))

    def bounding_box(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        return tuple((a, a + 1) for a in self.offsets)

    def locate(self, b: RationalVector) -> LatticeVector:
        return tuple(math.floor(bi - a) for a, bi in zip(self.offsets, b))

    def hypothesis_flags(self) -> HypothesisFlags:
        a = self.offsets
        rest_open = all(x < 0 for x in a[1:])
        return HypothesisFlags(
            zero_in_int=all(x < 0 for x in a),
            zero_in_int_plus=rest_open,
            zero_in_int_union=rest_open,
            zero_in_int_minus_shift=a[0] == 0 and rest_open,
        )


def epsilon_box(epsilon: Fraction) -> BoxDomain:
    """F_eps = [-eps, 1 - eps) on the line."""
    return BoxDomain([-Fraction(epsilon)])


class SailDomain(FundamentalDomain):
    """Sail for an imaginary quadratic omega = re + i*sqrt(im_sq).

    norm_form:  |r1 + r2*omega| < 1, |r1 - 1 + r2*omega| >= 1, -1/2 <= r2 < 1/2
    euclidean:  the same with the Euclidean norm of (r1, r2).
    """

    VARIANTS = ("norm_form", "euclidean")

    def __init__(self, omega_re: Fraction, omega_im_sq: Fraction, variant: str = "norm_form"):
        self.omega_re = Fraction(omega_re)
        self.omega_im_sq = Fraction(omega_im_sq)
        self.variant = variant
        self.dimension = 2
        if variant not in self.VARIANTS:
            raise GnsError(f"unknown sail variant {variant}")
        if variant == "norm_form" and not (0 < self.omega_im_sq < 4):
            raise GnsError(f"omega_im_sq must lie in (0, 4) for the sail, got {self.omega_im_sq}")

    def describe(self) -> str:
        family = "sail" if self.variant == "norm_form" else "sail_euclidean"
        return f"{family}[{self.omega_re},{self.omega_im_sq}]"

    def _moduli(self, r1: Fraction, r2: Fraction) -> Tuple[Fraction, Fraction]:
        if self.variant == "euclidean":
            return r1 * r1 + r2 * r2, (r1 - 1) * (r1 - 1) + r2 * r2
        u = r1 + r2 * self.omega_re
        tail = r2 * r2 * self.omega_im_sq
        return u * u + tail, (u - 1) * (u - 1) + tail

    def contains(self, b: RationalVector) -> bool:
        r1, r2 = b
        if not (-HALF <= r2 < HALF):
            return False
        inner, outer = self._moduli(r1, r2)
        return inner < 1 and outer >= 1

    def bounding_box(self) -> Tuple[Tuple[Fraction, Fraction], ...]:
        spread = 1 if self.variant == "euclidean" else 1 + abs(self.omega_re) / 2
        return ((-spread, spread), (-HALF, HALF))

    def locate(self, b: RationalVector) -> LatticeVector:
        r1, r2 = b
        m2 = math.floor(r2 + HALF)
        shifted = r2 - m2
        centre = math.floor(r1 if self.variant == "euclidean" else r1 + shifted * self.omega_re)
        found = [
            (m1, m2) for m1 in range(centre - 3, centre + 4)
            if self.contains((r1 - m1, shifted))
        ]
        if len(found) != 1:
            raise NotTiling(b, found)
        return found[0]

    def hypothesis_flags(self) -> HypothesisFlags:
        """All four flags are false for the literal inequalities.

        Near 0 the sail keeps only the side r1 <= 0: a point (e, 0) with small
        e > 0 has |r1 - 1 + r2*omega| = 1 - e < 1. So 0 is not interior, and
        int_+ fails as well. Near e1 no point satisfies both |r1 + r2*omega| < 1
        and |r1 - 1 + r2*omega| >= 1, so F - e1 adds nothing around 0 and the
        closure of F misses e1. The union and shifted conditions fail with it.
        """
        return HypothesisFlags(False, False, False, False)


@dataclass(frozen=True)
class TilingReport:
    samples: int
    failures: Tuple[Tuple[RationalVector, str], ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def _probe_points(k: int) -> List[RationalVector]:
    steps = (Fraction(0), HALF, -HALF, Fraction(1))
    return [tuple(p) for p in itertools.product(steps, repeat=k)]


def verify_tiling(domain: FundamentalDomain, sample_count: int, seed: int = 0) -> TilingReport:
    rng = random.Random(seed)
    k = domain.dimension
    points = _probe_points(k)
    while len(points) < sample_count:
        points.append(tuple(Fraction(rng.randint(-5000, 5000), rng.randint(1, 499)) for _ in range(k)))
    failures = []
    for b in points[:max(sample_count, 0)]:
        found = domain.matches(b)
        if len(found) != 1:
            failures.append((b, f"{len(found)} translates in the window"))
            continue
        try:
            m = domain.locate(b)
        except NotTiling as e:
            failures.append((b, str(e)))
            continue
        if m != found[0] or not domain.contains(_translate(b, m)):
            failures.append((b, f"locate returned {m}, expected {found[0]}"))
    if failures:
        logger.warning(f"{domain.describe()}: {len(failures)} of {sample_count} tiling samples failed")
    return TilingReport(sample_count, tuple(failures))
