"""TOML configuration for single instances and scans.

A config names an order by its minimal polynomial, a polynomial over that
order by coordinate vectors (lowest degree first), a fundamental domain and
engine options. Command sections are optional.
"""

import logging
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from arithmetic.gns_errors import ConfigParseError, GnsError
from arithmetic.order_arith import DEFAULT_PRECISION_BITS, DEFAULT_PRECISION_CAP, Order, make_order
from criteria.gns_criteria import DEFAULT_Z_CAP
from domains.fundamental_domains import BoxDomain, FundamentalDomain, SailDomain, epsilon_box
from engine.gns_engine import DEFAULT_STEP_CAP, GnsInstance, make_instance
from polynomials.gns_polynomials import OPoly, from_coordinates

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = 1
DEFAULT_LOG_LEVEL = "INFO"

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def get_precision_bits() -> int:
    return int(os.getenv("GNS_PRECISION_BITS", DEFAULT_PRECISION_BITS))


def get_precision_cap() -> int:
    return int(os.getenv("GNS_PRECISION_CAP", DEFAULT_PRECISION_CAP))


def get_step_cap() -> int:
    return int(os.getenv("GNS_STEP_CAP", DEFAULT_STEP_CAP))


def get_z_cap() -> int:
    return int(os.getenv("GNS_Z_CAP", DEFAULT_Z_CAP))


def get_workers() -> int:
    return int(os.getenv("GNS_WORKERS", DEFAULT_WORKERS))


def get_log_level() -> str:
    return os.getenv("GNS_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()


def parse_rational(value) -> Fraction:
    if isinstance(value, bool):
        raise ConfigParseError(f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise ConfigParseError(f"expected an integer or an \"n/d\" string, got {value!r}")
    match = _RATIONAL.match(value)
    if not match:
        raise ConfigParseError(f"malformed rational {value!r}", token=value)
    num, den = match.group(1), match.group(2)
    if den is not None and int(den) == 0:
        raise ConfigParseError(f"malformed rational {value!r}: zero denominator", token=value)
    return Fraction(int(num), int(den) if den else 1)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True, frozen=True)


class OrderSection(_Section):
    min_poly: List[int] = Field(..., min_length=2)


class PolynomialSection(_Section):
    coeffs: List[List[int]] = Field(..., min_length=2)


class DomainSection(_Section):
    family: Literal["box", "epsilon", "sail", "sail_euclidean"]
    offsets: Optional[List[Fraction]] = None
    epsilon: Optional[Fraction] = None
    omega_re: Optional[Fraction] = None
    omega_im_sq: Optional[Fraction] = None

    @field_validator("offsets", mode="before")
    @classmethod
    def validate_offsets(cls, v):
        if v is None:
            return v
        return [parse_rational(a) for a in v]

    @field_validator("epsilon", "omega_re", "omega_im_sq", mode="before")
    @classmethod
    def validate_rational(cls, v):
        return None if v is None else parse_rational(v)

    @model_validator(mode="after")
    def check_parameters(self):
        if self.family == "box" and self.offsets is None:
            raise ValueError("box domain needs offsets")
        if self.family == "epsilon" and self.epsilon is None:
            raise ValueError("epsilon domain needs epsilon")
        if self.family.startswith("sail") and (self.omega_re is None or self.omega_im_sq is None):
            raise ValueError("sail domain needs omega_re and omega_im_sq")
        return self

    @property
    def dimension(self) -> int:
        if self.family == "box":
            return len(self.offsets)
        return 1 if self.family == "epsilon" else 2

    def key(self) -> str:
        return build_domain(self).describe()


class EngineSection(_Section):
    precision_bits: Optional[int] = Field(None, ge=8)
    precision_cap: Optional[int] = Field(None, ge=8)
    step_cap: Optional[int] = Field(None, ge=1)
    z_cap: Optional[int] = Field(None, ge=1)
    delta: Optional[List[List[int]]] = None
    prune: bool = True


class ExpandSection(_Section):
    a: List[List[int]] = Field(..., min_length=1)
    with_bound: bool = False


class ShiftSection(_Section):
    delta: List[int]
    mode: Literal["compose", "add"] = "compose"
    m_max: int = Field(50, ge=1)
    sign: Literal[1, -1] = 1
    cross_check: bool = False
    window: Optional[int] = Field(None, ge=1)


class FamilySection(_Section):
    m_from: int = Field(2, ge=0)
    m_to: int = Field(12, ge=0)

    @model_validator(mode="after")
    def check_range(self):
        if self.m_to < self.m_from:
            raise ValueError(f"empty family range {self.m_from}..{self.m_to}")
        return self


class ScanSection(_Section):
    """Coefficient ranges for p_0, ..., p_{n-1}; each coordinate is [lo, hi]."""

    ranges: List[List[Tuple[int, int]]] = Field(..., min_length=1)
    domains: Optional[List[DomainSection]] = None
    command: Literal["decide", "dominant", "oracle"] = "decide"
    oracle_radius: int = Field(50, ge=0)
    oracle_step_cap: int = Field(10_000, ge=1)
    output: Optional[str] = None
    checkpoint: Optional[str] = None


class Config(_Section):
    order: OrderSection
    domain: DomainSection
    polynomial: Optional[PolynomialSection] = None
    engine: EngineSection = EngineSection()
    expand: Optional[ExpandSection] = None
    shift: Optional[ShiftSection] = None
    family: Optional[FamilySection] = None
    scan: Optional[ScanSection] = None

    @property
    def k(self) -> int:
        return len(self.order.min_poly) - 1

    @model_validator(mode="after")
    def check_dimensions(self):
        k = self.k
        if self.order.min_poly[-1] != 1:
            raise ValueError(f"minimal polynomial {self.order.min_poly} is not monic")
        unit = [1] + [0] * (k - 1)

        def vectors(name: str, vs):
            for v in vs:
                if len(v) != k:
                    raise ValueError(f"{name}: vector {list(v)} has {len(v)} coordinates, the order has degree {k}")

        if self.polynomial is not None:
            vectors("polynomial.coeffs", self.polynomial.coeffs)
            if list(self.polynomial.coeffs[-1]) != unit:
                raise ValueError(f"polynomial is not monic: leading coefficient {self.polynomial.coeffs[-1]}")
        domains = [self.domain] + list(self.scan.domains or []) if self.scan else [self.domain]
        for d in domains:
            if d.dimension != k:
                raise ValueError(f"domain {d.family} has dimension {d.dimension}, the order has degree {k}")
        if self.engine.delta is not None:
            vectors("engine.delta", self.engine.delta)
        if self.expand is not None:
            vectors("expand.a", self.expand.a)
        if self.shift is not None:
            vectors("shift.delta", [self.shift.delta])
        if self.scan is not None:
            vectors("scan.ranges", self.scan.ranges)
            for coeff in self.scan.ranges:
                for lo, hi in coeff:
                    if hi < lo:
                        raise ValueError(f"scan range [{lo}, {hi}] is reversed")
        return self


def _position(text: str, needle: str) -> Tuple[Optional[int], Optional[int]]:
    index = text.find(needle)
    if index < 0:
        return None, None
    line = text.count("\n", 0, index) + 1
    column = index - (text.rfind("\n", 0, index) + 1) + 1
    return line, column


def parse_config(text: str) -> Config:
    """Strict parse of a TOML config; raises ConfigParseError or pydantic ValidationError."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+), column (\d+)", str(e))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (None, None)
        raise ConfigParseError(str(e), line, column) from e
    try:
        return Config.model_validate(raw)
    except ValidationError as e:
        for error in e.errors():
            cause = (error.get("ctx") or {}).get("error")
            if isinstance(cause, ConfigParseError):
                line, column = _position(text, f"\"{cause.token}\"") if cause.token else (None, None)
                raise ConfigParseError(cause.message, line, column) from e
        raise


def load_config(path: str) -> Config:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    config = parse_config(text)
    logger.info(f"Loaded config {path}")
    return config


@dataclass(frozen=True)
class EngineSettings:
    precision_bits: int
    precision_cap: int
    step_cap: int
    z_cap: int

    def instance_options(self) -> dict:
        return {"bits": self.precision_bits, "precision_cap": self.precision_cap, "step_cap": self.step_cap}


def resolve_engine(
    section: EngineSection, precision_bits: Optional[int] = None, step_cap: Optional[int] = None
) -> EngineSettings:
    """Flags override the config, the config overrides the environment."""
    settings = EngineSettings(
        precision_bits=precision_bits or section.precision_bits or get_precision_bits(),
        precision_cap=section.precision_cap or get_precision_cap(),
        step_cap=step_cap or section.step_cap or get_step_cap(),
        z_cap=section.z_cap or get_z_cap(),
    )
    if settings.precision_bits > settings.precision_cap:
        raise GnsError(f"precision {settings.precision_bits} exceeds the cap {settings.precision_cap}")
    return settings


def build_order(config: Config) -> Order:
    return make_order(config.order.min_poly, config.engine.precision_cap or get_precision_cap())


def build_domain(section: DomainSection) -> FundamentalDomain:
    if section.family == "box":
        return BoxDomain(section.offsets)
    if section.family == "epsilon":
        return epsilon_box(section.epsilon)
    variant = "norm_form" if section.family == "sail" else "euclidean"
    return SailDomain(section.omega_re, section.omega_im_sq, variant)


def build_polynomial(order: Order, coeffs: List[List[int]]) -> OPoly:
    return from_coordinates(order, coeffs)


def build_instance(config: Config, settings: EngineSettings, order: Optional[Order] = None) -> GnsInstance:
    if config.polynomial is None:
        raise GnsError("this command needs a [polynomial] section")
    order = order or build_order(config)
    p = build_polynomial(order, config.polynomial.coeffs)
    return make_instance(order, build_domain(config.domain), p, **settings.instance_options())
