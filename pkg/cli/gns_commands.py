import itertools
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, TextIO, Tuple

from pydantic import ValidationError

from arithmetic.gns_errors import EnclosureFailure, GnsError, NotApplicable, StepCapExceeded, TooLarge, UnsupportedDomain
from arithmetic.order_arith import Order, OrderElement, make_order
from cli.gns_config import (
    Config,
    DomainSection,
    EngineSettings,
    FamilySection,
    build_domain,
    build_instance,
    build_order,
    build_polynomial,
    resolve_engine,
)
from cli.gns_records import canonical, format_record
from criteria.gns_criteria import check_dominant, non_finiteness_family, shift_search
from digits.digit_sets import digit_set
from domains.fundamental_domains import verify_tiling
from engine.gns_engine import (
    DecisionReport,
    Expansion,
    GnsInstance,
    Verdict,
    Witness,
    brute_force_finiteness,
    decide,
    expand,
    length_bound,
    make_instance,
)
from polynomials.gns_polynomials import OPoly

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCONCLUSIVE = 2

TILING_SAMPLES = 200

Fields = List[Tuple[str, Any]]


@dataclass
class CommandOptions:
    format: str = "human"
    precision_bits: Optional[int] = None
    step_cap: Optional[int] = None
    workers: Optional[int] = None
    checkpoint: Optional[str] = None
    max_m: Optional[int] = None
    direction: Optional[str] = None
    out: TextIO = field(default_factory=lambda: sys.stdout)


def rational_data(q: Fraction) -> Any:
    q = Fraction(q)
    return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def element_data(e: OrderElement) -> Any:
    return e.coords[0] if len(e.coords) == 1 else list(e.coords)


def poly_data(p: OPoly) -> List[Any]:
    return [element_data(c) for c in p.coeffs]


def witness_data(w: Witness) -> Dict[str, Any]:
    return {
        "h": w.period,
        "states": [poly_data(s) for s in w.states],
        "digits": [element_data(d) for d in w.digits],
        "q1": poly_data(w.q1),
        "q2": poly_data(w.q2),
    }


def instance_key(min_poly: Sequence[int], coeffs: Sequence[Sequence[int]], domain: str) -> str:
    return f"f={canonical(list(min_poly))};p={canonical([list(c) for c in coeffs])};F={domain}"


def _config_key(config: Config) -> str:
    coeffs = config.polynomial.coeffs if config.polynomial else []
    return instance_key(config.order.min_poly, coeffs, build_domain(config.domain).describe())


def _human(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, list):
        if all(isinstance(v, int) for v in value):
            return " ".join(str(v) for v in value)
        if all(isinstance(v, list) and all(isinstance(c, int) for c in v) for v in value):
            return " ".join("(" + ",".join(str(c) for c in v) + ")" for v in value)
        return canonical(value)
    if isinstance(value, dict):
        return canonical(value)
    return str(value)


def _emit(options: CommandOptions, results: List[Fields], started: float):
    elapsed_ms = int((time.perf_counter() - started) * 1000)
    out = options.out
    for fields in results:
        if options.format == "records":
            out.write(format_record(fields + [("elapsed_ms", elapsed_ms)]) + "\n")
        else:
            for key, value in fields:
                out.write(f"{key}: {_human(value)}\n")
            out.write("\n")
    out.flush()


def decision_fields(report: DecisionReport) -> Fields:
    bound = report.bound
    return [
        ("verdict", report.verdict.value),
        ("reason", report.reason),
        ("C", rational_data(bound.C) if bound else None),
        ("bound_method", bound.method if bound else None),
        ("states_checked", report.states_checked),
        ("states_pruned", report.states_pruned),
        ("cycles_found", report.cycles_found),
        ("cycles", [[poly_data(s) for s in c] for c in report.cycles]),
        ("witness", witness_data(report.witness) if report.witness else None),
        ("precision", report.precision),
    ]


def cmd_digits(config: Config, options: CommandOptions) -> int:
    started = time.perf_counter()
    if config.polynomial is None:
        raise GnsError("digits needs a [polynomial] section, the modulus is p(0)")
    order = build_order(config)
    p = build_polynomial(order, config.polynomial.coeffs)
    theta = p.coeff(0)
    digits = digit_set(order, build_domain(config.domain), theta)
    _emit(options, [[
        ("instance", _config_key(config)),
        ("command", "digits"),
        ("modulus", element_data(theta)),
        ("norm", order.norm(theta)),
        ("count", len(digits)),
        ("digits", [element_data(d) for d in digits.elements]),
    ]], started)
    return EXIT_OK


def cmd_decide(config: Config, options: CommandOptions) -> int:
    started = time.perf_counter()
    settings = resolve_engine(config.engine, options.precision_bits, options.step_cap)
    inst = build_instance(config, settings)
    report = decide(inst, settings.precision_bits, config.engine.prune)
    _emit(options, [[("instance", _config_key(config)), ("command", "decide")] + decision_fields(report)], started)
    return EXIT_INCONCLUSIVE if report.verdict is Verdict.INCONCLUSIVE else EXIT_OK


def cmd_expand(config: Config, options: CommandOptions) -> int:
    started = time.perf_counter()
    if config.expand is None:
        raise GnsError("expand needs an [expand] section with the element a")
    settings = resolve_engine(config.engine, options.precision_bits, options.step_cap)
    inst = build_instance(config, settings)
    a = build_polynomial(inst.order, config.expand.a)
    result = expand(inst, a, settings.step_cap)
    fields: Fields = [("instance", _config_key(config)), ("command", "expand"), ("a", poly_data(a))]
    if isinstance(result, Expansion):
        fields += [("status", "Terminating"), ("digits", [element_data(d) for d in result.digits]),
                   ("length", result.length)]
        if config.expand.with_bound:
            try:
                bound = length_bound(inst, a, settings.precision_bits)
                fields += [("length_bound", bound.total), ("h", bound.h), ("C", bound.C)]
            except NotApplicable as e:
                logger.info(f"no length bound: {e}")
                fields += [("length_bound", None)]
    else:
        fields += [("status", "NonTerminating"), ("prefix", [element_data(d) for d in result.prefix]),
                   ("cycle", [poly_data(s) for s in result.cycle])]
    _emit(options, [fields], started)
    return EXIT_OK


def cmd_dominant(config: Config, options: CommandOptions) -> int:
    started = time.perf_counter()
    settings = resolve_engine(config.engine, options.precision_bits, options.step_cap)
    inst = build_instance(config, settings)
    delta = None
    if config.engine.delta is not None:
        delta = [inst.order.element(v) for v in config.engine.delta]
    report = check_dominant(inst, delta, settings.z_cap)
    fields: Fields = [
        ("instance", _config_key(config)),
        ("command", "dominant"),
        ("passed", report.passed),
        ("delta_size", len(report.delta)),
        ("z_size", report.z_size),
        ("failed", report.failed()),
    ]
    for name, outcome in report.conditions:
        example = [element_data(e) for e in outcome.counterexample] if outcome.counterexample else None
        fields.append((f"condition_{name}", {"passed": outcome.passed, "counterexample": example}))
    _emit(options, [fields], started)
    return EXIT_OK


def cmd_shift_search(config: Config, options: CommandOptions) -> int:
    started = time.perf_counter()
    section = config.shift
    if section is None:
        raise GnsError("shift_search needs a [shift] section")
    settings = resolve_engine(config.engine, options.precision_bits, options.step_cap)
    order = build_order(config)
    p = build_polynomial(order, config.polynomial.coeffs) if config.polynomial else None
    if p is None:
        raise GnsError("shift_search needs a [polynomial] section")
    sign = section.sign
    if options.direction is not None:
        sign = -1 if options.direction == "-" else 1
    result = shift_search(
        order,
        build_domain(config.domain),
        p,
        order.element(section.delta),
        mode=section.mode,
        m_max=options.max_m or section.m_max,
        sign=sign,
        cross_check=section.cross_check,
        window=section.window,
        z_cap=settings.z_cap,
        **settings.instance_options(),
    )
    _emit(options, [[
        ("instance", _config_key(config)),
        ("command", "shift_search"),
        ("result", "Found" if result.found else "NotFound"),
        ("m", result.m),
        ("mode", section.mode),
        ("sign", sign),
        ("hypothesis_met", result.hypothesis_met),
        ("window", section.window),
        ("observed_threshold", result.observed_threshold),
        ("trail", [[s.m, s.passed, list(s.failed), s.verdict] for s in result.trail]),
    ]], started)
    return EXIT_OK


def cmd_witness_family(config: Config, options: CommandOptions) -> int:
    started = time.perf_counter()
    section = config.family or FamilySection()
    settings = resolve_engine(config.engine, options.precision_bits, options.step_cap)
    if config.polynomial is None:
        raise GnsError("witness_family needs a [polynomial] section")
    order = build_order(config)
    p = build_polynomial(order, config.polynomial.coeffs)
    report = non_finiteness_family(
        order, build_domain(config.domain), p, range(section.m_from, section.m_to + 1),
        **settings.instance_options(),
    )
    key = _config_key(config)
    flags = asdict(report.flags) if report.flags else None
    results = [
        [
            ("instance", key),
            ("command", "witness_family"),
            ("m", r.m),
            ("flagged", r.flagged),
            ("note", r.note),
            ("witness", witness_data(r.witness) if r.witness else None),
            ("hypotheses", flags),
        ]
        for r in report.records
    ]
    _emit(options, results, started)
    return EXIT_OK


def cmd_hypotheses(config: Config, options: CommandOptions) -> int:
    started = time.perf_counter()
    domain = build_domain(config.domain)
    try:
        flags = asdict(domain.hypothesis_flags())
    except UnsupportedDomain as e:
        logger.info(str(e))
        flags = None
    tiling = verify_tiling(domain, TILING_SAMPLES)
    _emit(options, [[
        ("domain", domain.describe()),
        ("command", "hypotheses"),
        ("flags", flags),
        ("neighbors", len(domain.neighbor_superset())),
        ("tiling_samples", tiling.samples),
        ("tiling_failures", len(tiling.failures)),
    ]], started)
    return EXIT_OK


@dataclass(frozen=True)
class ScanTask:
    index: int
    min_poly: Tuple[int, ...]
    coeffs: Tuple[Tuple[int, ...], ...]
    domain: DomainSection
    command: str
    settings: EngineSettings
    delta: Optional[Tuple[Tuple[int, ...], ...]] = None
    oracle_radius: int = 50
    oracle_step_cap: int = 10_000
    format: str = "records"


def scan_tasks(config: Config, settings: EngineSettings, fmt: str) -> Iterator[ScanTask]:
    """Rows in lexicographic order: domain first, then coordinates of p_0, ..., p_{n-1}."""
    scan = config.scan
    k = config.k
    unit = (1,) + (0,) * (k - 1)
    ranges = [range(lo, hi + 1) for coeff in scan.ranges for lo, hi in coeff]
    delta = tuple(tuple(v) for v in config.engine.delta) if config.engine.delta else None
    index = 0
    for domain in scan.domains if scan.domains is not None else [config.domain]:
        for flat in itertools.product(*ranges):
            coeffs = tuple(tuple(flat[j:j + k]) for j in range(0, len(flat), k)) + (unit,)
            yield ScanTask(index, tuple(config.order.min_poly), coeffs, domain, scan.command, settings,
                           delta, scan.oracle_radius, scan.oracle_step_cap, fmt)
            index += 1


@lru_cache(maxsize=16)
def _scan_order(min_poly: Tuple[int, ...], precision_cap: int) -> Order:
    return make_order(min_poly, precision_cap)


def _row_fields(task: ScanTask, inst: GnsInstance) -> Fields:
    if task.command == "decide":
        report = decide(inst, task.settings.precision_bits)
        bound = report.bound
        return [
            ("verdict", report.verdict.value),
            ("reason", report.reason),
            ("C", rational_data(bound.C) if bound else None),
            ("states_checked", report.states_checked),
            ("cycles_found", report.cycles_found),
        ]
    if task.command == "dominant":
        delta = [inst.order.element(v) for v in task.delta] if task.delta else None
        report = check_dominant(inst, delta, task.settings.z_cap)
        return [("passed", report.passed), ("failed", report.failed())]
    oracle = brute_force_finiteness(inst, task.oracle_radius, task.oracle_step_cap)
    return [
        ("holds", oracle.holds),
        ("checked", oracle.checked),
        ("counterexample", poly_data(oracle.counterexample) if oracle.counterexample else None),
    ]


def evaluate_row(task: ScanTask) -> str:
    """One scan row as an output line; runs in worker processes."""
    domain = build_domain(task.domain)
    fields: Fields = [
        ("row", task.index),
        ("instance", instance_key(task.min_poly, task.coeffs, domain.describe())),
        ("command", task.command),
    ]
    try:
        order = _scan_order(task.min_poly, task.settings.precision_cap)
        p = build_polynomial(order, [list(c) for c in task.coeffs])
        inst = make_instance(order, domain, p, **task.settings.instance_options())
        fields += _row_fields(task, inst)
    except GnsError as e:
        logger.debug(f"row {task.index}: {type(e).__name__}: {e}")
        fields += [("error", type(e).__name__)]
    if task.format == "records":
        return format_record(fields)
    return " ".join(f"{key}={_human(value)}" for key, value in fields)


def cmd_scan(config: Config, options: CommandOptions) -> int:
    if config.scan is None:
        raise GnsError("scan needs a [scan] section")
    import asyncio

    from worker import scan_config

    return asyncio.run(scan_config(config, options))


COMMANDS: Dict[str, Callable[[Config, CommandOptions], int]] = {
    "digits": cmd_digits,
    "decide": cmd_decide,
    "expand": cmd_expand,
    "dominant": cmd_dominant,
    "shift_search": cmd_shift_search,
    "witness_family": cmd_witness_family,
    "hypotheses": cmd_hypotheses,
    "scan": cmd_scan,
}


def run_command(name: str, config: Config, options: CommandOptions) -> int:
    """Run one command and map failures to exit codes."""
    handler = COMMANDS.get(name)
    if handler is None:
        logger.error(f"Unknown command: {name}")
        return EXIT_USAGE
    try:
        return handler(config, options)
    except (EnclosureFailure, StepCapExceeded, TooLarge) as e:
        logger.error(f"{name} could not be certified: {e}", exc_info=True)
        return EXIT_INCONCLUSIVE
    except (GnsError, ValidationError) as e:
        logger.error(f"{name} failed: {e}", exc_info=True)
        return EXIT_USAGE
