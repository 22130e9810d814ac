from fractions import Fraction

import pytest
from pydantic import ValidationError

from arithmetic.gns_errors import ConfigParseError, GnsError
from cli.gns_config import (
    EngineSection,
    build_domain,
    build_instance,
    load_config,
    parse_config,
    parse_rational,
    resolve_engine,
)
from domains.fundamental_domains import BoxDomain, SailDomain

MINIMAL = """
[order]
min_poly = [-1, 1]

[polynomial]
coeffs = [[2], [1]]

[domain]
family = "box"
offsets = [0]
"""

GAUSSIAN = """
[order]
min_poly = [1, 0, 1]

[polynomial]
coeffs = [[1, -1], [1, 0]]

[domain]
family = "box"
offsets = ["0", "-1/2"]

[engine]
precision_bits = 80
step_cap = 500

[shift]
delta = [1, 0]
cross_check = true
"""


def test_minimal_config():
    config = parse_config(MINIMAL)
    assert config.k == 1
    assert config.polynomial.coeffs == [[2], [1]]
    assert config.engine.prune
    assert config.expand is None and config.scan is None


def test_gaussian_config():
    config = parse_config(GAUSSIAN)
    assert config.k == 2
    assert config.domain.offsets == [Fraction(0), Fraction(-1, 2)]
    assert config.shift.mode == "compose" and config.shift.cross_check
    settings = resolve_engine(config.engine)
    assert settings.precision_bits == 80 and settings.step_cap == 500
    assert resolve_engine(config.engine, precision_bits=96).precision_bits == 96
    inst = build_instance(config, settings)
    assert inst.n == 1


def test_resolve_engine_reads_environment(monkeypatch):
    monkeypatch.setenv("GNS_STEP_CAP", "77")
    monkeypatch.setenv("GNS_PRECISION_BITS", "72")
    settings = resolve_engine(EngineSection())
    assert settings.step_cap == 77
    assert settings.precision_bits == 72
    assert resolve_engine(EngineSection(step_cap=5)).step_cap == 5


def test_resolve_engine_rejects_precision_over_cap():
    with pytest.raises(GnsError):
        resolve_engine(EngineSection(precision_bits=512, precision_cap=128))


def test_parse_rational():
    assert parse_rational(3) == 3
    assert parse_rational("-3/4") == Fraction(-3, 4)
    assert parse_rational(" 5 ") == 5
    for bad in ("1/0", "a/b", "1.5", True):
        with pytest.raises(ConfigParseError):
            parse_rational(bad)


def test_zero_denominator_reports_position():
    text = MINIMAL.replace("offsets = [0]", 'offsets = ["1/0"]')
    with pytest.raises(ConfigParseError) as info:
        parse_config(text)
    assert info.value.line == 10
    assert info.value.column == 12
    assert "zero denominator" in info.value.message


def test_toml_syntax_error():
    with pytest.raises(ConfigParseError) as info:
        parse_config("[order\nmin_poly = [-1, 1]\n")
    assert info.value.line == 1


@pytest.mark.parametrize(
    "old, new",
    [
        ('family = "box"', 'family = "box"\ncolour = "red"'),
        ("coeffs = [[2], [1]]", "coeffs = [[2], [3]]"),
        ("min_poly = [-1, 1]", "min_poly = [-1, 2]"),
        ("offsets = [0]", "offsets = [0, 0]"),
        ('family = "box"', 'family = "sail"'),
    ],
    ids=["unknown key", "non-monic", "non-monic order", "dimension", "missing omega"],
)
def test_invalid_configs(old, new):
    with pytest.raises(ValidationError):
        parse_config(MINIMAL.replace(old, new))


def test_reversed_scan_range():
    text = MINIMAL + "\n[scan]\nranges = [[[3, 1]]]\n"
    with pytest.raises(ValidationError):
        parse_config(text)


def test_family_range():
    with pytest.raises(ValidationError):
        parse_config(MINIMAL + "\n[family]\nm_from = 5\nm_to = 2\n")
    config = parse_config(MINIMAL + "\n[family]\n")
    assert (config.family.m_from, config.family.m_to) == (2, 12)


def test_build_domains():
    config = parse_config(MINIMAL)
    assert isinstance(build_domain(config.domain), BoxDomain)
    sail = parse_config(
        GAUSSIAN.replace('offsets = ["0", "-1/2"]', 'omega_re = 0\nomega_im_sq = 1').replace(
            'family = "box"', 'family = "sail"'
        )
    )
    assert isinstance(build_domain(sail.domain), SailDomain)
    eps = parse_config(MINIMAL.replace('family = "box"', 'family = "epsilon"\nepsilon = "1/3"').replace(
        "offsets = [0]\n", ""
    ))
    assert build_domain(eps.domain).contains((Fraction(-1, 3),))


def test_load_config(tmp_path):
    path = tmp_path / "x_plus_2.toml"
    path.write_text(MINIMAL)
    assert load_config(str(path)).order.min_poly == [-1, 1]


def test_build_instance_needs_polynomial():
    config = parse_config(MINIMAL.replace("[polynomial]\ncoeffs = [[2], [1]]\n", ""))
    with pytest.raises(GnsError):
        build_instance(config, resolve_engine(config.engine))
