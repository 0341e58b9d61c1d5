"""Catalog property definitions against their stated semantics."""

import pytest

from aba.catalog import (
    BOT,
    CliqueHullSpec,
    IntervalDomainSpec,
    clique_hull,
    intrusion_tolerant_strong,
    interval_hull,
    resolve,
    strong_validity,
    weak_validity,
)
from aba.core import (
    Budget,
    Domain,
    InputConfiguration as IC,
    SystemParams,
    enumerate_input_configs,
    is_solvable,
)
from aba.errors import ConfigError, DomainMismatchError


BINARY = Domain.binary()


def cfg(*pairs):
    return IC.of(pairs)


def test_strong_validity_cases():
    params = SystemParams(n=3, t_s=1, t_a=1)
    prop = strong_validity()
    assert prop.evaluate(params, BINARY, cfg((0, "0"), (1, "0"))) == {"0"}
    assert prop.evaluate(params, BINARY, cfg((0, "0"), (1, "1"))) == {"0", "1"}
    singleton_params = SystemParams(n=2, t_s=1, t_a=0)
    assert prop.evaluate(singleton_params, BINARY, cfg((0, "1"))) == {"1"}


def test_strong_validity_domain_mismatch():
    params = SystemParams(n=2, t_s=1, t_a=0)
    bad = Domain(("0", "1"), ("0",))
    with pytest.raises(DomainMismatchError):
        strong_validity().evaluate(params, bad, cfg((0, "0")))


def test_weak_validity_cases():
    params = SystemParams(n=3, t_s=1, t_a=0)
    prop = weak_validity()
    assert prop.evaluate(params, BINARY, cfg((0, "1"), (1, "1"), (2, "1"))) == {"1"}
    assert prop.evaluate(params, BINARY, cfg((0, "1"), (1, "1"))) == {"0", "1"}
    assert prop.evaluate(params, BINARY, cfg((0, "1"), (1, "0"), (2, "1"))) == {"0", "1"}


def test_intrusion_tolerant_strong_cases():
    values = ("0", "1", "2")
    domain = Domain(values, values + (BOT,))
    params = SystemParams(n=3, t_s=1, t_a=0)
    prop = intrusion_tolerant_strong()
    assert prop.evaluate(params, domain, cfg((0, "0"), (1, "0"), (2, "0"))) == {"0"}
    assert prop.evaluate(params, domain, cfg((0, "0"), (1, "1"))) == {"0", "1", BOT}
    assert prop.evaluate(params, domain, cfg((0, "2"))) == {"2"}
    with pytest.raises(DomainMismatchError):
        prop.evaluate(params, Domain(values, values), cfg((0, "0")))


def test_interval_hull_cases():
    spec = IntervalDomainSpec(0, 9)
    prop, domain = interval_hull(spec), spec.domain()
    params = SystemParams(n=2, t_s=1, t_a=0)
    assert prop.evaluate(params, domain, cfg((0, "2"), (1, "5"))) == {"2", "3", "4", "5"}
    assert prop.evaluate(params, domain, cfg((0, "7"), (1, "7"))) == {"7"}
    assert prop.evaluate(params, domain, cfg((0, "0"), (1, "9"))) == set(domain.output_values)
    with pytest.raises(ConfigError):
        IntervalDomainSpec(5, 2)


def test_clique_hull_cases():
    spec = CliqueHullSpec(3)
    prop, domain = clique_hull(spec), spec.domain()
    params = SystemParams(n=3, t_s=1, t_a=0)
    assert prop.evaluate(params, domain, cfg((0, "a"), (1, "b"))) == {"a", "b"}
    assert prop.evaluate(params, domain, cfg((0, "a"), (1, "a"))) == {"a"}
    assert prop.evaluate(params, domain, cfg((0, "a"), (1, "b"), (2, "c"))) == {"a", "b", "c"}
    with pytest.raises(ConfigError):
        CliqueHullSpec(1)


def test_catalog_properties_never_empty():
    entries = [
        ("strong", 2),
        ("weak", 2),
        ("it-strong", 2),
        ("interval:0:3", 2),
        ("clique:2", 2),
        ("clique:3", 2),
    ]
    grid = [SystemParams(3, 1, 0), SystemParams(3, 1, 1), SystemParams(4, 2, 1)]
    for name, values in entries:
        prop, domain = resolve(name, values)
        for params in grid:
            for config in enumerate_input_configs(params, domain, Budget()):
                assert prop.evaluate(params, domain, config), (name, params, config)


def test_resolve_rejects_unknown():
    with pytest.raises(ConfigError):
        resolve("unknown")


def test_clique_feasibility_matches_closed_form_small_grid():
    # spot-check the closed form n > max(w*t_s, w*t_a + t_s, 2*t_s + t_a)
    # (full grid is covered by the acceptance suite)
    for omega in (2, 3):
        spec = CliqueHullSpec(omega)
        prop, domain = clique_hull(spec), spec.domain()
        for n in range(3, 7):
            for t_s in (1, 2):
                if t_s > n - 1:
                    continue
                for t_a in range(0, t_s + 1):
                    params = SystemParams(n, t_s, t_a, "PKI")
                    expected = n > max(omega * t_s, omega * t_a + t_s, 2 * t_s + t_a)
                    verdict = is_solvable(prop, params, domain)
                    assert verdict.solvable == expected, (omega, params, verdict.reason)


def test_strong_weak_feasibility_matches_bound_small_grid():
    for name in ("strong", "weak"):
        prop, domain = resolve(name, 2)
        for n in range(2, 6):
            for t_s in (1, 2):
                if t_s > n - 1:
                    continue
                for t_a in range(0, t_s + 1):
                    pki = is_solvable(prop, SystemParams(n, t_s, t_a, "PKI"), domain)
                    assert pki.solvable == (n > 2 * t_s + t_a), (name, n, t_s, t_a)
                    plain = is_solvable(prop, SystemParams(n, t_s, t_a, "NONE"), domain)
                    assert plain.solvable == (n > 3 * t_s), (name, n, t_s, t_a)
