"""Finite-domain input configurations, validity properties, and the solvability boundary.

Parties are integers 0..n-1. An input configuration assigns one input value to
each member of a party subset of size >= n - t_s; it stands for "these parties
are honest and hold these inputs". Everything here is exhaustive enumeration
over explicit finite domains, guarded by a budget.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .errors import BudgetExceededError, ConfigError

SETUP_NONE = "NONE"
SETUP_PKI = "PKI"

# Verdict reasons
TRIVIAL = "TRIVIAL"
SIMILARITY_AND_N_OK = "SIMILARITY_AND_N_OK"
N_TOO_SMALL = "N_TOO_SMALL"
SIMILARITY_FAILS = "SIMILARITY_FAILS"


@dataclass(frozen=True)
class SystemParams:
    """Party count and per-network-mode corruption bounds."""

    n: int
    t_s: int
    t_a: int
    setup: str = SETUP_PKI

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        if not (0 <= self.t_a <= self.t_s <= self.n - 1):
            raise ConfigError(
                f"need 0 <= t_a <= t_s <= n-1, got n={self.n} t_s={self.t_s} t_a={self.t_a}"
            )
        if self.setup not in (SETUP_NONE, SETUP_PKI):
            raise ConfigError(f"setup must be NONE or PKI, got {self.setup!r}")

    @property
    def min_config_size(self) -> int:
        return self.n - self.t_s

    def n_bound_holds(self) -> bool:
        """Resilience precondition: n > 2*t_s + t_a with PKI, n > 3*t_s without."""
        if self.setup == SETUP_PKI:
            return self.n > 2 * self.t_s + self.t_a
        return self.n > 3 * self.t_s

    def to_dict(self) -> dict:
        return {"n": self.n, "t_s": self.t_s, "t_a": self.t_a, "setup": self.setup}

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        try:
            return cls(int(d["n"]), int(d["t_s"]), int(d["t_a"]), str(d.get("setup", SETUP_PKI)))
        except KeyError as e:
            raise ConfigError(f"params missing field {e}") from e


@dataclass(frozen=True)
class Domain:
    """Finite ordered input and output value labels.

    The declared order doubles as the tie-break order for certificate values.
    """

    input_values: tuple[str, ...]
    output_values: tuple[str, ...]

    def __post_init__(self):
        for name, vals in (("input", self.input_values), ("output", self.output_values)):
            if not vals:
                raise ConfigError(f"{name} domain must be non-empty")
            if len(set(vals)) != len(vals):
                raise ConfigError(f"{name} domain has duplicate labels: {vals}")

    @classmethod
    def binary(cls) -> "Domain":
        return cls(("0", "1"), ("0", "1"))

    @classmethod
    def labels(cls, count: int) -> "Domain":
        vals = tuple(str(i) for i in range(count))
        return cls(vals, vals)

    def output_index(self, value: str) -> int:
        return self.output_values.index(value)

    def min_output(self, values) -> str:
        """Smallest member of `values` in declared output order."""
        return min(values, key=self.output_values.index)

    def to_dict(self) -> dict:
        return {"input_values": list(self.input_values), "output_values": list(self.output_values)}

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        return cls(tuple(d["input_values"]), tuple(d["output_values"]))


@dataclass(frozen=True)
class InputConfiguration:
    """Sorted (party, value) assignments for the honest parties."""

    assignments: tuple[tuple[int, str], ...]

    def __post_init__(self):
        parties = [p for p, _ in self.assignments]
        if parties != sorted(set(parties)):
            raise ConfigError(f"assignments must be sorted with distinct parties: {self.assignments}")
        if parties and parties[0] < 0:
            raise ConfigError("party ids must be non-negative")

    @classmethod
    def of(cls, pairs) -> "InputConfiguration":
        return cls(tuple(sorted((int(p), str(v)) for p, v in pairs)))

    @property
    def parties(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.assignments)

    def __len__(self) -> int:
        return len(self.assignments)

    def value_of(self, party: int) -> Optional[str]:
        for p, v in self.assignments:
            if p == party:
                return v
        return None

    def as_dict(self) -> dict[int, str]:
        return dict(self.assignments)

    def is_subset_of(self, other: "InputConfiguration") -> bool:
        """Sub-configuration relation: same values on a party subset."""
        theirs = other.as_dict()
        return all(theirs.get(p) == v for p, v in self.assignments)

    def agrees_with(self, other: "InputConfiguration") -> bool:
        """Neighbor relation: equal values on every commonly present party."""
        theirs = other.as_dict()
        return all(theirs.get(p, v) == v for p, v in self.assignments)

    def encode(self) -> str:
        return ";".join(f"p{p}={v}" for p, v in self.assignments)

    @classmethod
    def decode(cls, text: str) -> "InputConfiguration":
        pairs = []
        for part in text.split(";"):
            if not part.startswith("p") or "=" not in part:
                raise ConfigError(f"bad configuration encoding: {text!r}")
            head, value = part.split("=", 1)
            pairs.append((int(head[1:]), value))
        return cls.of(pairs)

    def validate(self, params: SystemParams, domain: Domain) -> None:
        if len(self) < params.min_config_size:
            raise ConfigError(
                f"configuration has {len(self)} parties, need >= {params.min_config_size}"
            )
        for p, v in self.assignments:
            if p >= params.n:
                raise ConfigError(f"party {p} out of range for n={params.n}")
            if v not in domain.input_values:
                raise ConfigError(f"value {v!r} not in input domain")


@dataclass(frozen=True)
class ValidityProperty:
    """Named deterministic map from input configurations to allowed output sets."""

    name: str
    evaluate: Callable[[SystemParams, Domain, InputConfiguration], frozenset]


@dataclass
class Budget:
    """Hard caps on enumeration work; exceeded caps raise, never truncate."""

    max_configs: int = 5_000_000
    max_pair_checks: int = 1_000_000_000
    pair_checks_used: int = field(default=0, repr=False)

    def check_configs(self, count: int) -> None:
        if count > self.max_configs:
            raise BudgetExceededError(
                f"{count} configurations exceed the enumeration cap {self.max_configs}"
            )

    def charge_pairs(self, amount: int = 1) -> None:
        self.pair_checks_used += amount
        if self.pair_checks_used > self.max_pair_checks:
            raise BudgetExceededError(
                f"pairwise checks exceeded the cap {self.max_pair_checks}"
            )


def count_input_configs(params: SystemParams, domain: Domain) -> int:
    m = len(domain.input_values)
    n = params.n
    total = 0
    for k in range(params.min_config_size, n + 1):
        total += _comb(n, k) * m**k
    return total


def _comb(n: int, k: int) -> int:
    import math

    return math.comb(n, k)


def enumerate_input_configs(
    params: SystemParams, domain: Domain, budget: Optional[Budget] = None
) -> Iterator[InputConfiguration]:
    """All configurations, party subsets by ascending size then lexicographic,
    assignments lexicographic in declared domain order."""
    budget = budget or Budget()
    budget.check_configs(count_input_configs(params, domain))
    values = domain.input_values
    for size in range(params.min_config_size, params.n + 1):
        for subset in itertools.combinations(range(params.n), size):
            for assignment in itertools.product(values, repeat=size):
                yield InputConfiguration(tuple(zip(subset, assignment)))


def _compatible_configs(
    base: InputConfiguration, params: SystemParams, domain: Domain, min_size: int
) -> Iterator[InputConfiguration]:
    """Configurations of size >= min_size agreeing with `base` on shared parties,
    in canonical enumeration order."""
    fixed = base.as_dict()
    values = domain.input_values
    for size in range(min_size, params.n + 1):
        for subset in itertools.combinations(range(params.n), size):
            free = [p for p in subset if p not in fixed]
            if not free:
                yield InputConfiguration(tuple((p, fixed[p]) for p in subset))
                continue
            for assignment in itertools.product(values, repeat=len(free)):
                chosen = dict(zip(free, assignment))
                yield InputConfiguration(
                    tuple((p, fixed[p] if p in fixed else chosen[p]) for p in subset)
                )


def neighbors(
    config: InputConfiguration,
    params: SystemParams,
    domain: Domain,
    budget: Optional[Budget] = None,
) -> list[InputConfiguration]:
    """Configurations agreeing with `config` on every commonly present party."""
    budget = budget or Budget()
    out = []
    for other in _compatible_configs(config, params, domain, params.min_config_size):
        budget.charge_pairs()
        out.append(other)
    return out


def similar(
    config: InputConfiguration,
    params: SystemParams,
    domain: Domain,
    budget: Optional[Budget] = None,
) -> list[InputConfiguration]:
    """Neighbors that are sub-configurations (corruption ambiguity) or have
    size >= n - t_a (asynchrony ambiguity)."""
    budget = budget or Budget()
    floor_async = params.n - params.t_a
    out = []
    for other in _compatible_configs(config, params, domain, params.min_config_size):
        budget.charge_pairs()
        if len(other) >= floor_async or other.is_subset_of(config):
            out.append(other)
    return out


def is_similar_to(
    config: InputConfiguration, other: InputConfiguration, params: SystemParams
) -> bool:
    """Fast membership predicate: other in similar(config)."""
    if len(other) < params.min_config_size:
        return False
    if not other.agrees_with(config):
        return False
    return len(other) >= params.n - params.t_a or other.is_subset_of(config)


def _memoized(validity: ValidityProperty, params: SystemParams, domain: Domain):
    cache: dict = {}
    allowed = frozenset(domain.output_values)

    def evaluate(config: InputConfiguration) -> frozenset:
        key = config.assignments
        result = cache.get(key)
        if result is None:
            result = frozenset(validity.evaluate(params, domain, config))
            if not result <= allowed:
                raise ConfigError(
                    f"property {validity.name!r} returned values outside the output domain: "
                    f"{sorted(result - allowed)}"
                )
            cache[key] = result
        return result

    return evaluate


def monotone_closure(validity: ValidityProperty) -> ValidityProperty:
    """Intersection of the property over all sub-configurations; antitone."""

    def evaluate(params: SystemParams, domain: Domain, config: InputConfiguration) -> frozenset:
        result = None
        for sub in _sub_configs(config, params):
            vals = frozenset(validity.evaluate(params, domain, sub))
            result = vals if result is None else result & vals
            if not result:
                break
        return result if result is not None else frozenset()

    return ValidityProperty(name=f"closure({validity.name})", evaluate=evaluate)


def _sub_configs(config: InputConfiguration, params: SystemParams) -> Iterator[InputConfiguration]:
    pairs = config.assignments
    for size in range(params.min_config_size, len(pairs) + 1):
        for subset in itertools.combinations(pairs, size):
            yield InputConfiguration(subset)


def is_trivial(
    validity: ValidityProperty,
    params: SystemParams,
    domain: Domain,
    budget: Optional[Budget] = None,
) -> tuple[bool, Optional[str]]:
    """Whether one output is valid under every configuration; returns the
    smallest such value in declared output order if so."""
    budget = budget or Budget()
    evaluate = _memoized(validity, params, domain)
    common = frozenset(domain.output_values)
    for config in enumerate_input_configs(params, domain, budget):
        common &= evaluate(config)
        if not common:
            return False, None
    return True, domain.min_output(common)


def is_trivial_maximal(
    validity: ValidityProperty,
    params: SystemParams,
    domain: Domain,
    budget: Optional[Budget] = None,
) -> bool:
    """Triviality restricted to maximal configurations (all parties present)."""
    budget = budget or Budget()
    budget.check_configs(len(domain.input_values) ** params.n)
    evaluate = _memoized(validity, params, domain)
    common = frozenset(domain.output_values)
    parties = tuple(range(params.n))
    for assignment in itertools.product(domain.input_values, repeat=params.n):
        common &= evaluate(InputConfiguration(tuple(zip(parties, assignment))))
        if not common:
            return False
    return True


@dataclass(frozen=True)
class SimilarityCertificate:
    """A choice table sigma mapping every configuration to one output that is
    valid under all of its similar configurations."""

    params: SystemParams
    domain: Domain
    sigma: dict  # encoded configuration -> output value

    def lookup(self, config: InputConfiguration) -> str:
        return self.sigma[config.encode()]

    def to_json(self) -> str:
        return json.dumps(
            {"params": self.params.to_dict(), "domain": self.domain.to_dict(), "sigma": self.sigma},
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SimilarityCertificate":
        data = json.loads(text)
        return cls(
            params=SystemParams.from_dict(data["params"]),
            domain=Domain.from_dict(data["domain"]),
            sigma=dict(data["sigma"]),
        )

    def validate(
        self, validity: ValidityProperty, budget: Optional[Budget] = None
    ) -> tuple[bool, Optional[str]]:
        """Independent soundness re-check: sigma(I) in V(J) for every I and
        every J similar to I. Returns (ok, first failure description)."""
        budget = budget or Budget()
        evaluate = _memoized(validity, self.params, self.domain)
        for config in enumerate_input_configs(self.params, self.domain, budget):
            encoded = config.encode()
            if encoded not in self.sigma:
                return False, f"missing sigma entry for {encoded}"
            chosen = self.sigma[encoded]
            for other in similar(config, self.params, self.domain, budget):
                if chosen not in evaluate(other):
                    return False, f"sigma({encoded})={chosen} invalid under {other.encode()}"
        return True, None


@dataclass(frozen=True)
class CertificateOutcome:
    """Either a certificate or the first configuration with an empty
    similar-intersection, in canonical order."""

    certificate: Optional[SimilarityCertificate]
    witness: Optional[InputConfiguration]

    @property
    def feasible(self) -> bool:
        return self.certificate is not None


def compute_similarity_certificate(
    validity: ValidityProperty,
    params: SystemParams,
    domain: Domain,
    budget: Optional[Budget] = None,
) -> CertificateOutcome:
    budget = budget or Budget()
    evaluate = _memoized(validity, params, domain)
    sigma: dict[str, str] = {}
    for config in enumerate_input_configs(params, domain, budget):
        common = None
        for other in similar(config, params, domain, budget):
            vals = evaluate(other)
            common = vals if common is None else common & vals
            if not common:
                return CertificateOutcome(certificate=None, witness=config)
        sigma[config.encode()] = domain.min_output(common)
    return CertificateOutcome(
        certificate=SimilarityCertificate(params=params, domain=domain, sigma=sigma),
        witness=None,
    )


@dataclass(frozen=True)
class SolvabilityVerdict:
    solvable: bool
    reason: str
    witness: Optional[InputConfiguration] = None
    trivial_value: Optional[str] = None

    def to_dict(self) -> dict:
        out = {"solvable": self.solvable, "reason": self.reason}
        if self.witness is not None:
            out["witness"] = self.witness.encode()
        if self.trivial_value is not None:
            out["trivial_value"] = self.trivial_value
        return out


def is_solvable(
    validity: ValidityProperty,
    params: SystemParams,
    domain: Domain,
    budget: Optional[Budget] = None,
) -> SolvabilityVerdict:
    """Decides solvability: trivial properties always solve; otherwise the
    resilience bound on n and the similarity condition must both hold."""
    budget = budget or Budget()
    trivial, value = is_trivial(validity, params, domain, budget)
    if trivial:
        return SolvabilityVerdict(solvable=True, reason=TRIVIAL, trivial_value=value)
    if not params.n_bound_holds():
        return SolvabilityVerdict(solvable=False, reason=N_TOO_SMALL)
    outcome = compute_similarity_certificate(validity, params, domain, budget)
    if outcome.feasible:
        return SolvabilityVerdict(solvable=True, reason=SIMILARITY_AND_N_OK)
    return SolvabilityVerdict(solvable=False, reason=SIMILARITY_FAILS, witness=outcome.witness)
