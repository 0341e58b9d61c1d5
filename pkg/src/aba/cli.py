"""Command-line front end: solvability checks, certificate synthesis,
scenario execution, fuzzing, and attack demonstrations.

Exit codes are a contract: 0 clean/solvable, 1 property violation,
2 configuration error, 3 unsolvable verdict, 4 budget exceeded. All outputs
are pure functions of the provided files, flags, and seeds; the ABA_BUDGET
environment variable overrides the enumeration cap.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import attacks, catalog
from .core import (
    Budget,
    InputConfiguration,
    SimilarityCertificate,
    SystemParams,
    compute_similarity_certificate,
    is_similar_to,
    is_solvable,
)
from .errors import BudgetExceededError, ConfigError, ProtocolError
from .protocols import (
    AcsProtocol,
    BinaryBa,
    ConstantProtocol,
    RbcProtocol,
    SharedRandomBaStar,
    UniversalBa,
)
from .simnet import (
    SYNCHRONOUS,
    AdversaryScript,
    AsyncRandomDelay,
    AsyncUniformDelay,
    CrashAt,
    Equivocate,
    FollowWithInput,
    NetworkConfig,
    PartitionPolicy,
    SilentTo,
    SyncExactDelay,
    SyncRandomDelay,
    run,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_UNSOLVABLE = 3
EXIT_BUDGET = 4


def _budget_for(args) -> Budget:
    budget = Budget()
    override = os.environ.get("ABA_BUDGET")
    if override:
        budget.max_configs = int(override)
    if getattr(args, "budget", None):
        budget.max_configs = args.budget
    return budget


def _emit(data: dict, pretty: bool) -> None:
    if pretty:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(json.dumps(data, sort_keys=True))


def _resolve_validity(args) -> tuple:
    if getattr(args, "validity_table", None):
        return catalog.load_table_property(args.validity_table)
    return catalog.resolve(args.validity, values=args.values)


# ---------------------------------------------------------------- check


def cmd_check(args) -> int:
    prop, domain = _resolve_validity(args)
    params = SystemParams(args.n, args.ts, args.ta, args.setup.upper())
    verdict = is_solvable(prop, params, domain, _budget_for(args))
    _emit(
        {"validity": prop.name, "params": params.to_dict(), "verdict": verdict.to_dict()},
        args.pretty,
    )
    return EXIT_OK if verdict.solvable else EXIT_UNSOLVABLE


# ---------------------------------------------------------------- certificate


def cmd_certificate(args) -> int:
    prop, domain = _resolve_validity(args)
    params = SystemParams(args.n, args.ts, args.ta, args.setup.upper())
    outcome = compute_similarity_certificate(prop, params, domain, _budget_for(args))
    if not outcome.feasible:
        print(
            f"similarity condition fails; witness configuration: {outcome.witness.encode()}",
            file=sys.stderr,
        )
        return EXIT_UNSOLVABLE
    with open(args.out, "w") as fh:
        fh.write(outcome.certificate.to_json())
    _emit(
        {"validity": prop.name, "entries": len(outcome.certificate.sigma), "out": args.out},
        args.pretty,
    )
    return EXIT_OK


# ---------------------------------------------------------------- scenarios


_BEHAVIORS = {
    "CRASH_AT": lambda spec: CrashAt(int(spec.get("time", 0))),
    "FOLLOW_WITH_INPUT": lambda spec: FollowWithInput(spec["value"]),
    "EQUIVOCATE": lambda spec: Equivocate(
        spec["values"][0],
        spec["values"][1],
        frozenset(spec["split"]) if "split" in spec else None,
    ),
    "SILENT_TO": lambda spec: SilentTo(frozenset(spec["parties"]), spec.get("value")),
}


def _delivery_policy(spec: Optional[dict], net: NetworkConfig):
    if spec is None:
        return None
    kind = spec.get("kind")
    if kind == "exact":
        return SyncExactDelay(net.delta)
    if kind == "sync-random":
        return SyncRandomDelay(net.delta)
    if kind == "uniform":
        return AsyncUniformDelay()
    if kind == "random":
        return AsyncRandomDelay(int(spec.get("max_delay", 3 * net.delta)))
    if kind == "partition":
        return PartitionPolicy(
            [set(g) for g in spec["groups"]], spec.get("release_time")
        )
    raise ConfigError(f"unknown delivery policy {kind!r}")


class Scenario:
    """Validated scenario file: parameters, domain, protocol, adversary,
    inputs, and seed."""

    def __init__(self, data: dict, base_dir: str = "."):
        for key in ("params", "protocol", "network", "inputs", "seed"):
            if key not in data:
                raise ConfigError(f"scenario missing {key!r}")
        self.params = SystemParams.from_dict(data["params"])
        net = data["network"]
        mode = net.get("mode", "SYNCHRONOUS").upper()
        self.net = NetworkConfig(
            mode=mode, delta=int(net.get("delta", 10)), horizon=int(net.get("horizon", 8000))
        )
        self.protocol = data["protocol"]
        self.seed = int(data["seed"])
        self.validity_name = data.get("validity")
        self.values = int(data.get("values", 2))
        self.certificate_path = data.get("certificate")
        if self.certificate_path and not os.path.isabs(self.certificate_path):
            self.certificate_path = os.path.join(base_dir, self.certificate_path)
        adversary = data.get("adversary", {})
        corrupted = {}
        for party, spec in adversary.get("corrupted", {}).items():
            kind = spec.get("behavior")
            if kind not in _BEHAVIORS:
                raise ConfigError(f"unknown behavior {kind!r}")
            corrupted[int(party)] = _BEHAVIORS[kind](spec)
        self.script = AdversaryScript(
            corrupted=corrupted,
            delivery=_delivery_policy(adversary.get("delivery"), self.net),
        )
        self.inputs = InputConfiguration.of(
            (int(p), str(v)) for p, v in data["inputs"].items()
        )
        if any(p >= self.params.n for p in self.inputs.parties):
            raise ConfigError("inputs reference a party outside 0..n-1")
        self.validity = None
        self.domain = None
        if self.validity_name:
            self.validity, self.domain = catalog.resolve(self.validity_name, self.values)
            bad = [v for _, v in self.inputs.assignments
                   if v not in self.domain.input_values and self.protocol != "ba-star"]
            if bad:
                raise ConfigError(f"inputs outside the domain: {bad}")

    @classmethod
    def load(cls, path: str) -> "Scenario":
        with open(path) as fh:
            data = json.load(fh)
        return cls(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def machine_factory(self, store: Optional[dict] = None):
        name = self.protocol
        params = self.params
        delta = self.net.delta

        def tracked(builder):
            def factory(p):
                machine = builder(p)
                if store is not None:
                    store.setdefault(p, []).append(machine)
                return machine

            return factory

        if name.startswith("constant:"):
            value = name.split(":", 1)[1]
            return tracked(lambda p: ConstantProtocol(value))
        if name == "rbc":
            return tracked(lambda p: RbcProtocol(params, sender=0))
        if name == "bin-ba":
            labels = self.domain.input_values if self.domain else ("0", "1")
            if len(labels) != 2:
                raise ConfigError("bin-ba needs a binary domain")
            return tracked(lambda p: BinaryBa(params, delta, labels=tuple(labels)))
        if name == "acs":
            values = self.domain.input_values if self.domain else None
            return tracked(lambda p: AcsProtocol(params, delta, valid_values=values))
        if name == "universal":
            if not self.certificate_path:
                raise ConfigError("universal protocol needs a certificate file")
            with open(self.certificate_path) as fh:
                cert = SimilarityCertificate.from_json(fh.read())
            if cert.params != params:
                raise ConfigError("certificate parameters do not match the scenario")
            return tracked(lambda p: UniversalBa(params, delta, cert))
        if name == "ba-star":
            return tracked(lambda p: SharedRandomBaStar())
        raise ConfigError(f"unknown protocol {name!r}")


def _check_run_properties(scenario: Scenario, result, machines: dict) -> dict:
    """Agreement, validity against the ground-truth honest configuration, and
    the core-set contract when applicable."""
    corrupted = set(scenario.script.corrupted)
    decisions = result.honest_decisions(corrupted)
    violations = []
    values = set(decisions.values())
    if len(values) > 1:
        violations.append("agreement")
    truth = scenario.inputs
    if scenario.protocol == "acs" and decisions:
        core = next(iter(values))
        honest = [p for p in range(scenario.params.n) if p not in corrupted]
        truth_map = truth.as_dict()
        if any(
            value != truth_map[party]
            for party, value in core.assignments
            if party in honest
        ):
            violations.append("acs-integrity")
        if scenario.net.mode == SYNCHRONOUS and not set(honest) <= set(core.parties):
            violations.append("acs-honest-core")
        if len(core) < scenario.params.n - scenario.params.t_s:
            violations.append("acs-core-size")
    elif scenario.validity and decisions and scenario.protocol in ("universal", "bin-ba"):
        value = next(iter(values))
        allowed = scenario.validity.evaluate(scenario.params, scenario.domain, truth)
        if value not in allowed:
            violations.append("validity")
        if scenario.protocol == "universal":
            # coherence: the true honest configuration is similar to every
            # core an honest party agreed on
            for party, machine_list in machines.items():
                if party in corrupted:
                    continue
                for machine in machine_list:
                    core = getattr(machine, "core", None)
                    if core is not None and not is_similar_to(core, truth, scenario.params):
                        violations.append("core-coherence")
    return {
        "decisions": {f"{p}/{t}": v for (p, t), v in sorted(decisions.items())},
        "undecided": [f"{p}/{t}" for p, t in result.undecided_honest(corrupted)],
        "violations": violations,
    }


def cmd_run(args) -> int:
    scenario = Scenario.load(args.scenario)
    machines: dict = {}
    result = run(
        scenario.machine_factory(machines),
        scenario.params,
        scenario.net,
        scenario.script,
        scenario.inputs,
        scenario.seed,
    )
    summary = _check_run_properties(scenario, result, machines)
    summary["trace_hash"] = result.trace.sha256()
    summary["horizon_exceeded"] = result.horizon_exceeded
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(result.trace.jsonl())
        summary["trace_file"] = args.trace
    if scenario.protocol == "acs":
        summary["decisions"] = {
            key: (value.encode() if isinstance(value, InputConfiguration) else value)
            for key, value in summary["decisions"].items()
        }
    _emit(summary, args.pretty)
    return EXIT_VIOLATION if summary["violations"] else EXIT_OK


# ---------------------------------------------------------------- fuzz


def cmd_fuzz(args) -> int:
    scenario = Scenario.load(args.scenario)
    total_violations = 0
    decided_runs = 0
    max_decision_time = 0
    for offset in range(args.seeds):
        seed = scenario.seed + offset
        machines: dict = {}
        result = run(
            scenario.machine_factory(machines),
            scenario.params,
            scenario.net,
            scenario.script,
            scenario.inputs,
            seed,
        )
        summary = _check_run_properties(scenario, result, machines)
        total_violations += len(summary["violations"])
        if not summary["undecided"]:
            decided_runs += 1
            decide_times = [t for t, kind, *_ in result.trace.events if kind == "DECIDE"]
            if decide_times:
                max_decision_time = max(max_decision_time, max(decide_times))
    report = {
        "runs": args.seeds,
        "decided_fraction": decided_runs / args.seeds,
        "violations": total_violations,
        "max_decision_time": max_decision_time,
    }
    _emit(report, args.pretty)
    return EXIT_VIOLATION if total_violations else EXIT_OK


# ---------------------------------------------------------------- attack


def _attack_factory(name: str, params, delta: int):
    if name in attacks.STRAWMEN:
        cls = attacks.STRAWMEN[name]
        return lambda p: cls()
    if name.startswith("constant:"):
        value = name.split(":", 1)[1]
        return lambda p: ConstantProtocol(value)
    if name == "bin-ba":
        return lambda p: BinaryBa(params, delta, enforce_bounds=False, labels=("0", "1"))
    if name.startswith("universal:"):
        # the real stack at possibly-illegal parameters, with a best-effort
        # sigma where the similarity condition fails
        prop, domain = catalog.resolve(name.split(":", 1)[1], values=2)
        cert = attacks.best_effort_certificate(prop, params, domain)
        return lambda p: UniversalBa(params, delta, cert, enforce_bounds=False)
    raise ConfigError(f"unknown attack protocol {name!r}")


def cmd_attack(args) -> int:
    inputs_one = InputConfiguration.decode(args.i1) if "=" in args.i1 else None
    params = None
    if args.scenario_kind in ("split-brain", "triple-partition"):
        params = SystemParams(args.n, args.ts, args.ta, args.setup.upper())
        if inputs_one is None:
            inputs_one = InputConfiguration.of((p, args.i1) for p in range(params.n))
            inputs_two = InputConfiguration.of((p, args.i2) for p in range(params.n))
        else:
            inputs_two = InputConfiguration.decode(args.i2)
        factory = _attack_factory(args.protocol, params, args.delta)
        if args.scenario_kind == "split-brain":
            report = attacks.split_brain(
                factory, params, inputs_one, inputs_two, args.seed, delta=args.delta
            )
        else:
            report = attacks.triple_partition(
                factory, params, inputs_one, inputs_two, args.seed, delta=args.delta
            )
    else:
        if inputs_one is None:
            inputs_one = InputConfiguration.of((p, args.i1) for p in range(3))
            inputs_two = InputConfiguration.of((p, args.i2) for p in range(3))
        else:
            inputs_two = InputConfiguration.decode(args.i2)
        params3 = SystemParams(3, 1, 0, "NONE")
        factory = _attack_factory(args.protocol, params3, args.delta)
        report = attacks.ring_attack(
            factory, inputs_one, inputs_two, r=args.r, seed=args.seed, delta=args.delta
        )
    _emit(report, args.pretty)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aba",
        description="Network-agnostic byzantine agreement: validity solvability "
        "checker, protocol simulator, and attack demonstrations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_params(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--ts", type=int, required=True)
        p.add_argument("--ta", type=int, required=True)
        p.add_argument("--setup", default="pki", choices=["pki", "none", "PKI", "NONE"])

    def add_validity(p):
        p.add_argument("--validity", default="strong",
                       help="strong | weak | it-strong | interval:<lo>:<hi> | clique:<omega>")
        p.add_argument("--values", type=int, default=2,
                       help="domain size for strong/weak/it-strong")
        p.add_argument("--validity-table", help="JSON file with a custom validity table")
        p.add_argument("--budget", type=int,
                       help="enumeration cap override (also: ABA_BUDGET env var)")

    check = sub.add_parser("check", help="decide solvability of a validity property")
    add_params(check)
    add_validity(check)
    check.add_argument("--pretty", action="store_true")
    check.set_defaults(func=cmd_check)

    cert = sub.add_parser("certificate", help="synthesize a similarity certificate")
    add_params(cert)
    add_validity(cert)
    cert.add_argument("--out", required=True)
    cert.add_argument("--pretty", action="store_true")
    cert.set_defaults(func=cmd_certificate)

    runp = sub.add_parser("run", help="execute one scenario file")
    runp.add_argument("scenario")
    runp.add_argument("--trace", help="write the JSONL trace to this path")
    runp.add_argument("--pretty", action="store_true")
    runp.set_defaults(func=cmd_run)

    fuzz = sub.add_parser("fuzz", help="run a scenario across many seeds")
    fuzz.add_argument("scenario")
    fuzz.add_argument("--seeds", type=int, default=100)
    fuzz.add_argument("--pretty", action="store_true")
    fuzz.set_defaults(func=cmd_fuzz)

    attack = sub.add_parser("attack", help="run a lower-bound construction")
    attack.add_argument("scenario_kind", choices=["split-brain", "triple-partition", "ring"])
    attack.add_argument("--protocol", default="local-min",
                        help="local-min | majority | constant:<v> | bin-ba")
    attack.add_argument("--n", type=int, default=4)
    attack.add_argument("--ts", type=int, default=2)
    attack.add_argument("--ta", type=int, default=0)
    attack.add_argument("--setup", default="pki")
    attack.add_argument("--i1", default="0", help="first input value or encoded configuration")
    attack.add_argument("--i2", default="1", help="second input value or encoded configuration")
    attack.add_argument("--r", type=int, default=1, help="ring round bound")
    attack.add_argument("--seed", type=int, default=1)
    attack.add_argument("--delta", type=int, default=10)
    attack.add_argument("--pretty", action="store_true")
    attack.set_defaults(func=cmd_attack)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
