"""Executable lower-bound constructions: run a protocol inside the partition
and ring wirings that make agreement or validity break below the resilience
thresholds.

The strawman fixtures are intentionally NOT secure protocols; they decide
from local views so the constructions have something to break.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .core import InputConfiguration, SystemParams
from .errors import ConfigError
from .simnet import (
    ASYNCHRONOUS,
    SYNCHRONOUS,
    AdversaryScript,
    Broadcast,
    Decide,
    DeliveryPolicy,
    NetworkConfig,
    NodeInstance,
    SetTimer,
    Simulation,
    SyncExactDelay,
    canonical_schedule,
    replicate,
    run,
)
from .protocols.base import Machine

MachineFactory = Callable[[int], Machine]


# ---------------------------------------------------------------- strawmen


class LocalMinStrawman(Machine):
    """NOT SECURE: broadcasts its input and, after tolerating 2 deltas of
    silence, decides the minimum value it has seen. Decides locally, so any
    partition that isolates a group splits the decision."""

    def __init__(self):
        self.seen: list = []

    def on_start(self, ctx, value):
        self.seen.append(str(value))
        return [Broadcast(("IN", str(value))), SetTimer("cut", 2 * ctx.delta)]

    def on_message(self, ctx, src, payload):
        if payload[0] == "IN":
            self.seen.append(payload[1])
        return []

    def on_timer(self, ctx, tag):
        return [Decide(min(self.seen))]


class MajoritySelfBiasStrawman(Machine):
    """NOT SECURE: one exchange round, then decides the majority of received
    inputs, breaking ties toward its own."""

    def __init__(self):
        self.own = None
        self.seen: list = []

    def on_start(self, ctx, value):
        self.own = str(value)
        self.seen.append(self.own)
        return [Broadcast(("IN", self.own)), SetTimer("cut", ctx.delta + 1)]

    def on_message(self, ctx, src, payload):
        if payload[0] == "IN":
            self.seen.append(payload[1])
        return []

    def on_timer(self, ctx, tag):
        counts: dict = {}
        for v in self.seen:
            counts[v] = counts.get(v, 0) + 1
        best = max(counts.values())
        winners = sorted(v for v, c in counts.items() if c == best)
        value = self.own if self.own in winners else winners[0]
        return [Decide(value)]


STRAWMEN: dict[str, Callable[[], Machine]] = {
    "local-min": LocalMinStrawman,
    "majority": MajoritySelfBiasStrawman,
}


def best_effort_certificate(prop, params: SystemParams, domain):
    """A deliberately UNSOUND sigma table for experiments at parameters where
    the similarity condition fails: configurations whose similar-intersection
    is empty fall back to the smallest directly-valid value. Never use this
    outside attack demonstrations."""
    from .core import SimilarityCertificate, enumerate_input_configs, similar

    sigma = {}
    for config in enumerate_input_configs(params, domain):
        common = None
        for other in similar(config, params, domain):
            vals = prop.evaluate(params, domain, other)
            common = vals if common is None else common & vals
        if not common:
            common = prop.evaluate(params, domain, config)
        sigma[config.encode()] = domain.min_output(common)
    return SimilarityCertificate(params=params, domain=domain, sigma=sigma)


# ---------------------------------------------------------------- reports


def _decision_table(outcomes) -> dict:
    return {
        f"{party}/{tag}": (value if status == "DECIDED" else None)
        for (party, tag), (status, value) in sorted(outcomes.items())
    }


def _group_decisions(outcomes, keys) -> list:
    return [outcomes[key][1] if outcomes[key][0] == "DECIDED" else None for key in keys]


def _all_equal_decided(values) -> bool:
    return all(v is not None for v in values) and len(set(values)) == 1


# ---------------------------------------------------------------- split brain


@dataclass(frozen=True)
class PartitionLayout:
    """Left / middle / right party groups with |L| = |R| = t_s, |M| = t_a."""

    params: SystemParams

    def __post_init__(self):
        if self.params.n != 2 * self.params.t_s + self.params.t_a:
            raise ConfigError("partition layouts need n = 2*t_s + t_a exactly")

    @property
    def left(self) -> tuple[int, ...]:
        return tuple(range(self.params.t_s))

    @property
    def middle(self) -> tuple[int, ...]:
        return tuple(range(self.params.t_s, self.params.t_s + self.params.t_a))

    @property
    def right(self) -> tuple[int, ...]:
        return tuple(range(self.params.t_s + self.params.t_a, self.params.n))


def split_brain(
    factory: MachineFactory,
    params: SystemParams,
    inputs_one: InputConfiguration,
    inputs_two: InputConfiguration,
    seed: int,
    delta: int = 10,
    horizon: int = 4000,
) -> dict:
    """Two-group indistinguishability demonstration at n = 2*t_s.

    Runs, with one seed: (a) canonical with the right group crashed on the
    first input set, (b) canonical with the left group crashed on the second,
    (c) asynchronous with cross-group messages delayed until their sender
    decides, mixed inputs, and (d) the full canonical run. Reports whether
    each group in (c) matches its isolated run, which is the
    indistinguishability the impossibility argument exploits.
    """
    if params.t_a != 0:
        raise ConfigError("split_brain runs the warm-up case t_a = 0")
    layout = PartitionLayout(params)
    left, right = layout.left, layout.right
    mixed = InputConfiguration.of(
        [(p, inputs_one.value_of(p)) for p in left]
        + [(p, inputs_two.value_of(p)) for p in right]
    )

    def canonical(crashed, inputs):
        net, script = canonical_schedule(crashed, delta=delta, horizon=horizon)
        return run(factory, params, net, script, inputs, seed)

    run_a = canonical(set(right), inputs_one)
    run_b = canonical(set(left), inputs_two)
    from .simnet import PartitionPolicy

    net_c = NetworkConfig(mode=ASYNCHRONOUS, delta=delta, horizon=horizon)
    script_c = AdversaryScript(delivery=PartitionPolicy([set(left), set(right)]))
    run_c = run(factory, params, net_c, script_c, mixed, seed)
    run_d = canonical(set(), inputs_one)

    keys_l = [(p, 0) for p in left]
    keys_r = [(p, 0) for p in right]
    c_left = _group_decisions(run_c.outcomes, keys_l)
    c_right = _group_decisions(run_c.outcomes, keys_r)
    a_left = _group_decisions(run_a.outcomes, keys_l)
    b_right = _group_decisions(run_b.outcomes, keys_r)

    return {
        "scenario": "split-brain",
        "params": params.to_dict(),
        "seed": seed,
        "executions": {
            "a_right_crashed": {"decisions": _decision_table(run_a.outcomes),
                                "trace_hash": run_a.trace.sha256()},
            "b_left_crashed": {"decisions": _decision_table(run_b.outcomes),
                               "trace_hash": run_b.trace.sha256()},
            "c_partitioned": {"decisions": _decision_table(run_c.outcomes),
                              "trace_hash": run_c.trace.sha256()},
            "d_full_canonical": {"decisions": _decision_table(run_d.outcomes),
                                 "trace_hash": run_d.trace.sha256()},
        },
        "checks": {
            "left_in_c_matches_a": c_left == a_left and _all_equal_decided(c_left),
            "right_in_c_matches_b": c_right == b_right and _all_equal_decided(c_right),
            "within_left_agreement": _all_equal_decided(c_left) or all(v is None for v in c_left),
            "within_right_agreement": _all_equal_decided(c_right) or all(v is None for v in c_right),
            "cross_group_disagreement": (
                _all_equal_decided(c_left)
                and _all_equal_decided(c_right)
                and c_left[0] != c_right[0]
            ),
            "any_undecided": bool(run_a.undecided_honest(right) or run_b.undecided_honest(left)
                                  or run_c.undecided_honest() or run_d.undecided_honest()),
        },
    }


# ---------------------------------------------------------------- triple partition


class _SidedPartitionPolicy(DeliveryPolicy):
    """Instance-aware partition policy: intra-side one unit, cross-side held
    until the sending party decides (flushed at the horizon)."""

    def __init__(self, side_of: dict[tuple, int]):
        self.side_of = dict(side_of)
        self._held: list = []
        self._decided: set[int] = set()

    def schedule(self, env, rng):
        src = self.side_of.get(tuple(env.src))
        dst = self.side_of.get(tuple(env.dst))
        if src is None or dst is None or src == dst or env.src[0] in self._decided:
            return env.sent_at + 1
        self._held.append(env)
        return None

    def on_decide(self, party, now):
        self._decided.add(party)
        released = [(env, now + 1) for env in self._held if env.src[0] in self._decided]
        self._held = [env for env in self._held if env.src[0] not in self._decided]
        return released

    def flush(self):
        held, self._held = self._held, []
        return held


def _triple_nodes(layout: PartitionLayout, mixed_inputs: dict, control: bool):
    """Node instances and routes for the duplicated-middle wiring."""
    left, middle, right = layout.left, layout.middle, layout.right
    nodes = []
    side_of = {}

    def middle_route(tag):
        # same-copy middle traffic plus the copy's own side; the far side is
        # discarded in transit
        route: dict[int, Any] = {m: (m, tag) for m in middle}
        if tag == 0:
            route.update({r: None for r in right})
        else:
            route.update({l: None for l in left})
        return route

    outer_route = {m: [(m, 0), (m, 1)] for m in middle}
    for p in left:
        nodes.append(NodeInstance(party_id=p, input=mixed_inputs[("L", p)],
                                  route=dict(outer_route)))
        side_of[(p, 0)] = 0
    for p in right:
        nodes.append(NodeInstance(party_id=p, input=mixed_inputs[("R", p)],
                                  route=dict(outer_route)))
        side_of[(p, 0)] = 1
    for m in middle:
        copy_l, copy_r = replicate(m, 2)
        copy_l.input = mixed_inputs[("M0", m)]
        copy_l.route = middle_route(0)
        copy_r.input = mixed_inputs[("M1", m)]
        copy_r.route = middle_route(1)
        nodes += [copy_l, copy_r]
        side_of[(m, 0)] = 0
        side_of[(m, 1)] = 1
    return nodes, side_of


def triple_partition(
    factory: MachineFactory,
    params: SystemParams,
    inputs_one: InputConfiguration,
    inputs_two: InputConfiguration,
    seed: int,
    delta: int = 10,
    horizon: int = 4000,
) -> dict:
    """Duplicated-middle partition at n = 2*t_s + t_a.

    The middle group exists twice; left-to-middle traffic reaches both copies,
    each copy's messages toward the far side are discarded, and left-right
    traffic is delayed until the sender decides. A synchronous control run
    (all inputs from the first configuration, uniform delta) checks that both
    middle copies produce identical transcripts.
    """
    layout = PartitionLayout(params)
    left, middle, right = layout.left, layout.middle, layout.right
    if not middle:
        report = split_brain(factory, params, inputs_one, inputs_two, seed, delta, horizon)
        report["scenario"] = "triple-partition"
        report["degenerate_no_middle"] = True
        return report

    def value_map(control: bool) -> dict:
        out = {}
        for p in left:
            out[("L", p)] = inputs_one.value_of(p)
        for p in right:
            out[("R", p)] = (inputs_one if control else inputs_two).value_of(p)
        for m in middle:
            out[("M0", m)] = inputs_one.value_of(m)
            out[("M1", m)] = (inputs_one if control else inputs_two).value_of(m)
        return out

    def build_and_run(control: bool):
        net = NetworkConfig(
            mode=SYNCHRONOUS if control else ASYNCHRONOUS, delta=delta, horizon=horizon
        )
        nodes, side_of = _triple_nodes(layout, value_map(control), control)
        policy = SyncExactDelay(delta) if control else _SidedPartitionPolicy(side_of)
        sim = Simulation(params, net, seed, policy=policy)
        for node in nodes:
            sim.add_node(node, factory)
        outcomes = sim.run()
        return sim, outcomes

    control_sim, control_outcomes = build_and_run(control=True)
    replica_checks = {}
    for m in middle:
        t0 = control_sim.trace.node_transcript((m, 0))
        t1 = control_sim.trace.node_transcript((m, 1))
        replica_checks[str(m)] = (
            control_sim.trace.transcript_hash(t0) == control_sim.trace.transcript_hash(t1)
        )

    attack_sim, attack_outcomes = build_and_run(control=False)
    side_l = [(p, 0) for p in left] + [(m, 0) for m in middle]
    side_r = [(p, 0) for p in right] + [(m, 1) for m in middle]
    left_decisions = _group_decisions(attack_outcomes, side_l)
    right_decisions = _group_decisions(attack_outcomes, side_r)

    return {
        "scenario": "triple-partition",
        "params": params.to_dict(),
        "seed": seed,
        "groups": {"left": list(left), "middle": list(middle), "right": list(right)},
        "control": {
            "decisions": _decision_table(control_outcomes),
            "middle_replicas_identical": replica_checks,
            "trace_hash": control_sim.trace.sha256(),
        },
        "attack": {
            "decisions": _decision_table(attack_outcomes),
            "trace_hash": attack_sim.trace.sha256(),
        },
        "checks": {
            "replicas_identical": all(replica_checks.values()),
            "within_left_agreement": _all_equal_decided(left_decisions)
            or all(v is None for v in left_decisions),
            "within_right_agreement": _all_equal_decided(right_decisions)
            or all(v is None for v in right_decisions),
            "cross_group_disagreement": (
                _all_equal_decided(left_decisions)
                and _all_equal_decided(right_decisions)
                and left_decisions[0] != right_decisions[0]
            ),
        },
    }


# ---------------------------------------------------------------- ring


@dataclass(frozen=True)
class RingLayout:
    """Two rows of 3-party copies joined into one cycle of 12*(r+1) nodes.

    Rows are indexed k in {1, 2}, columns j in [0, 2r+1], parties i in
    {0, 1, 2}; node (k, i, j) is the copy of party i at that position. Within
    a column parties 0-1 and 1-2 are joined; row 1 advances via (1,2,j) to
    (1,0,j+1), row 2 via (2,0,j) to (2,2,j+1); the rows close the cycle at
    (1,0,0)-(2,2,0) and (1,2,2r+1)-(2,0,2r+1).
    """

    r: int

    def __post_init__(self):
        if self.r < 0:
            raise ConfigError("round bound r must be non-negative")

    @property
    def columns(self) -> int:
        return 2 * self.r + 2

    def tag(self, k: int, j: int) -> int:
        return (k - 1) * self.columns + j

    def node_ids(self) -> list[tuple[int, int, int]]:
        return [
            (k, i, j)
            for k in (1, 2)
            for j in range(self.columns)
            for i in range(3)
        ]

    def key(self, k: int, i: int, j: int) -> tuple[int, int]:
        return (i, self.tag(k, j))

    def channels(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        last = self.columns - 1
        edges = []
        for k in (1, 2):
            for j in range(self.columns):
                edges.append((self.key(k, 0, j), self.key(k, 1, j)))
                edges.append((self.key(k, 1, j), self.key(k, 2, j)))
            for j in range(last):
                if k == 1:
                    edges.append((self.key(1, 2, j), self.key(1, 0, j + 1)))
                else:
                    edges.append((self.key(2, 0, j), self.key(2, 2, j + 1)))
        edges.append((self.key(1, 0, 0), self.key(2, 2, 0)))
        edges.append((self.key(1, 2, last), self.key(2, 0, last)))
        return edges

    def routes(self) -> dict[tuple[int, int], dict[int, tuple[int, int]]]:
        """Per-node map: logical party -> adjacent instance (self included)."""
        last = self.columns - 1
        routes: dict[tuple[int, int], dict[int, Any]] = {}
        for k, i, j in self.node_ids():
            key = self.key(k, i, j)
            route: dict[int, Any] = {i: key}
            if i == 1:
                route[0] = self.key(k, 0, j)
                route[2] = self.key(k, 2, j)
            elif k == 1 and i == 0:
                route[1] = self.key(1, 1, j)
                route[2] = self.key(1, 2, j - 1) if j > 0 else self.key(2, 2, 0)
            elif k == 1 and i == 2:
                route[1] = self.key(1, 1, j)
                route[0] = self.key(1, 0, j + 1) if j < last else self.key(2, 0, last)
            elif k == 2 and i == 0:
                route[1] = self.key(2, 1, j)
                route[2] = self.key(2, 2, j + 1) if j < last else self.key(1, 2, last)
            else:  # k == 2, i == 2
                route[1] = self.key(2, 1, j)
                route[0] = self.key(2, 0, j - 1) if j > 0 else self.key(1, 0, 0)
            routes[key] = route
        return routes

    def node_count(self) -> int:
        return 12 * (self.r + 1)


def ring_attack(
    factory: MachineFactory,
    inputs_one: InputConfiguration,
    inputs_two: InputConfiguration,
    r: int,
    seed: int,
    delta: int = 10,
    horizon_rounds: int = 40,
) -> dict:
    """Runs a 3-party protocol around the ring of copies, synchronously with
    exact-delta delivery, and checks the copies at column r of each row
    against the two canonical 3-party executions.

    Requires a protocol that uses no signatures (the construction is invalid
    under PKI); both fixture strawmen and constant protocols qualify.
    """
    params3 = SystemParams(n=3, t_s=1, t_a=0, setup="NONE")
    layout = RingLayout(r)
    horizon = horizon_rounds * delta
    net = NetworkConfig(mode=SYNCHRONOUS, delta=delta, horizon=horizon)

    sim = Simulation(params3, net, seed, policy=SyncExactDelay(delta))
    routes = layout.routes()
    for k, i, j in layout.node_ids():
        key = layout.key(k, i, j)
        source = inputs_one if k == 1 else inputs_two
        sim.add_node(
            NodeInstance(party_id=i, replica_tag=key[1], input=source.value_of(i),
                         route=routes[key]),
            factory,
        )
    outcomes = sim.run()

    # canonical three-party executions with the same randomness
    def canonical(inputs):
        net_c, script = canonical_schedule((), delta=delta, horizon=horizon)
        return run(factory, params3, net_c, script, inputs, seed)

    canon = {1: canonical(inputs_one), 2: canonical(inputs_two)}

    through = r * delta
    fidelity = {}
    decisions_match = {}
    for k in (1, 2):
        for i in range(3):
            key = layout.key(k, i, r)
            ring_t = sim.trace.node_transcript(key, through=through)
            canon_t = canon[k].trace.node_transcript((i, 0), through=through)
            fidelity[f"k{k}/i{i}"] = (
                sim.trace.transcript_hash(ring_t) == sim.trace.transcript_hash(canon_t)
            )
            ring_decision = outcomes[key][1]
            canon_decision = canon[k].outcomes[(i, 0)][1]
            decisions_match[f"k{k}/i{i}"] = ring_decision == canon_decision

    adjacency = []
    for a, b in layout.channels():
        va = outcomes[a][1] if outcomes[a][0] == "DECIDED" else None
        vb = outcomes[b][1] if outcomes[b][0] == "DECIDED" else None
        adjacency.append(
            {"a": f"{a[0]}/{a[1]}", "b": f"{b[0]}/{b[1]}",
             "equal": va is not None and va == vb}
        )

    return {
        "scenario": "ring",
        "r": r,
        "node_count": layout.node_count(),
        "seed": seed,
        "decisions": _decision_table(outcomes),
        "adjacent_equality": adjacency,
        "middle_fidelity": fidelity,
        "middle_decisions_match_canonical": decisions_match,
        "undecided": [f"{p}/{t}" for (p, t), (s, _) in sorted(outcomes.items())
                      if s != "DECIDED"],
        "checks": {
            "all_middle_fidelity": all(fidelity.values()),
            "any_adjacent_disagreement": any(not e["equal"] for e in adjacency),
            "trace_hash": sim.trace.sha256(),
        },
    }
