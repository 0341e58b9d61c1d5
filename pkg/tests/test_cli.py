"""CLI exit-code contract and end-to-end command flows."""

import json

from aba.cli import main


def invoke(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_solvable_exit_zero(capsys):
    code, out, _ = invoke(capsys, "check", "--validity", "strong",
                          "--n", "4", "--ts", "1", "--ta", "1", "--setup", "pki")
    assert code == 0
    payload = json.loads(out)
    assert payload["verdict"]["solvable"] is True


def test_check_unsolvable_exit_three(capsys):
    code, out, _ = invoke(capsys, "check", "--validity", "clique:3",
                          "--n", "6", "--ts", "2", "--ta", "0", "--setup", "pki")
    assert code == 3
    payload = json.loads(out)
    assert payload["verdict"]["reason"] == "SIMILARITY_FAILS"
    assert "witness" in payload["verdict"]


def test_check_n_too_small(capsys):
    code, out, _ = invoke(capsys, "check", "--validity", "strong",
                          "--n", "3", "--ts", "1", "--ta", "1", "--setup", "pki")
    assert code == 3
    assert json.loads(out)["verdict"]["reason"] == "N_TOO_SMALL"


def test_check_bad_params_exit_two(capsys):
    code, _, err = invoke(capsys, "check", "--validity", "strong",
                          "--n", "2", "--ts", "3", "--ta", "0")
    assert code == 2
    assert "configuration error" in err


def test_check_budget_exit_four(capsys, monkeypatch):
    monkeypatch.setenv("ABA_BUDGET", "5")
    code, _, err = invoke(capsys, "check", "--validity", "strong",
                          "--n", "4", "--ts", "1", "--ta", "1")
    assert code == 4
    assert "budget" in err.lower()


def test_certificate_writes_file(capsys, tmp_path):
    out_path = tmp_path / "cert.json"
    code, out, _ = invoke(capsys, "certificate", "--validity", "strong",
                          "--n", "4", "--ts", "1", "--ta", "1", "--setup", "pki",
                          "--out", str(out_path))
    assert code == 0
    data = json.loads(out_path.read_text())
    assert len(data["sigma"]) == 48
    assert json.loads(out)["entries"] == 48


def test_certificate_unsolvable_no_file(capsys, tmp_path):
    out_path = tmp_path / "cert.json"
    code, _, err = invoke(capsys, "certificate", "--validity", "clique:3",
                          "--n", "6", "--ts", "2", "--ta", "0", "--setup", "pki",
                          "--out", str(out_path))
    assert code == 3
    assert not out_path.exists()
    assert "witness" in err


def scenario_file(tmp_path, **overrides):
    data = {
        "params": {"n": 4, "t_s": 1, "t_a": 1, "setup": "PKI"},
        "protocol": "bin-ba",
        "validity": "strong",
        "network": {"mode": "SYNCHRONOUS", "delta": 10, "horizon": 6000},
        "adversary": {"delivery": {"kind": "exact"}},
        "inputs": {"0": "1", "1": "1", "2": "1", "3": "1"},
        "seed": 7,
    }
    data.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_run_scenario_exit_zero(capsys, tmp_path):
    path = scenario_file(tmp_path)
    code, out, _ = invoke(capsys, "run", path)
    assert code == 0
    payload = json.loads(out)
    assert payload["violations"] == []
    assert set(payload["decisions"].values()) == {"1"}


def test_run_replay_same_trace_hash(capsys, tmp_path):
    path = scenario_file(tmp_path)
    _, out1, _ = invoke(capsys, "run", path)
    _, out2, _ = invoke(capsys, "run", path)
    assert json.loads(out1)["trace_hash"] == json.loads(out2)["trace_hash"]


def test_run_writes_trace_file(capsys, tmp_path):
    path = scenario_file(tmp_path)
    trace_path = tmp_path / "trace.jsonl"
    code, out, _ = invoke(capsys, "run", path, "--trace", str(trace_path))
    assert code == 0
    lines = trace_path.read_text().strip().splitlines()
    assert lines
    event = json.loads(lines[0])
    assert {"t", "kind", "party", "replica", "detail"} <= set(event)


def test_run_universal_with_certificate(capsys, tmp_path):
    cert_path = tmp_path / "cert.json"
    code, _, _ = invoke(capsys, "certificate", "--validity", "strong",
                        "--n", "4", "--ts", "1", "--ta", "1", "--setup", "pki",
                        "--out", str(cert_path))
    assert code == 0
    path = scenario_file(
        tmp_path,
        protocol="universal",
        certificate=str(cert_path),
        inputs={"0": "0", "1": "0", "2": "0", "3": "0"},
    )
    code, out, _ = invoke(capsys, "run", path)
    assert code == 0
    payload = json.loads(out)
    assert set(payload["decisions"].values()) == {"0"}
    assert payload["violations"] == []


def test_run_acs_scenario(capsys, tmp_path):
    path = scenario_file(tmp_path, protocol="acs",
                         inputs={"0": "0", "1": "1", "2": "0", "3": "1"})
    code, out, _ = invoke(capsys, "run", path)
    assert code == 0
    payload = json.loads(out)
    assert payload["violations"] == []
    core = set(payload["decisions"].values())
    assert core == {"p0=0;p1=1;p2=0;p3=1"}


def test_run_missing_file_exit_two(capsys):
    code, _, err = invoke(capsys, "run", "/nonexistent/scenario.json")
    assert code == 2


def test_fuzz_aggregate(capsys, tmp_path):
    path = scenario_file(
        tmp_path,
        adversary={"delivery": {"kind": "random", "max_delay": 20},
                   "corrupted": {"3": {"behavior": "FOLLOW_WITH_INPUT", "value": "0"}}},
        network={"mode": "ASYNCHRONOUS", "delta": 10, "horizon": 8000},
        inputs={"0": "1", "1": "1", "2": "1"},
    )
    code, out, _ = invoke(capsys, "fuzz", path, "--seeds", "15")
    assert code == 0
    payload = json.loads(out)
    assert payload["violations"] == 0
    assert payload["decided_fraction"] >= 0.95


def test_attack_split_brain_cli(capsys):
    code, out, _ = invoke(capsys, "attack", "split-brain", "--protocol", "local-min",
                          "--n", "4", "--ts", "2", "--ta", "0", "--seed", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["checks"]["cross_group_disagreement"] is True


def test_attack_ring_cli(capsys):
    code, out, _ = invoke(capsys, "attack", "ring", "--protocol", "majority",
                          "--r", "1", "--seed", "2")
    assert code == 0
    payload = json.loads(out)
    assert payload["node_count"] == 24
    assert payload["checks"]["all_middle_fidelity"] is True
