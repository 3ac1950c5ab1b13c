import json

import pytest

from riccicert.cli import run


def call(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = run(argv + ["--output", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_bp_order(tmp_path):
    code, doc = call(["bp-order", "2"], tmp_path)
    assert code == 0 and doc["result"]["b_k"] == 28 and doc["schema_version"] == 1


def test_lens_search_empty_exit_1(tmp_path):
    code, doc = call(["lens-search", "3", "2"], tmp_path)
    assert code == 1 and doc["result"]["tuples"] == []


def test_lens_search_budget_partial(tmp_path):
    code, doc = call(["lens-search", "13", "2", "--budget", "2"], tmp_path)
    assert code == 2 and doc["result"]["exhaustive"] is False


def test_genus_rational_strings(tmp_path):
    nums = tmp_path / "n.json"
    nums.write_text(json.dumps({"k": 1, "numbers": {"1": 1}}))
    code, doc = call(["genus", "--series", "ahat", "--numbers", str(nums)], tmp_path)
    assert doc["result"]["value"] == "-1/24"


def test_usage_errors(tmp_path):
    assert run(["no-such-command"]) == 64
    assert run(["bp-order"]) == 64
    assert run(["verify-drup", "--fixture", str(tmp_path / "missing.json")]) == 64
    assert run(["verify-drup", "--fixture", "round.json", "--grid", "4"]) == 64
    assert run([]) == 64


def test_verify_path_s5(tmp_path):
    code, doc = call(["verify-path", "--fixture", "s5.json", "--mode", "certified"], tmp_path)
    assert code == 0
    assert doc["result"]["verdict"] == "Verified" and doc["result"]["closure"]["passed"]


def test_config_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"grid": 64}))
    _, doc = call(["verify-drup", "--fixture", "round.json", "--config", str(conf)], tmp_path)
    assert doc["config"]["grid"] == 64
    _, doc = call(["verify-drup", "--fixture", "round.json", "--config", str(conf), "--grid", "32"], tmp_path)
    assert doc["config"]["grid"] == 32
    _, doc = call(["verify-drup", "--fixture", "round.json"], tmp_path)
    assert doc["config"]["grid"] is None


def test_deterministic_and_thread_independent(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    run(["verify-drup", "--fixture", "s5.json", "--threads", "1", "--output", str(a)])
    run(["verify-drup", "--fixture", "s5.json", "--threads", "6", "--output", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("argv", [
    ["components", "--k", "2", "--q-range=-3..3", "--m", "100"],
    ["glue-check", "ball_pi4.json", "socket_half.json"],
    ["verify-drup", "--fixture", "s5.json", "--grid", "128"],
    ["lens-check", "5", "1", "1", "2", "2"],
])
def test_check_cert_round_trip(tmp_path, argv):
    code, _ = call(argv, tmp_path, "cert.json")
    code2, doc = call(["check-cert", str(tmp_path / "cert.json")], tmp_path, "check.json")
    assert code2 == 0 and doc["result"]["consistent"], doc["result"]["problems"]


def test_check_cert_detects_tampering(tmp_path):
    call(["verify-drup", "--fixture", "round.json", "--grid", "64"], tmp_path, "cert.json")
    p = tmp_path / "cert.json"
    doc = json.loads(p.read_text())
    doc["result"]["components"]["ric_rr"]["grid_min"] = 99.0
    p.write_text(json.dumps(doc))
    code, res = call(["check-cert", str(p)], tmp_path, "check.json")
    assert code == 1 and not res["result"]["consistent"]


def test_verify_disk_large_c(tmp_path):
    code, doc = call(["verify-disk", "--c", "1.7", "--grid", "128"], tmp_path)
    assert code == 1
    assert [s["verdict"] for s in doc["result"]["stages"]][:2] == ["Verified", "Falsified"]


def test_hypothesis_violation_exit_1(tmp_path):
    code, doc = call(["verify-path", "--fixture", "round.json"], tmp_path)
    assert code == 1 and doc["result"]["error"] == "HypothesisViolated"
