import json

import numpy as np
import pytest

from distributed_observer.cli import build_parser, main


def _run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_parser_requires_a_command():
    args = build_parser().parse_args(["verify", "--count", "3"])
    assert args.command == "verify"
    assert args.config is None
    assert args.count == 3


def test_synthesize_writes_artifacts(write_scenario, scenario_doc, tmp_path, capsys):
    out = tmp_path / "out"
    code, captured = _run(["synthesize", "--config", write_scenario(scenario_doc), "--out", str(out)], capsys)
    assert code == 0
    paths = json.loads(captured.out)
    report = json.loads(open(paths["certificates"], encoding="utf-8").read())
    assert report["passed"] is True
    assert report["q_selection"]["q"] == 2
    assert (out / "two_agent_diag_synthesis.json").is_file()


def test_synthesize_non_jointly_observable(write_scenario, scenario_doc, tmp_path, capsys):
    scenario_doc["plant"]["sensors"] = [[[0.0, 1.0]], [[0.0, 1.0]]]
    code, captured = _run(["synthesize", "--config", write_scenario(scenario_doc), "--out", str(tmp_path)], capsys)
    assert code == 2
    record = json.loads(captured.err.strip().splitlines()[-1])
    assert record["message"] == "joint observability violated"
    assert record["exit_code"] == 2


def test_disconnected_graph_fails_at_load(write_scenario, scenario_doc, tmp_path, capsys):
    scenario_doc["network"]["graphs"] = [[[2, 1]]]
    code, captured = _run(["simulate", "--config", write_scenario(scenario_doc), "--out", str(tmp_path)], capsys)
    assert code == 2
    assert json.loads(captured.err.strip().splitlines()[-1])["label"] == "strong-connectivity"


def test_missing_config_file(tmp_path, capsys):
    code, _ = _run(["verify", "--config", str(tmp_path / "nope.yaml")], capsys)
    assert code == 2


def test_simulate_prints_summary(write_scenario, scenario_doc, tmp_path, capsys):
    code, captured = _run(["simulate", "--config", write_scenario(scenario_doc), "--out", str(tmp_path)], capsys)
    assert code == 0
    summary = json.loads(captured.out)
    assert summary["measured_rate"] <= 0.85
    assert summary["rate_target_met"] is True


def test_simulate_explicit_q_still_exits_zero(write_scenario, scenario_doc, tmp_path, capsys):
    scenario_doc["observer"].update({"q_method": "explicit", "q": 1})
    code, captured = _run(["simulate", "--config", write_scenario(scenario_doc), "--out", str(tmp_path)], capsys)
    assert code == 0
    assert json.loads(captured.out)["rate_target_met"] is False


def test_verify_scenario(write_scenario, scenario_doc, tmp_path, capsys):
    code, captured = _run(["verify", "--config", write_scenario(scenario_doc), "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "checks passed" in captured.out
    assert "FAIL" not in captured.out


def test_verify_tampered_gains_exit_code(write_scenario, scenario_doc, tmp_path, capsys):
    path = write_scenario(scenario_doc)
    assert main(["synthesize", "--config", path, "--out", str(tmp_path)]) == 0
    gains = tmp_path / "two_agent_diag_synthesis.json"
    artifact = json.loads(gains.read_text(encoding="utf-8"))
    for entry in artifact["gains"]:
        entry["K_bar"] = np.zeros(entry["K_bar_shape"]).tolist()
    gains.write_text(json.dumps(artifact), encoding="utf-8")
    capsys.readouterr()

    code, captured = _run(["verify", "--config", path, "--gains", str(gains)], capsys)
    assert code == 3
    assert "FAIL" in captured.out
    assert json.loads(captured.err.strip().splitlines()[-1])["exit_code"] == 3


def test_verify_random_suite(capsys):
    code, captured = _run(["verify", "--count", "2", "--seed", "0", "--tau-max", "30"], capsys)
    assert code == 0
    assert "FAIL" not in captured.out


def test_verify_random_suite_honours_zero_events(capsys):
    code, captured = _run(["verify", "--count", "1", "--seed", "0", "--tau-max", "0"], capsys)
    assert code == 0
    assert "tau_max=0" in captured.out
    assert "tau_max=50" not in captured.out


@pytest.mark.parametrize(
    "section, key, value, field",
    [
        ("observer", "lambda", "fast", "observer.lambda"),
        ("simulation", "tau_max", 1.5, "simulation.tau_max"),
        ("simulation", "tau_max", "ten", "simulation.tau_max"),
        ("simulation", "seed", "abc", "simulation.seed"),
        ("simulation", "x0", ["a", "b"], "simulation.x0"),
        ("network", "period", "soon", "network.period"),
        ("plant", "n", "two", "plant.n"),
        ("plant", "m", 2.5, "plant.m"),
    ],
)
@pytest.mark.parametrize("command", ["synthesize", "simulate"])
def test_malformed_scenario_values_exit_with_code_two(
    command, section, key, value, field, write_scenario, scenario_doc, tmp_path, capsys
):
    scenario_doc.setdefault(section, {})[key] = value
    code, captured = _run([command, "--config", write_scenario(scenario_doc), "--out", str(tmp_path)], capsys)
    assert code == 2
    record = json.loads(captured.err.strip().splitlines()[-1])
    assert record["error"] == "InvalidInputError"
    assert field in record["message"]


def test_malformed_matrix_entry_exits_with_code_two(write_scenario, scenario_doc, tmp_path, capsys):
    scenario_doc["plant"]["A"] = [[2.0, "x"], [0.0, 3.0]]
    code, captured = _run(["synthesize", "--config", write_scenario(scenario_doc), "--out", str(tmp_path)], capsys)
    assert code == 2
    assert json.loads(captured.err.strip().splitlines()[-1])["exit_code"] == 2
