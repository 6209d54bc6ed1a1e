import csv
import json
from pathlib import Path

import numpy as np
import pytest

from gnsq import checks, cli
from gnsq.cli import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main
from gnsq.config import RunConfig, load_config, parse_config
from gnsq.deterministic import DetSolverConfig
from gnsq.errors import ConfigError
from gnsq.stochastic import Scheme, StochSolverConfig
from gnsq.trace import read_jsonl

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path: Path, name: str, **values) -> Path:
    data = {
        "schema": 1,
        "problem": {"kind": "trig_system", "n": 4, "seed": 0},
        "x0": 0.3,
        "solver": {"kind": "deterministic", "scheme": 1},
        "seeds": [0, 1, 2],
        "output": f"out_{name}",
    }
    data.update(values)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(data))
    return path


def read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def test_parse_deterministic_config(tmp_path):
    cfg = load_config(write_config(tmp_path, "det", solver={"kind": "deterministic", "scheme": 2, "max_outer": 7}))
    assert isinstance(cfg.solver, DetSolverConfig)
    assert cfg.scheme == 2 and cfg.solver.max_outer == 7
    assert cfg.output == tmp_path / "out_det"
    assert cfg.seeds == (0, 1, 2)


def test_parse_stochastic_config_by_number_and_name():
    for scheme in (5, "variable_interval"):
        cfg = parse_config({"schema": 1, "problem": {"kind": "linear", "m": 6, "n": 3}, "solver": {"kind": "stochastic", "scheme": scheme, "b": 2}, "seeds": [4]})
        assert isinstance(cfg.solver, StochSolverConfig)
        assert cfg.solver.scheme is Scheme.VARIABLE_INTERVAL
        assert cfg.solver_for_seed(4).seed == 4


def test_start_point_forms():
    base = {"schema": 1, "problem": {"kind": "trig_system", "n": 3}, "solver": {"kind": "deterministic"}, "seeds": [0]}
    p = parse_config(base).build_problem()
    np.testing.assert_array_equal(parse_config(base).start_point(p), np.zeros(3))
    np.testing.assert_array_equal(parse_config({**base, "x0": 0.5}).start_point(p), np.full(3, 0.5))
    np.testing.assert_array_equal(parse_config({**base, "x0": [1, 2, 3]}).start_point(p), [1.0, 2.0, 3.0])
    with pytest.raises(ConfigError, match="x0"):
        parse_config({**base, "x0": [1, 2]}).start_point(p)


@pytest.mark.parametrize(
    "change, key",
    [
        ({"solver": {"kind": "deterministic", "bogus": 1}}, "solver.bogus"),
        ({"extra": 1}, "extra"),
        ({"schema": 2}, "schema"),
        ({"seeds": []}, "seeds"),
        ({"seeds": [1, 1]}, "seeds"),
        ({"problem": {"kind": "nope"}}, "problem"),
        ({"solver": {"kind": "annealing"}}, "solver.kind"),
        ({"solver": {"kind": "deterministic", "scheme": 3}}, "solver.scheme"),
        ({"solver": {"kind": "stochastic", "scheme": 9}}, "solver.scheme"),
        ({"report_every": -1}, "report_every"),
        ({"x0": "zero"}, "x0"),
    ],
)
def test_malformed_config_names_the_key(tmp_path, capsys, change, key):
    path = write_config(tmp_path, "bad", **change)
    with pytest.raises(ConfigError, match=key):
        load_config(path)
    assert main(["run", str(path)]) == EXIT_ERROR
    assert key in capsys.readouterr().err


def test_invalid_json_is_an_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{")
    assert main(["run", str(path)]) == EXIT_ERROR


def test_run_writes_traces_and_summary(tmp_path):
    path = write_config(tmp_path, "ok")
    assert main(["run", str(path)]) == EXIT_OK
    out = tmp_path / "out_ok"
    rows = read_rows(out / "summary.csv")
    assert len(rows) == 3
    assert list(rows[0]) == list(cli.SUMMARY_FIELDS)
    assert {r["status"] for r in rows} == {"converged"}
    for seed in (0, 1, 2):
        with open(out / f"seed_{seed}.jsonl") as handle:
            assert list(read_jsonl(handle))


def test_run_reports_non_convergence(tmp_path):
    path = write_config(
        tmp_path,
        "short",
        problem={"kind": "rosenbrock_system", "n": 2},
        x0=[-1.2, 1.0],
        solver={"kind": "deterministic", "max_outer": 1},
    )
    assert main(["run", str(path)]) == EXIT_NOT_CONVERGED


def test_interpolation_config_converges(tmp_path):
    data = json.loads((CONFIG_DIR / "interpolation.json").read_text())
    data["output"] = str(tmp_path / "interp")
    path = tmp_path / "interp.json"
    path.write_text(json.dumps(data))
    assert main(["run", str(path)]) == EXIT_OK


def test_problem_file_resolves_relative_to_config(tmp_path):
    (tmp_path / "problem.json").write_text(json.dumps({"kind": "trig_system", "n": 3}))
    path = write_config(tmp_path, "file", problem="problem.json", seeds=[0])
    assert load_config(path).build_problem().n == 3


def test_compare_full_batch_matches_full_batch_method(tmp_path, capsys):
    a = write_config(tmp_path, "a")
    b = write_config(tmp_path, "b", solver={"kind": "stochastic", "scheme": 3, "b": 4})
    target = tmp_path / "compare.csv"
    assert main(["compare", str(a), str(b), "--csv", str(target)]) == EXIT_OK
    rows = read_rows(target)
    assert len(rows) == 3
    for row in rows:
        assert row["iterations_a"] == row["iterations_b"]


def test_compare_same_config_twice(tmp_path):
    a = write_config(tmp_path, "same", solver={"kind": "stochastic", "scheme": 4, "b": 2}, seeds=[0, 1])
    first, second = tmp_path / "one.csv", tmp_path / "two.csv"
    assert main(["compare", str(a), str(a), "--csv", str(first)]) == EXIT_OK
    assert main(["compare", str(a), str(a), "--csv", str(second)]) == EXIT_OK
    rows = read_rows(first)
    assert rows == read_rows(second)
    for row in rows:
        assert row["final_f1hat_a"] == row["final_f1hat_b"]


def test_compare_one_and_two_batch_reports_both(tmp_path):
    a = write_config(tmp_path, "one", solver={"kind": "stochastic", "scheme": 4, "b": 2}, seeds=[0, 1])
    b = write_config(tmp_path, "two", solver={"kind": "stochastic", "scheme": 4, "b": 2, "b_tilde": 3}, seeds=[0, 1])
    target = tmp_path / "pair.csv"
    assert main(["compare", str(a), str(b), "--csv", str(target)]) == EXIT_OK
    rows = read_rows(target)
    assert all(int(r["oracle_calls_b"]) > int(r["oracle_calls_a"]) for r in rows)


@pytest.mark.parametrize(
    "change",
    [
        {"problem": {"kind": "trig_system", "n": 5, "seed": 0}},
        {"problem": {"kind": "trig_system", "n": 4, "seed": 1}},
        {"seeds": [0, 1]},
        {"x0": 0.4},
    ],
)
def test_compare_rejects_mismatched_runs(tmp_path, capsys, change):
    a = write_config(tmp_path, "a")
    b = write_config(tmp_path, "b", **change)
    assert main(["compare", str(a), str(b)]) == EXIT_ERROR
    assert "different" in capsys.readouterr().err


def test_plan_worked_example(tmp_path, capsys):
    constants = tmp_path / "c.json"
    values = dict(L_Fhat=1, M_G=1, M_F=1, P_g1=1, P_f1=1, l_F=1, mu=1, sigma_tilde=0, m=10, n=10)
    constants.write_text(json.dumps(values))
    args = ["plan", "--formula", "21", "--constants", str(constants), "--eps", "1", "--r", "0.5", "--gamma", "1"]
    assert main(args) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"formula": "21", "iterations": 32, "batch_size": 10}


def test_plan_two_batch_needs_damping(tmp_path, capsys):
    constants = tmp_path / "c.json"
    constants.write_text(json.dumps(dict(L_Fhat=1, M_G=1, M_F=1, P_g1=1, P_f1=1, l_F=1, mu=1, sigma_tilde=1)))
    assert main(["plan", "--formula", "28", "--constants", str(constants), "--eps", "0.1"]) == EXIT_ERROR
    assert main(["plan", "--formula", "31", "--constants", str(constants), "--eps", "0.1", "--tau-tilde", "1"]) == EXIT_OK


def test_estimate_prints_constants(tmp_path, capsys):
    problem = tmp_path / "p.json"
    problem.write_text(json.dumps({"kind": "linear", "m": 3, "n": 6}))
    assert main(["estimate", str(problem), "--x0", "0.1", "--batch-size", "2"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["L_Fhat"] == 0.0 and report["mu"] > 0.0


def test_check_negative_control(monkeypatch, capsys):
    corrupted = lambda t: checks.kappa(t) * 1.01
    lemmas = {name: fn for name, fn in checks.LEMMA_CHECKS.items() if name == "kappa"}
    lemmas["kappa"] = lambda: checks.check_kappa(kappa_fn=corrupted)
    monkeypatch.setattr(checks, "LEMMA_CHECKS", lemmas)
    assert main(["check", "--suite", "lemmas"]) == EXIT_CHECK_FAILED
    assert "FAIL" in capsys.readouterr().out


def test_lemma_suite_runs_no_solver(monkeypatch):
    def forbidden(*args, **kwargs):
        raise AssertionError("a solver ran during the lemma suite")

    for name in ("scheme1_run", "scheme2_run", "scheme3_run", "scheme4_run", "scheme5_run", "interpolation_run", "run_seeds"):
        if hasattr(checks, name):
            monkeypatch.setattr(checks, name, forbidden)
    results = checks.run_suite(checks.LEMMAS, seed=1)
    assert [r.name for r in results] == list(checks.LEMMA_CHECKS)
    assert all(r.passed for r in results)


def test_check_json_report_and_radius(monkeypatch, tmp_path):
    seen = {}

    def stationarity(radius=None):
        seen["radius"] = radius
        return checks.check_average_stationarity(radius=radius, seeds=[0])

    monkeypatch.setattr(checks, "CERTIFICATE_CHECKS", {"average_stationarity": stationarity})
    target = tmp_path / "report.json"
    assert main(["check", "--suite", "certificates", "--radius", "0.05", "--json", str(target)]) == EXIT_OK
    assert seen["radius"] == 0.05
    (report,) = json.loads(target.read_text())
    assert report["theorem"] == "average_stationarity"
    assert report["verdict"] == "PASS"
    assert set(report) >= {"checkpoints", "slacks"}
