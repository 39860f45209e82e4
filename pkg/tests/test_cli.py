import csv
import json

import numpy as np
import pytest

from nessvqa.cli import BENCH_COLUMNS, SWEEP_COLUMNS, main

ISING = "model:\n  name: ising\n  g: 1.0\nobservables: [XY, YY, ZZ]\n"
DAMPING = ["--set", "model.name=damping", "--set", "model.n_sites=1", "--set", "model.gammas=[1.0]"]


@pytest.fixture
def ising_cfg(tmp_path):
    path = tmp_path / "ising.yaml"
    path.write_text(ISING)
    return path


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))
    return meta, rows[0], rows[1:]


def test_solve_reaches_oracle_and_is_deterministic(tmp_path, ising_cfg):
    out = tmp_path / "res.json"
    assert main(["solve", "--config", str(ising_cfg), "--out", str(out), "--seed", "3"]) == 0
    first = out.read_bytes()
    assert main(["solve", "--config", str(ising_cfg), "--out", str(out), "--seed", "3"]) == 0
    assert out.read_bytes() == first
    res = json.loads(first)
    assert res["seed"] == 3 and res["config"]["seed"] == 3
    assert res["infidelity"] < 1e-4
    assert res["wall_time"] is None and res["optimization"]["wall_time"] is None
    for name in ("XY", "YY", "ZZ"):
        assert res["observables"][name]["exact"] == pytest.approx(res["oracle_observables"][name], abs=1e-3)


def test_timing_is_opt_in(tmp_path, ising_cfg):
    out = tmp_path / "t.json"
    assert main(["solve", "--config", str(ising_cfg), "--out", str(out), "--set", "output.timing=true"]) == 0
    assert json.loads(out.read_text())["wall_time"] > 0


def test_sweep_writes_provenance_and_fixed_header(tmp_path, ising_cfg):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", "--config", str(ising_cfg), "--out", str(out), "--set", "sweep.values=[0.5, 1.5]"])
    assert rc == 0
    meta, header, rows = read_csv(out)
    assert meta["command"] == "sweep" and meta["seed"] == 0 and meta["config"]["sweep"]["values"] == [0.5, 1.5]
    assert header == SWEEP_COLUMNS + ["XY", "YY", "ZZ"]
    assert [float(r[0]) for r in rows] == [0.5, 1.5]
    assert all(0 <= float(r[2]) < 1e-4 for r in rows)
    assert all(r[4] == "" for r in rows)


def test_sweep_without_grid_is_config_error(ising_cfg, capsys):
    assert main(["sweep", "--config", str(ising_cfg)]) == 1
    assert main(["sweep", "--config", str(ising_cfg), "--set", "sweep.values=[]"]) == 1
    assert "sweep grid" in capsys.readouterr().err


def test_bad_gammas_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("model:\n  name: ising\n  gammas: [1.0]\n")
    assert main(["solve", "--config", str(path)]) == 1
    assert "model.gammas" in capsys.readouterr().err


def test_oracle_damping(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "--out", str(out), "--set", "model.g=0"] + DAMPING) == 0
    res = json.loads(out.read_text())
    assert np.allclose(res["rho_real"], [[1, 0], [0, 0]])
    assert res["residual"] < 1e-12
    assert res["eigenvalues"] == pytest.approx([0.0, 1.0])


def test_oracle_ising_observables(tmp_path, ising_cfg):
    out = tmp_path / "o.json"
    assert main(["oracle", "--config", str(ising_cfg), "--out", str(out), "--convention", "paper"]) == 0
    res = json.loads(out.read_text())
    assert res["residual"] < 1e-9 and res["config"]["convention"] == "paper"
    assert set(res["observables"]) == {"XY", "YY", "ZZ"}


def test_oracle_degenerate_exit_code(capsys):
    args = ["oracle", "--set", "model.name=dephasing", "--set", "model.n_sites=1", "--set", "model.gammas=[1.0]"]
    assert main(args) == 2
    assert "degenerate" in capsys.readouterr().err


def test_gradcheck_pass_and_fail(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gradcheck", "--out", str(out), "--set", "gradcheck.samples=10"]) == 0
    assert json.loads(out.read_text())["max_abs_deviation"] < 1e-6
    assert main(["gradcheck", "--out", str(out), "--set", "gradcheck.samples=3", "--set", "gradcheck.tolerance=1e-15"]) == 3
    same = ["--set", "gradcheck.method=finite_diff", "--set", "gradcheck.samples=3"]
    assert main(["gradcheck", "--out", str(out)] + same) == 0
    assert json.loads(out.read_text())["max_abs_deviation"] == 0.0


def test_gradcheck_single_qubit_toy(tmp_path):
    out = tmp_path / "g.json"
    toy = DAMPING + ["--set", "ansatz.d1=1", "--set", "ansatz.d2=1", "--set", "gradcheck.reference=general_shift"]
    assert main(["gradcheck", "--out", str(out)] + toy) == 0
    assert json.loads(out.read_text())["max_abs_deviation"] < 1e-9


def test_gradcheck_requires_exact_mode():
    assert main(["gradcheck", "--mode", "shadow"]) == 1


def test_shadow_mode_solve_reports_shadow_observables(tmp_path):
    out = tmp_path / "s.json"
    args = ["solve", "--mode", "shadow", "--out", str(out), "--set", "observables=[Z]", "--set", "cost.n_unitaries=50",
            "--set", "optimizer.max_iters=2", "--set", "optimizer.restarts=1"] + DAMPING
    assert main(args) == 0
    res = json.loads(out.read_text())
    assert set(res["observables"]["Z"]) == {"exact", "shadow"}
    assert res["optimization"]["n_iters"] <= 2


def test_shadowbench_structure(tmp_path):
    out = tmp_path / "b.csv"
    small = ["--set", "shadowbench.n_grid=[50, 200]", "--set", "shadowbench.repeats=40",
             "--set", "shadowbench.distill_runs=4", "--set", "shadowbench.distill_unitaries=200",
             "--set", "shadowbench.distill_tuples=2000"]
    rc = main(["shadowbench", "--out", str(out)] + small)
    assert rc in (0, 3)
    meta, header, rows = read_csv(out)
    assert header == BENCH_COLUMNS
    assert meta["exact_cost"] > 0 and meta["x"] > 0
    assert [r[0] for r in rows] == ["cost", "cost", "distill", "distill", "distill_ratio"]
    assert rows[1][10] != ""  # variance ratio reported for the 4x step
    assert rc == (0 if all(r[-1] == "True" for r in rows) else 3)


def test_cli_rejects_bad_seed():
    assert main(["oracle", "--seed", "-1"]) == 1
