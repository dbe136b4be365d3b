import csv
import json

import numpy as np
import pytest

from gnelearn import builtin_game
from gnelearn.cli import main
from gnelearn.configio import (ExperimentConfig, game_from_dict, game_to_dict,
                               load_experiment, load_game, load_reference,
                               save_experiment, save_game)


def test_game_roundtrip(tmp_path, case1):
    path = tmp_path / "game.json"
    save_game(case1, path)
    back = load_game(str(path))
    a = np.array([0.3, 0.1, 0.2, 0.4])
    assert back.describe() == case1.describe()
    from gnelearn import eval_cost
    assert eval_cost(back, 0, a) == eval_cost(case1, 0, a)


def test_game_dict_roundtrip_exact(case1):
    again = game_from_dict(game_to_dict(case1))
    for c1, c2 in zip(case1.costs, again.costs):
        assert np.array_equal(c1.quad, c2.quad)
        assert np.array_equal(c1.lin, c2.lin)
        assert c1.const == c2.const


def test_load_game_unknown():
    with pytest.raises(FileNotFoundError):
        load_game("no-such-game")


def test_experiment_roundtrip(tmp_path):
    cfg = ExperimentConfig(game="paper-sec5-case1", mode="two_point", horizon=500,
                           seeds=(1, 2, 3), constants=(0.05, 0.5, 0.1, 0.3))
    path = tmp_path / "exp.json"
    save_experiment(cfg, path)
    back = load_experiment(path)
    assert back.to_dict() == cfg.to_dict()
    sched = back.schedule()
    assert sched.mode == "two_point" and sched.gamma0 == 0.05


def test_experiment_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(game="paper-sec5-case1", mode="two_point", horizon=500, seeds=())
    with pytest.raises(ValueError):
        ExperimentConfig(game="paper-sec5-case1", mode="two_point", horizon=5, seeds=(1,))


def test_experiment_exponent_overrides():
    cfg = ExperimentConfig(game="paper-sec5-case1", mode="two_point", horizon=100,
                           seeds=(0,), exponents=(0.5, 0.4, 0.9, 0.8))
    sched = cfg.schedule()
    assert (sched.gamma_exp, sched.eps_exp, sched.sigma_exp, sched.rho_exp) == \
        (0.5, 0.4, 0.9, 0.8)


def _write_cfg(tmp_path, **over):
    data = {
        "game": "paper-sec5-case1",
        "schedule": {"mode": "two_point", "constants": [0.05, 0.5, 0.1, 0.3]},
        "horizon": 1000,
        "seeds": [0],
        "attach_reference": True,
    }
    data.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


def test_cmd_run_smoke(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    trace_path = out / "trace_seed0.csv"
    assert trace_path.read_bytes().endswith(b"\n")
    with open(trace_path) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) - 1 >= 30  # header + at least 30 checkpoint rows
    dist_col = rows[0].index("dist_vgne")
    first, last = float(rows[1][dist_col]), float(rows[-1][dist_col])
    assert last < first
    meta = json.loads((out / "trace_seed0.csv.meta.json").read_text())
    assert meta["seed"] == 0 and meta["partial"] is False


def test_cmd_run_missing_config(tmp_path):
    rc = main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert rc != 0
    assert not (tmp_path / "o" / "trace_seed0.csv").exists()


def test_cmd_run_deterministic(tmp_path):
    cfg = _write_cfg(tmp_path)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "trace_seed0.csv").read_bytes() == (out2 / "trace_seed0.csv").read_bytes()


def test_cmd_oracle_case2(tmp_path, capsys):
    out = tmp_path / "oracle"
    assert main(["oracle", "--game", "paper-sec5-case2", "--out", str(out)]) == 0
    ref, consts = load_reference(out / "reference_paper-sec5-case2.json")
    assert np.abs(ref.primal - np.array([0.3, 0.0, 0.1950, 0.4483])).max() < 1e-3
    assert consts.nu > 0
    report = json.loads((out / "regularization_paper-sec5-case2.json").read_text())
    assert report["ok"]


def test_cmd_oracle_case1_interior(tmp_path, capsys):
    out = tmp_path / "oracle"
    assert main(["oracle", "--game", "paper-sec5-case1", "--out", str(out)]) == 0
    data = json.loads((out / "reference_paper-sec5-case1.json").read_text())
    act = data["constraint_activity"]
    assert act["all_inactive"] is True
    assert not any(act["coupling_active"])
    assert "interior equilibrium" in capsys.readouterr().out


def test_cmd_oracle_rejects_nonmonotone(tmp_path, capsys):
    rc = main(["oracle", "--game", "nonmonotone-test", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "strongly monotone" in capsys.readouterr().err


def test_cmd_sweep_requires_20_seeds(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, seeds=[1])
    rc = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "20 seeds" in capsys.readouterr().err


def test_cmd_sweep_small(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, seeds=list(range(20)), horizon=400,
                     rate_window=[10, 400])
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out / "sweep_mean.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "mean_dist", "std_dist"]
    assert len(rows) > 5
    fit = json.loads((out / "rate_fit.json").read_text())
    assert fit["iterates_feasible"] is True
    assert fit["max_dual_norm"] < fit["dual_norm_cap"]
    assert len(list(out.glob("trace_seed*.csv"))) == 20


def test_cmd_run_flushes_partial_trace_on_divergence(tmp_path):
    # quadratic cost overflows on a huge box, aborting the very first step
    game_data = {
        "name": "overflow",
        "dims": [1, 1],
        "boxes": [{"lower": [0.0], "upper": [1e200]}] * 2,
        "costs": [{"quad": [[1.0, 0.0], [0.0, 0.0]], "lin": [0.0, 0.0], "const": 0.0},
                  {"quad": [[0.0, 0.0], [0.0, 1.0]], "lin": [0.0, 0.0], "const": 0.0}],
        "coupling": {"K": [[0.0, 0.0]], "l": [1.0]},
    }
    game_path = tmp_path / "overflow.json"
    game_path.write_text(json.dumps(game_data))
    cfg = _write_cfg(tmp_path, game=str(game_path), attach_reference=False, horizon=50)
    out = tmp_path / "part"
    rc = main(["run", "--config", str(cfg), "--out", str(out)])
    assert rc == 3
    meta = json.loads((out / "trace_seed0.csv.meta.json").read_text())
    assert meta["partial"] is True
    assert "non-finite" in meta["error"]


def test_cmd_validate_unknown_suite(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["validate", "--suite", "foo"])
    assert exc.value.code != 0


def test_cmd_validate_schedules(tmp_path, capsys):
    assert main(["validate", "--suite", "schedules", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validate_schedules.json").read_text())
    assert report["passed"] is True
    assert any(c["name"].startswith("summability_witness") for c in report["checks"])


def test_default_out_dir_env(tmp_path, monkeypatch):
    cfg = _write_cfg(tmp_path, horizon=100, attach_reference=False)
    monkeypatch.setenv("GNELEARN_OUT", str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "envout" / "trace_seed0.csv").exists()
