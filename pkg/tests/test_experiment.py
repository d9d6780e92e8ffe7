import csv
import hashlib
import io
import json

import numpy as np
import pytest

from regwalks.errors import ConfigError
from regwalks.experiment import ExperimentConfig, TASKS, run, simulate
from regwalks.statistics import raw_form_factor

SMALL = dict(V=60, d=3, n_trials=6, t_max=40, base_seed=11, shard_size=2)


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"V": 7, "d": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"d": 2})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"tasks": ["nope"]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"base_seed": -1})


def test_from_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(SMALL))
    assert ExperimentConfig.from_json(p).V == 60
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(p)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(tmp_path / "missing.json")


def test_seed_rule():
    cfg = ExperimentConfig(base_seed=2**64 - 2)
    assert cfg.trial_seed(0) == 2**64 - 2 and cfg.trial_seed(3) == 1


def test_exact_tmax_resolution():
    assert ExperimentConfig(V=1000, d=3).resolved_exact_tmax() == 8
    assert ExperimentConfig(V=60, d=3).resolved_exact_tmax() == 5
    assert ExperimentConfig(V=60, d=3, tasks=["spacing"]).resolved_exact_tmax() == 0


def test_run_outputs(tmp_path):
    cfg = ExperimentConfig(**SMALL, outputs=str(tmp_path), tasks=list(TASKS))
    manifest = run(cfg)
    names = {f["name"] for f in manifest["files"]}
    assert {"formfactor.csv", "spacing.csv", "poisson.csv", "predictions.csv", "density.csv",
            "spacing.svg", "formfactor.svg", "vtm.svg", "collapse.svg", "density.svg"} <= names
    for f in manifest["files"]:
        assert hashlib.sha256((tmp_path / f["name"]).read_bytes()).hexdigest() == f["sha256"]
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["n_trials_ok"] == 6 and on_disk["failed_trials"] == []
    ff = _rows(tmp_path / "formfactor.csv")
    assert list(ff[0]) == ["t", "tau", "K_raw", "K_raw_stderr", "K_unfolded", "K_unfolded_stderr",
                           "vtm", "vtm_stderr", "F_COE_pred", "K_COE_pred"]
    assert [int(r["t"]) for r in ff] == list(range(3, 41))
    pois = _rows(tmp_path / "poisson.csv")
    assert [int(r["t"]) for r in pois] == [3, 4, 5]


def test_reproducible_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    ma = run(ExperimentConfig(**SMALL, outputs=str(a)))
    mb = run(ExperimentConfig(**SMALL, outputs=str(b)))
    assert ma["files"] == mb["files"]
    mc = run(ExperimentConfig(**{**SMALL, "base_seed": 12}, outputs=str(tmp_path / "c")))
    assert ma["files"] != mc["files"]


def test_workers_do_not_change_results(tmp_path):
    base = dict(SMALL, tasks=["spacing", "formfactor", "vtm", "poisson"], plots=False)
    m1 = run(ExperimentConfig(**base, workers=1, outputs=str(tmp_path / "w1")))
    m3 = run(ExperimentConfig(**base, workers=3, outputs=str(tmp_path / "w3")))
    assert m1["files"] == m3["files"]


def test_single_trial(tmp_path):
    cfg = ExperimentConfig(**{**SMALL, "n_trials": 1}, outputs=str(tmp_path), plots=False)
    run(cfg)
    pois = _rows(tmp_path / "poisson.csv")
    assert all(r["stderr_mean"] == "" and r["vtm_exact"] == "" for r in pois)
    ff = _rows(tmp_path / "formfactor.csv")
    assert all(r["vtm"] == "" for r in ff) and all(r["K_raw"] != "" for r in ff)


def test_t_grid_and_simulate():
    cfg = ExperimentConfig(**SMALL, t_grid=[5, 3, 5, 9], tasks=["formfactor"])
    acc = simulate(cfg)
    assert acc.t_grid.tolist() == [3, 5, 9]
    assert acc.n_trials == 6
    assert np.isfinite(raw_form_factor(acc, 9).value)


def test_predictions_only(tmp_path):
    m = run(ExperimentConfig(d=5, outputs=str(tmp_path), tasks=["predictions"], pred_points=5))
    assert [f["name"] for f in m["files"]] == ["predictions.csv"]
    assert len(_rows(tmp_path / "predictions.csv")) == 5
