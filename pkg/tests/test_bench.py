import csv
import json

import numpy as np
import pytest

from sapg.bench import (
    CURVE_FLOOR, RAW_COLUMNS, SUMMARY_COLUMNS, ExperimentSpec, cell_name, run_curves, run_experiment,
    run_table, run_trials, trial_seed,
)
from sapg.datagen import InstanceSpec, gen_instance, objective_for
from sapg.model import ConfigError, default_config
from sapg.solver import sapg_solve


def _spec(**kw):
    base = dict(cells=[(20, 40)], spars=[0.2], trials=2, config={"maxiter": 400})
    base.update(kw)
    return ExperimentSpec(**base)


def _masked(path, drop=("time_s", "mean_time_s")):
    rows = list(csv.reader(open(path)))
    keep = [i for i, h in enumerate(rows[0]) if h not in drop]
    return [[r[i] for i in keep] for r in rows]


def test_single_trial_average_is_the_run():
    spec = _spec(trials=1)
    rec = run_trials(spec)
    rows = run_table(spec)
    for row in rows:
        (r,) = [x for x in rec if x.algorithm == row.algorithm]
        assert row.mean_iter == r.iter and row.trials_ok == 1 and not row.partial
    # same instance solved directly
    inst = gen_instance(InstanceSpec(20, 40, 0.2, trial_seed(0, 0, 0)))
    res = sapg_solve(objective_for(inst), default_config(40).replace(maxiter=400))
    assert rows[0].mean_iter == res.iterations


def test_sapg_not_slower_than_spg():
    rows = run_table(_spec(trials=3))
    it = {r.algorithm: r.mean_iter for r in rows}
    assert it["sapg"] <= it["spg"]


def test_grid_order_and_seeds():
    spec = _spec(cells=[(10, 20), (20, 40)], spars=[0.2, 0.5])
    assert spec.grid() == [(10, 20, 0.2), (20, 40, 0.2), (10, 20, 0.5), (20, 40, 0.5)]
    seeds = {trial_seed(0, c, t) for c in range(4) for t in range(3)}
    assert len(seeds) == 12
    assert trial_seed(5, 1, 2) == trial_seed(5, 1, 2)


@pytest.mark.parametrize("bad", [
    dict(trials=0),
    dict(algorithms=["sapg", "newton"]),
    dict(curves=[(20, 40, 0.2)], algorithms=["sapg"]),
    dict(cells=[]),
])
def test_spec_rejects(bad):
    with pytest.raises(ValueError):
        _spec(**bad).check()


def test_spec_rejects_bad_config():
    with pytest.raises(ConfigError, match="alpha"):
        _spec(config={"alpha": 2.0}).check()


def test_spec_unknown_key():
    with pytest.raises(ValueError, match="unknown"):
        ExperimentSpec.from_dict({"cells": [[1, 2]], "spars": [0.2], "trails": 3})


def test_curves_length_and_floor():
    spec = _spec()
    curves = run_curves(spec, (20, 40, 0.2))
    prob = objective_for(gen_instance(InstanceSpec(20, 40, 0.2, trial_seed(0, 0, 0))))
    res = sapg_solve(prob, default_config(40).replace(maxiter=400))
    assert len(curves["sapg"]) == res.iterations + 1
    assert min(c[-1] for c in curves.values()) == CURVE_FLOOR
    assert all(c.min() >= CURVE_FLOOR for c in curves.values())


def test_curves_identical_algorithms_both_floor():
    curves = run_curves(_spec(algorithms=["sapg", "sapg"]), (20, 40, 0.2))
    assert curves["sapg"][-1] == CURVE_FLOOR


def test_failed_trials_mark_cell_partial(tmp_path):
    spec = _spec(config={"gamma0": 1e8, "max_backtracks": 1}, algorithms=["sapg"])
    records, rows, _ = run_experiment(spec, tmp_path)
    assert all(r.error for r in records)
    assert rows[0].partial and rows[0].trials_ok == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["failures"]) == 2


def test_outputs_and_manifest(tmp_path):
    spec = _spec(curves=[(20, 40, 0.2)])
    run_experiment(spec, tmp_path)
    raw = list(csv.reader(open(tmp_path / "tables" / "raw.csv")))
    summary = list(csv.reader(open(tmp_path / "tables" / "summary.csv")))
    assert tuple(raw[0]) == RAW_COLUMNS and len(raw) == 1 + 2 * 2
    assert tuple(summary[0]) == SUMMARY_COLUMNS and len(summary) == 1 + 2
    name = cell_name(20, 40, 0.2)
    assert (tmp_path / "curves" / name / "sapg.csv").exists()
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["seed"] == 0 and m["spec"]["trials"] == 2 and m["failures"] == []
    assert m["curves"][name] == [f"curves/{name}/sapg.csv", f"curves/{name}/spg.csv"]


def test_rerun_identical_outside_timing(tmp_path):
    spec = _spec(curves=[(20, 40, 0.2)])
    run_experiment(spec, tmp_path / "a")
    run_experiment(spec, tmp_path / "b", workers=2)
    for rel in ("tables/raw.csv", "tables/summary.csv"):
        assert _masked(tmp_path / "a" / rel) == _masked(tmp_path / "b" / rel)
    name = cell_name(20, 40, 0.2)
    for algo in ("sapg", "spg"):
        a = (tmp_path / "a" / "curves" / name / f"{algo}.csv").read_bytes()
        assert a == (tmp_path / "b" / "curves" / name / f"{algo}.csv").read_bytes()
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()


def test_shipped_specs_load():
    from importlib import resources
    for name in ("table1", "table2", "desk"):
        spec = ExperimentSpec.from_json(resources.files("sapg") / "experiments" / f"{name}.json")
        spec.check()
        assert len(spec.algorithms) == 2
    t1 = ExperimentSpec.from_json(resources.files("sapg") / "experiments" / "table1.json")
    assert t1.cells == [(150, 300), (300, 600), (450, 900), (600, 1200)] and t1.trials == 50
