import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from light_sgd import train as train_mod
from light_sgd.bench import (
    TABLE_ROWS,
    DatasetSpec,
    ExperimentResult,
    ExperimentSpec,
    epochs_to_threshold,
    expand_matrix,
    image_matrix,
    synthetic_matrix,
    run_cell,
    searched_winners,
)
from light_sgd.data import make_synthetic, split
from light_sgd.net import Model, NetworkConfig, init_model
from light_sgd.optim import make_optimizer
from light_sgd.train import n_steps, train_epoch, train_run

SMALL = DatasetSpec("blobs", m=200)


def test_epochs_to_threshold():
    curve = np.array([0.4, 0.6, 0.95, 0.9, 0.97])
    assert epochs_to_threshold(curve, 0.95) == 2
    assert epochs_to_threshold(curve, 0.4) == 0
    assert epochs_to_threshold(curve, 0.99) is None


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.floats(0, 1))
def test_epochs_to_threshold_is_first_hit(values, thr):
    hit = epochs_to_threshold(np.array(values), thr)
    if hit is None:
        assert max(values) < thr
    else:
        assert values[hit] >= thr and all(v < thr for v in values[:hit])


def test_steps_per_epoch_keeps_partial_batch():
    assert n_steps(800, 75) == 11
    ds = split(make_synthetic("blobs"), seed=0)
    cfg = NetworkConfig(n_features=2)
    model = init_model(cfg, 0)
    x, y = ds.train
    assert train_epoch(model, make_optimizer("sgd", model), x, y, cfg, 75, np.random.default_rng(0)) == 11


def test_constant_model_gives_flat_majority_curve(monkeypatch):
    ds = split(make_synthetic("circles", m=200, seed=1), seed=1)
    monkeypatch.setattr(train_mod, "step", lambda *a: None)
    monkeypatch.setattr(train_mod, "init_model", lambda cfg, seed: Model([np.zeros((2, 1))], [np.zeros(1)]))
    trace = train_run(NetworkConfig(n_features=2), *ds.train, *ds.test, n_epochs=5)
    np.testing.assert_array_equal(trace.curve, np.mean(ds.test[1] == 1))


def test_divergence_freezes_curve():
    ds = split(make_synthetic("blobs", m=200), seed=0)
    cfg = NetworkConfig(n_features=2, L=1)
    trace = train_run(cfg, *ds.train, *ds.test, n_epochs=5, optimizer_overrides={"lr": 1e300})
    assert trace.diverged
    e = trace.diverged_epoch
    assert np.all(trace.curve[e:] == trace.curve[e])


def test_spec_defaults_and_key():
    spec = ExperimentSpec(SMALL, method="sigmoid-adam", configuration="-Er-")
    assert spec.configuration == "-default-" and not spec.searched
    assert spec.thresholds == (0.95,)
    assert spec.key == "blobs-lower_L0_sigmoid-adam_default"
    light = ExperimentSpec(SMALL, method="light-g-sgd", configuration="Er")
    assert light.searched and light.variant == "light-g" and light.optimizer == "sgd"
    assert ExperimentSpec(DatasetSpec("xor"), L=1).thresholds == (0.90,)
    with pytest.raises(ValueError):
        ExperimentSpec(method="relu-sgd")


def test_spec_round_trip():
    spec = ExperimentSpec(SMALL, L=1, method="light-v-sgd", configuration="-r-", n_runs=3, search={"epochs": 2})
    back = ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert back == spec


def test_matrix_expansion():
    specs = expand_matrix(synthetic_matrix(n_runs=1, n_epochs=1))
    assert len(specs) == 4 * 2 * 2 * 9
    assert len({s.key for s in specs}) == len(specs)
    rows = {(s.method, s.configuration) for s in specs}
    assert rows == set(TABLE_ROWS)
    images = expand_matrix(image_matrix(root="/nowhere"))
    assert len(images) == 3 * 4 and all(s.L == 1 for s in images)
    g = [s for s in images if s.method == "light-g-sgd"]
    assert all(not s.searched and s.fixed_light().r == 4.08 for s in g)
    explicit = expand_matrix({"cells": [spec.to_dict() for spec in specs[:2]]})
    assert explicit == specs[:2]


@pytest.fixture(scope="module")
def searched_cell():
    spec = ExperimentSpec(SMALL, method="light-g-sgd", configuration="-r-", n_runs=3, n_epochs=4)
    return spec, run_cell(spec)


def test_cell_shapes_and_stats(searched_cell):
    spec, res = searched_cell
    assert res.curves.shape == (3, 4)
    np.testing.assert_allclose(res.mean_curve, [np.mean(res.curves[:, e]) for e in range(4)])
    brute_std = [np.sqrt(np.mean((res.curves[:, e] - res.curves[:, e].mean()) ** 2)) for e in range(4)]
    np.testing.assert_allclose(res.std_curve, brute_std)
    assert res.max_accuracy == res.mean_curve.max()
    assert res.mean_curve[res.argmax_epoch] == res.max_accuracy
    assert len(searched_winners(res)) == 3
    # each run's training used its search winner
    for params, search in zip(res.light_params, res.searches):
        winner = search["evaluations"][search["winner_draw"]]["params"]
        assert params == winner


def test_cell_deterministic_and_job_independent(searched_cell):
    spec, res = searched_cell
    again = run_cell(spec)
    parallel = run_cell(spec, jobs=2)
    assert again.to_dict(include_timing=False) == res.to_dict(include_timing=False)
    assert parallel.to_dict(include_timing=False) == res.to_dict(include_timing=False)


def test_result_save_load(searched_cell, tmp_path):
    _, res = searched_cell
    res.save(tmp_path / "cell.json")
    back = ExperimentResult.load(tmp_path / "cell.json")
    assert json.dumps(back.to_dict(), sort_keys=True) == json.dumps(res.to_dict(), sort_keys=True)


def test_run_seed_is_base_plus_index():
    spec = ExperimentSpec(SMALL, n_runs=2, n_epochs=3, base_seed=7)
    ds = spec.dataset.materialize()
    res = run_cell(spec, ds)
    cfg = spec.network_config(ds.n, spec.fixed_light())
    solo = train_run(cfg, *ds.train, *ds.test, n_epochs=3, seed=8)
    np.testing.assert_array_equal(res.curves[1], solo.curve)


def test_image_dataset_needs_root(monkeypatch):
    monkeypatch.delenv("LIGHT_DATA_ROOT", raising=False)
    with pytest.raises(FileNotFoundError):
        DatasetSpec("mnist").materialize()
