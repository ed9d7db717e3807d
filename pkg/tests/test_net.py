import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from light_sgd.light import PRESETS, VARIANTS, light_eval, preset
from light_sgd.net import (
    Batch,
    DivergenceError,
    Model,
    NetworkConfig,
    accuracy,
    forward,
    init_model,
    loss_and_grads,
)


def numeric_grads(model, batch, config):
    """Central differences of the scalar loss, h scaled by |theta| + 1."""
    out = []
    for p in model.params:
        g = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            h = 1e-6 * (abs(p[i]) + 1)
            old = p[i]
            p[i] = old + h
            up, _ = loss_and_grads(model, batch, config)
            p[i] = old - h
            down, _ = loss_and_grads(model, batch, config)
            p[i] = old
            g[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def random_batch(rng, size, n):
    return Batch(rng.normal(size=(size, n)), rng.choice([-1.0, 1.0], size=size))


def assert_grads_close(analytic, numeric):
    for a, n in zip(analytic, numeric):
        big = np.abs(n) >= 1e-3
        np.testing.assert_allclose(a[big], n[big], rtol=1e-5)
        np.testing.assert_allclose(a[~big], n[~big], rtol=0, atol=1e-8)


def test_init_shapes_l0():
    m = init_model(NetworkConfig(n_features=2), seed=7)
    assert m.weights[0].shape == (2, 1) and m.biases[0].shape == (1,)
    assert m.biases[0][0] == 0.0


def test_init_shapes_l1():
    m = init_model(NetworkConfig(n_features=784, L=1, d_hidden=5), seed=0)
    assert [p.shape for p in m.params] == [(784, 5), (5,), (5, 1), (1,)]
    limit = math.sqrt(6 / (784 + 5))
    assert np.abs(m.weights[0]).max() <= limit


def test_init_deterministic():
    cfg = NetworkConfig(n_features=3, L=1)
    a, b = init_model(cfg, 11), init_model(cfg, 11)
    for x, y in zip(a.params, b.params):
        assert x.tobytes() == y.tobytes()


def test_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(n_features=0)
    with pytest.raises(ValueError):
        NetworkConfig(n_features=2, L=2)
    with pytest.raises(ValueError):
        NetworkConfig(n_features=2, L=1, d_hidden=0)
    with pytest.raises(ValueError):
        NetworkConfig(n_features=2, loss_mode="hinge")


def test_zero_weights_give_light_at_zero():
    cfg = NetworkConfig(n_features=3)
    m = init_model(cfg, 0)
    m.weights[0][:] = 0
    z, y_hat = forward(m, Batch(np.ones((4, 3)), [1, -1, 1, 1]), preset("-default-"))
    assert np.all(z == 0)
    np.testing.assert_allclose(y_hat, 0.5)
    p = preset("-Er-", "light-g")
    _, y_hat = forward(m, Batch(np.ones((2, 3)), [1, 1]), p)
    np.testing.assert_allclose(y_hat, light_eval(0.0, p))


def test_dead_relu_leaves_output_bias():
    cfg = NetworkConfig(n_features=2, L=1)
    m = init_model(cfg, 0)
    m.weights[0][:] = -1.0
    m.biases[1][:] = 0.37
    z, _ = forward(m, Batch(np.abs(np.random.default_rng(0).normal(size=(5, 2))), [1] * 5), preset("-default-"))
    np.testing.assert_array_equal(z, 0.37)


def test_hand_forward():
    m = Model([np.array([[2.0], [-1.0]])], [np.array([0.5])])
    z, y_hat = forward(m, Batch([[1.0, 0.0]], [1]), preset("-default-"))
    assert z[0] == 2.5
    # the -default- curve is the sigmoid only below T = 0.75; above it the decline branch applies
    p = preset("-default-").replace(T=10.0)
    _, y_hat = forward(m, Batch([[1.0, 0.0]], [1]), p)
    oracle = 1 / (1 + mpmath.exp(-mpmath.mpf("2.5")))
    assert y_hat[0] == pytest.approx(float(oracle), rel=1e-14)
    assert y_hat[0] == pytest.approx(0.92414, abs=5e-6)


def test_dimension_mismatch():
    m = init_model(NetworkConfig(n_features=2), 0)
    with pytest.raises(ValueError):
        forward(m, Batch(np.ones((1, 3)), [1]), preset("-default-"))


def test_zero_gradient_far_right_of_switch():
    p = preset("-r-", "light-v")
    cfg = NetworkConfig(n_features=1, light=p, loss_mode="margin-literal")
    m = Model([np.array([[1.0]])], [np.array([0.0])])
    _, grads = loss_and_grads(m, Batch([[p.T + 800 / p.r]], [1]), cfg)
    assert all(np.all(g == 0) for g in grads)
    # activation-bce: the decline factor exp(-r (t - T)) has underflowed
    cfg = NetworkConfig(n_features=1, light=p)
    _, grads = loss_and_grads(m, Batch([[p.T + 800 / p.r]], [1]), cfg)
    assert all(np.all(g == 0) for g in grads)


def test_l0_two_samples_seed3_default():
    rng = np.random.default_rng(3)
    cfg = NetworkConfig(n_features=2, light=preset("-default-"))
    m = init_model(cfg, 3)
    batch = random_batch(rng, 2, 2)
    _, analytic = loss_and_grads(m, batch, cfg)
    assert_grads_close(analytic, numeric_grads(m, batch, cfg))


@pytest.mark.parametrize("L", [0, 1])
@pytest.mark.parametrize("loss_mode", ["activation-bce", "margin-literal"])
@pytest.mark.parametrize("name", list(PRESETS))
@pytest.mark.parametrize("variant", list(VARIANTS))
def test_full_gradient_check(L, loss_mode, name, variant):
    rng = np.random.default_rng(hash((L, loss_mode, name, variant)) % 2**32)
    cfg = NetworkConfig(n_features=3, L=L, light=preset(name, variant), loss_mode=loss_mode)
    m = init_model(cfg, 5)
    batch = random_batch(rng, 8, 3)
    # keep pre-activations away from the branch switch where the loss is discontinuous
    z, _ = forward(m, batch, cfg.light)
    keep = np.abs(z - cfg.light.T) > 1e-2
    if loss_mode == "margin-literal":
        keep &= np.abs(batch.y * z - cfg.light.T) > 1e-2
    batch = Batch(batch.x[keep], batch.y[keep])
    _, analytic = loss_and_grads(m, batch, cfg)
    assert_grads_close(analytic, numeric_grads(m, batch, cfg))


@pytest.mark.parametrize("reduction", ["sum", "mean"])
def test_margin_sign_flag_gradient(reduction):
    rng = np.random.default_rng(1)
    cfg = NetworkConfig(n_features=2, light=preset("-E-"), loss_mode="margin-literal", margin_sign=-1,
                        reduction=reduction)
    m = init_model(cfg, 1)
    batch = random_batch(rng, 6, 2)
    _, analytic = loss_and_grads(m, batch, cfg)
    assert_grads_close(analytic, numeric_grads(m, batch, cfg))


@pytest.mark.parametrize("loss_mode", ["activation-bce", "margin-literal"])
def test_duplicated_sample_scales_linearly(loss_mode):
    cfg = NetworkConfig(n_features=2, L=1, light=preset("-Er-"), loss_mode=loss_mode, reduction="sum")
    m = init_model(cfg, 2)
    one = Batch([[0.3, -0.8]], [1])
    k = 4
    many = Batch(np.repeat(one.x, k, axis=0), [1] * k)
    l1, g1 = loss_and_grads(m, one, cfg)
    lk, gk = loss_and_grads(m, many, cfg)
    assert lk == pytest.approx(k * l1, rel=1e-14)
    for a, b in zip(g1, gk):
        np.testing.assert_allclose(b, k * a, rtol=1e-14)


def test_mean_reduction_divides_by_batch_size():
    kw = dict(n_features=2, light=preset("-r-"))
    m = init_model(NetworkConfig(**kw), 0)
    batch = random_batch(np.random.default_rng(0), 5, 2)
    ls, gs = loss_and_grads(m, batch, NetworkConfig(**kw, reduction="sum"))
    lm, gm = loss_and_grads(m, batch, NetworkConfig(**kw, reduction="mean"))
    assert lm == pytest.approx(ls / 5)
    for a, b in zip(gs, gm):
        np.testing.assert_allclose(b, a / 5)


@settings(max_examples=50, deadline=None)
@given(scale=st.floats(-1e3, 1e3), seed=st.integers(0, 1000))
def test_clamped_loss_is_finite(scale, seed):
    cfg = NetworkConfig(n_features=2, light=preset("-Er-", "light-g"))
    m = init_model(cfg, seed)
    for p in m.params:
        p *= scale
    loss, grads = loss_and_grads(m, random_batch(np.random.default_rng(seed), 10, 2), cfg)
    assert math.isfinite(loss)
    assert all(np.all(np.isfinite(g)) for g in grads)


def test_non_finite_loss_signals_divergence():
    cfg = NetworkConfig(n_features=1, light=preset("-default-"), loss_mode="margin-literal")
    m = Model([np.array([[np.nan]])], [np.array([0.0])])
    with pytest.raises(DivergenceError):
        loss_and_grads(m, Batch([[1.0]], [1]), cfg)


def test_forward_is_pure():
    cfg = NetworkConfig(n_features=2, L=1)
    m = init_model(cfg, 0)
    before = [p.copy() for p in m.params]
    batch = random_batch(np.random.default_rng(0), 4, 2)
    a = forward(m, batch, cfg.light)
    b = forward(m, batch, cfg.light)
    np.testing.assert_array_equal(a[1], b[1])
    for p, q in zip(before, m.params):
        np.testing.assert_array_equal(p, q)


def test_accuracy_tie_goes_to_positive():
    m = Model([np.zeros((2, 1))], [np.zeros(1)])
    assert accuracy(m, Batch(np.ones((3, 2)), [1, 1, 1])) == 1.0


@given(seed=st.integers(0, 10_000))
def test_accuracy_flips_with_labels(seed):
    rng = np.random.default_rng(seed)
    m = init_model(NetworkConfig(n_features=2, L=1), seed)
    batch = random_batch(rng, 20, 2)
    flipped = Batch(batch.x, -batch.y)
    assert accuracy(m, flipped) == pytest.approx(1 - accuracy(m, batch))


def test_batch_validation():
    with pytest.raises(ValueError):
        Batch(np.ones((2, 2)), [1, 0])
    with pytest.raises(ValueError):
        Batch(np.zeros((0, 2)), [])


def test_checkpoint_round_trip(tmp_path):
    m = init_model(NetworkConfig(n_features=4, L=1, d_hidden=3), 9)
    path = tmp_path / "model.json"
    m.save(path)
    loaded = Model.load(path)
    for a, b in zip(m.params, loaded.params):
        assert a.tobytes() == b.tobytes()
    with pytest.raises(ValueError):
        Model.from_dict({"format": "other"})
