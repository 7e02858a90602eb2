import numpy as np
import pytest
import torch

from layerkit.datforge import sample_from_seed
from layerkit.haar import HFConfig, high_frequency_loss
from layerkit.hfa import (
    BANLossConfig,
    HFATrainConfig,
    RoleError,
    ban_loss,
    ban_refine,
    degraded_background_estimate,
    fan_loss,
    fan_refine,
    load_aligner,
    new_aligner,
    paired_sign_test,
    save_aligner,
    train_hfa,
)
from layerkit.hfa.training import ban_objective_torch, hf_loss_torch
from layerkit.raster import EPS_VIS, ShapeError

TINY = HFATrainConfig(steps=30, batch_size=4, lr=2e-3, seed=0, base_width=16, stages=2)


@pytest.fixture(scope="module")
def tiny_samples():
    return [sample_from_seed(100 + i, resolution=16) for i in range(6)]


@pytest.fixture(scope="module")
def tiny_estimates(tiny_samples):
    return [degraded_background_estimate(s, seed=i) for i, s in enumerate(tiny_samples)]


def test_torch_hf_loss_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.random((16, 16, 3))
    y = rng.random((16, 16, 3))
    scales = (0, 1, 2)
    want = high_frequency_loss(x, y, HFConfig(scales=scales))
    xt = torch.from_numpy(x.transpose(2, 0, 1)).double()[None]
    yt = torch.from_numpy(y.transpose(2, 0, 1)).double()[None]
    got = float(hf_loss_torch(xt, yt, scales))
    assert np.isclose(got, want, rtol=1e-10)


def test_torch_hf_loss_batch_mean():
    rng = np.random.default_rng(1)
    xs = rng.random((2, 3, 8, 8))
    ys = rng.random((2, 3, 8, 8))
    scales = (0, 1)
    per_image = [
        high_frequency_loss(xs[i].transpose(1, 2, 0), ys[i].transpose(1, 2, 0), HFConfig(scales=scales))
        for i in range(2)
    ]
    got = float(hf_loss_torch(torch.from_numpy(xs), torch.from_numpy(ys), scales))
    assert np.isclose(got, np.mean(per_image), rtol=1e-10)


def test_ban_loss_parts():
    rng = np.random.default_rng(2)
    pred = rng.random((16, 16, 3))
    target = rng.random((16, 16, 3))
    sampled = rng.random((16, 16, 3))
    cfg = BANLossConfig(weight=0.2)
    parts = ban_loss(pred, target, sampled, cfg)
    assert np.isclose(parts.total, parts.mse + 0.2 * parts.high_frequency, rtol=1e-12)
    assert parts.mse > 0 and parts.high_frequency > 0
    # weight 0 reduces to plain MSE
    zero = ban_loss(pred, target, sampled, BANLossConfig(weight=0.0))
    assert zero.total == zero.mse
    assert np.isclose(fan_loss(pred, target), np.mean((pred - target) ** 2))


def test_ban_loss_config_validation():
    with pytest.raises(ValueError):
        BANLossConfig(weight=-0.1)


def test_ban_objective_variants_differ():
    rng = np.random.default_rng(3)
    pred = torch.from_numpy(rng.random((2, 3, 8, 8)))
    target = torch.from_numpy(rng.random((2, 3, 8, 8)))
    sampled = torch.from_numpy(rng.random((2, 3, 8, 8)))
    occ = torch.zeros((2, 1, 8, 8))
    occ[:, :, 2:6, 2:6] = 1.0
    scales = (0, 1)
    ban = float(ban_objective_torch(pred, target, sampled, occ, "ban", 0.2, scales))
    mse = float(ban_objective_torch(pred, target, sampled, occ, "mse", 0.2, scales))
    rw = float(ban_objective_torch(pred, target, sampled, occ, "regionwise", 0.2, scales))
    assert ban > mse  # adds a positive frequency term
    assert rw != mse
    assert np.isclose(mse, float(torch.mean((pred - target) ** 2)))
    with pytest.raises(ValueError):
        ban_objective_torch(pred, target, sampled, occ, "other", 0.2, scales)


def test_regionwise_supervises_each_region_with_its_source():
    # prediction equal to gt in the visible region and to the sampled
    # estimate in the occluded region scores exactly zero
    rng = np.random.default_rng(4)
    target = torch.from_numpy(rng.random((1, 3, 8, 8)))
    sampled = torch.from_numpy(rng.random((1, 3, 8, 8)))
    occ = torch.zeros((1, 1, 8, 8))
    occ[:, :, :4] = 1.0
    pred = torch.where(occ.bool(), sampled, target)
    val = float(ban_objective_torch(pred, target, sampled, occ, "regionwise", 0.2, (0,)))
    assert val == 0.0


def test_untrained_aligner_passes_estimate_through(tiny_samples):
    s = tiny_samples[0]
    est = degraded_background_estimate(s, seed=0)
    bundle = new_aligner("ban", base_width=16, stages=2)
    out = ban_refine(bundle, s.composite, s.alpha, est)
    # zero-init head: the network contributes nothing before training,
    # so only the copy rule modifies the estimate
    visible = s.alpha <= EPS_VIS
    assert np.array_equal(out[visible], s.composite[visible])
    assert np.allclose(out[~visible], est[~visible])


def test_refine_role_checks(tiny_samples):
    s = tiny_samples[0]
    est = s.background
    fan = new_aligner("fan", base_width=16, stages=2)
    ban = new_aligner("ban", base_width=16, stages=2)
    with pytest.raises(RoleError):
        ban_refine(fan, s.composite, s.alpha, est)
    with pytest.raises(RoleError):
        fan_refine(ban, s.composite, s.alpha, est)
    with pytest.raises(RoleError):
        new_aligner("other")


def test_refine_shape_checks(tiny_samples):
    s = tiny_samples[0]
    bundle = new_aligner("ban", base_width=16, stages=2)
    with pytest.raises(ShapeError):
        ban_refine(bundle, s.composite, s.alpha, s.background[:8])


def test_fan_refine_copy_rule(tiny_samples):
    s = tiny_samples[0]
    bundle = new_aligner("fan", base_width=16, stages=2)
    out = fan_refine(bundle, s.composite, s.alpha, s.foreground)
    visible = s.alpha >= 1.0 - EPS_VIS
    assert np.array_equal(out[visible], s.composite[visible])


def test_train_hfa_ban_improves(tiny_samples, tiny_estimates):
    bundle, losses = train_hfa(tiny_samples, tiny_estimates, "ban", TINY)
    assert bundle.trained
    assert bundle.loss_variant == "ban"
    assert np.mean(losses[-5:]) < np.mean(losses[:5])


def test_train_hfa_variant_selection(tiny_samples, tiny_estimates):
    b1, _ = train_hfa(tiny_samples[:3], tiny_estimates[:3],
                      "ban", HFATrainConfig(steps=4, batch_size=2, base_width=16, stages=2),
                      loss_variant="regionwise")
    assert b1.loss_variant == "regionwise"
    with pytest.raises(ValueError):
        train_hfa(tiny_samples[:3], tiny_estimates[:3], "ban",
                  HFATrainConfig(steps=2, base_width=16, stages=2), loss_variant="bogus")
    with pytest.raises(ValueError):
        train_hfa(tiny_samples[:3], tiny_estimates[:3], "fan",
                  HFATrainConfig(steps=2, base_width=16, stages=2), loss_variant="ban")


def test_train_hfa_deterministic(tiny_samples, tiny_estimates):
    cfg = HFATrainConfig(steps=6, batch_size=2, lr=1e-3, seed=5, base_width=16, stages=2)
    _, l1 = train_hfa(tiny_samples[:3], tiny_estimates[:3], "ban", cfg)
    _, l2 = train_hfa(tiny_samples[:3], tiny_estimates[:3], "ban", cfg)
    assert l1 == l2


def test_train_hfa_missing_estimates(tiny_samples, tiny_estimates):
    with pytest.raises(ValueError, match="cached"):
        train_hfa(tiny_samples, tiny_estimates[:-1], "ban", TINY)
    with pytest.raises(ValueError, match="missing"):
        train_hfa(tiny_samples[:2], [tiny_estimates[0], None], "ban", TINY)
    with pytest.raises(ValueError):
        train_hfa([], [], "ban", TINY)


def test_degraded_estimate_properties(tiny_samples):
    s = tiny_samples[0]
    est = degraded_background_estimate(s, seed=3)
    assert est.shape == s.background.shape
    assert est.min() >= 0.0 and est.max() <= 1.0
    assert np.array_equal(est, degraded_background_estimate(s, seed=3))
    assert not np.array_equal(est, degraded_background_estimate(s, seed=4))
    # the occluded region deviates more than the visible one
    occ = s.alpha >= 1.0 - EPS_VIS
    if occ.any() and (~occ).any():
        dev_occ = np.abs(est - s.background)[occ].mean()
        dev_vis = np.abs(est - s.background)[~occ].mean()
        assert dev_occ > dev_vis


def test_paired_sign_test():
    a = np.array([0.1, 0.2, 0.1, 0.3, 0.2])
    b = np.array([0.2, 0.3, 0.2, 0.4, 0.2])
    wins, n, p = paired_sign_test(a, b)
    assert (wins, n) == (4, 4)
    assert p == pytest.approx(0.0625)
    wins, n, p = paired_sign_test(b[:4], a[:4])
    assert wins == 0 and p == 1.0
    # 15 of 20 wins crosses p < 0.05
    a20 = np.zeros(20)
    b20 = np.ones(20)
    b20[:5] = -1.0
    wins, n, p = paired_sign_test(a20, b20)
    assert (wins, n) == (15, 20)
    assert p < 0.05


def test_aligner_checkpoint_round_trip(tmp_path, tiny_samples, tiny_estimates):
    cfg = HFATrainConfig(steps=5, batch_size=2, base_width=16, stages=2, seed=2)
    bundle, _ = train_hfa(tiny_samples[:3], tiny_estimates[:3], "ban", cfg)
    path = tmp_path / "ban.ckpt"
    save_aligner(path, bundle)
    loaded = load_aligner(path)
    assert loaded.role == "ban" and loaded.trained
    s = tiny_samples[0]
    est = tiny_estimates[0]
    assert np.array_equal(
        ban_refine(bundle, s.composite, s.alpha, est),
        ban_refine(loaded, s.composite, s.alpha, est),
    )
    save_aligner(tmp_path / "again.ckpt", bundle)
    assert (tmp_path / "ban.ckpt").read_bytes() == (tmp_path / "again.ckpt").read_bytes()
