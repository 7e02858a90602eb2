"""Release gate: one test per shipped guarantee, with a visible verdict line.

Each test prints "[criterion NN] PASS/FAIL <summary>" so a plain
`pytest -s tests/test_acceptance.py` doubles as a checklist.  The
expensive entries reuse the session-scoped toy models from conftest;
the two training experiments (smoke training, seam ablation) run their
own fixed configurations and carry explicit wall-clock budgets.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from layerkit.baselines import SolverConfig, decompose_smooth, solver_energy
from layerkit.config import RuntimeConfig
from layerkit.datforge import build_corpus, sample_from_seed
from layerkit.diffusion import (
    ConvAutoencoder,
    FBDDTrainConfig,
    IdentityAutoencoder,
    cosine_schedule,
    decompose,
    noisy_latent,
    recover_x0,
    save_codec,
    save_denoiser,
    train_autoencoder,
    train_fbdd,
    v_from_alpha_bar,
    v_target,
)
from layerkit.haar import haar_decompose, haar_reconstruct, high_frequency_loss
from layerkit.hfa import (
    HFATrainConfig,
    degraded_layer_estimate,
    paired_sign_test,
    run_ban_ablation,
    save_aligner,
    train_hfa,
)
from layerkit.metrics import DISPLAY_SCALES, display_row, fg_stats, fg_stats_summary, layer_errors
from layerkit.pipeline import (
    PipelineRequest,
    load_stack,
    multi_layer_decompose,
    recompose_stack,
    registry_from_sample,
    run_pipeline,
)
from layerkit.raster import EPS_VIS, composite as compose, quantize
from layerkit.rearrange import pixel_shuffle, pixel_unshuffle
from layerkit.seeding import spawn_seeds
from layerkit.trimap import make_trimap

from conftest import build_two_object_scene


@contextmanager
def criterion(num: int, desc: str):
    try:
        yield
    except BaseException:
        print(f"[criterion {num:02d}] FAIL {desc}")
        raise
    print(f"[criterion {num:02d}] PASS {desc}")


def fast_cfg(steps=8):
    cfg = RuntimeConfig()
    cfg.sampler.steps = steps
    return cfg


# ------------------------------------------------------------ 1: compositing


def test_criterion_01_composition_identities():
    with criterion(1, "alpha blend within 1e-6 on 1000 triples; endpoint alphas bit-exact"):
        rng = np.random.default_rng(1001)
        t0 = time.perf_counter()
        for _ in range(1000):
            f = rng.random((64, 64, 3))
            b = rng.random((64, 64, 3))
            a = rng.random((64, 64))
            c = compose(f, b, a)
            ref = a[:, :, None] * f + (1.0 - a[:, :, None]) * b
            assert np.abs(c - ref).max() <= 1e-6
        f = rng.random((64, 64, 3))
        b = rng.random((64, 64, 3))
        assert np.array_equal(compose(f, b, np.zeros((64, 64))), b)
        assert np.array_equal(compose(f, b, np.ones((64, 64))), f)
        assert time.perf_counter() - t0 < 10.0


# ------------------------------------------------------------ 2: haar


def test_criterion_02_haar_correctness():
    with criterion(2, "orthonormal reconstruction + energy within 1e-6; self/offset loss zero"):
        rng = np.random.default_rng(1002)
        t0 = time.perf_counter()
        for i in range(100):
            levels = int(rng.integers(1, 4))
            div = 1 << levels
            h = div * int(rng.integers(1, 5))
            w = div * int(rng.integers(1, 5))
            shape = (h, w, 3) if i % 2 else (h, w)
            x = rng.random(shape)
            pyr = haar_decompose(x, levels)
            assert np.abs(haar_reconstruct(pyr) - x).max() <= 1e-6
            energy = sum(float((band * band).sum())
                         for triple in pyr.details for band in triple)
            energy += float((pyr.approx * pyr.approx).sum())
            assert abs(energy - float((x * x).sum())) <= 1e-6 * max(1.0, energy)
        x = rng.random((16, 16, 3)) * 0.5
        assert high_frequency_loss(x, x) == 0.0
        assert high_frequency_loss(x, x + 0.25) <= 1e-12
        assert time.perf_counter() - t0 < 10.0


# ------------------------------------------------------------ 3: trimap


def _brute_morph(binary, radius, op):
    # windowed all/any with out-of-frame pixels counting as background
    if radius == 0:
        return binary.copy()
    h, w = binary.shape
    padded = np.zeros((h + 2 * radius, w + 2 * radius), dtype=bool)
    padded[radius:radius + h, radius:radius + w] = binary
    out = np.zeros_like(binary)
    for i in range(h):
        for j in range(w):
            win = padded[i:i + 2 * radius + 1, j:j + 2 * radius + 1]
            out[i, j] = win.all() if op == "erode" else win.any()
    return out


def test_criterion_03_trimap_matches_brute_force():
    with criterion(3, "trimap equals brute-force square morphology on 100 random masks"):
        rng = np.random.default_rng(1003)
        for _ in range(100):
            h = int(rng.integers(8, 20))
            w = int(rng.integers(8, 20))
            binary = rng.random((h, w)) < rng.uniform(0.2, 0.8)
            er = int(rng.integers(0, 5))
            dr = int(rng.integers(0, 5))
            got = make_trimap(binary.astype(np.float64), er, dr)
            core = _brute_morph(binary, er, "erode")
            support = _brute_morph(binary, dr, "dilate")
            want = np.where(core, 1.0, np.where(support, 0.5, 0.0))
            assert np.array_equal(got, want)


# ------------------------------------------------------------ 4: rearrange


def test_criterion_04_pixel_unshuffle_round_trip():
    with criterion(4, "space-to-depth round trip exact for factors 1, 2, 4, 8"):
        rng = np.random.default_rng(1004)
        for r in (1, 2, 4, 8):
            m = rng.random((32, 32))
            ch = pixel_unshuffle(m, r)
            assert ch.shape == (32 // r, 32 // r, r * r)
            assert np.array_equal(pixel_shuffle(ch, r), m)


# ------------------------------------------------------------ 5: v-prediction


def test_criterion_05_v_prediction_algebra():
    with criterion(5, "signal recovery within 1e-6; endpoint targets bit-exact"):
        sched = cosine_schedule(1000)
        rng = np.random.default_rng(1005)
        for _ in range(100):
            x0 = rng.standard_normal((8, 8, 4))
            eps = rng.standard_normal((8, 8, 4))
            t = int(rng.integers(0, 1000))
            z = noisy_latent(x0, eps, t, sched)
            v = v_target(x0, eps, t, sched)
            assert np.abs(recover_x0(z, v, t, sched) - x0).max() <= 1e-6
        x0 = rng.standard_normal((8, 8, 4))
        eps = rng.standard_normal((8, 8, 4))
        assert np.array_equal(v_from_alpha_bar(x0, eps, 1.0), eps)
        assert np.array_equal(v_from_alpha_bar(x0, eps, 0.0), -x0)


# ------------------------------------------------------------ 6: smoke training


def test_criterion_06_training_reduces_loss_deterministically():
    with criterion(6, "500 steps on 32x64x64 corpus cut the v-loss; rerun identical"):
        t0 = time.perf_counter()
        samples = [sample_from_seed(s, 64) for s in range(5000, 5032)]
        cfg = FBDDTrainConfig(steps=500, batch_size=8, lr=2e-4, seed=21,
                              base_width=16, stages=2, schedule_steps=1000)
        codec = IdentityAutoencoder()
        _, losses = train_fbdd(samples, "bg", codec, cfg)
        assert len(losses) == 500
        assert float(np.mean(losses[-100:])) < losses[0]
        _, rerun = train_fbdd(samples, "bg", codec, cfg)
        assert rerun == losses
        assert time.perf_counter() - t0 < 7200.0  # CPU-only budget


# ------------------------------------------------------------ 7: degenerate alpha


def test_criterion_07_degenerate_alpha_reproduces_composite(corpus32, toy_fbdd):
    with criterion(7, "alpha 0 / alpha 1 branches reproduce the composite within MAD 0.05"):
        zeros = np.zeros((32, 32))
        ones = np.ones((32, 32))
        for s in corpus32[40:44]:  # held out from the toy training split
            _, bg = decompose(s.composite, zeros, toy_fbdd, steps=50, seed=9)
            assert float(np.mean(np.abs(bg - s.composite))) < 0.05
            fg, _ = decompose(s.composite, ones, toy_fbdd, steps=50, seed=9)
            assert float(np.mean(np.abs(fg - s.composite))) < 0.05


# ------------------------------------------------------------ 8: copy rule


def test_criterion_08_visible_region_copy_rule(tmp_path, corpus32, toy_models):
    with criterion(8, "refined layers keep visible-region bytes of the composite"):
        for i, s in enumerate(corpus32[37:40]):
            reg = registry_from_sample(s)
            req = PipelineRequest(prompt="object", input_image=s.composite, seed=80 + i)
            result = run_pipeline(req, reg, toy_models, fast_cfg())
            fg, alpha = result.layers[0]
            bg = result.layers[1][0]
            qc = quantize(s.composite, 8)
            vis_fg = alpha >= 1.0 - EPS_VIS
            vis_bg = alpha <= EPS_VIS
            assert vis_fg.any() and vis_bg.any()
            assert np.array_equal(quantize(fg, 8)[vis_fg], qc[vis_fg])
            assert np.array_equal(quantize(bg, 8)[vis_bg], qc[vis_bg])


# ------------------------------------------------------------ 9: seam ablation


def test_criterion_09_ban_loss_beats_mse_variants(corpus32):
    with criterion(9, "full alignment loss wins the seam comparison, sign test p < 0.05"):
        t0 = time.perf_counter()
        cfg = HFATrainConfig(steps=500, batch_size=8, lr=2e-4, seed=17,
                             base_width=16, stages=2, hf_scales=(0, 1, 2))
        report = run_ban_ablation(corpus32[:24], corpus32[24:48], cfg, estimate_seed=29)
        v = report["variants"]
        ban = v["ban"]["seam_mean"]
        assert ban < v["mse"]["seam_mean"]
        assert ban < v["regionwise"]["seam_mean"]
        assert report["ban_vs_mse"]["n"] >= 20
        assert report["ban_vs_mse"]["pvalue"] < 0.05
        _, _, p_reg = paired_sign_test(v["ban"]["seam_values"],
                                       v["regionwise"]["seam_values"])
        assert p_reg < 0.05
        assert time.perf_counter() - t0 < 1800.0


# ------------------------------------------------------------ 10: solver oracle


def _dense_minimizer(comp, alpha, smoothness):
    # normal equations of the full quadratic, one channel at a time
    h, w = alpha.shape
    n = h * w
    a = alpha.ravel()
    lap = np.zeros((n, n))
    for i in range(h):
        for j in range(w):
            p = i * w + j
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < h and 0 <= jj < w:
                    lap[p, p] += 1.0
                    lap[p, ii * w + jj] -= 1.0
    hess = np.zeros((2 * n, 2 * n))
    hess[:n, :n] = np.diag(a * a) + smoothness * lap
    hess[n:, n:] = np.diag((1 - a) ** 2) + smoothness * lap
    hess[:n, n:] = np.diag(a * (1 - a))
    hess[n:, :n] = np.diag(a * (1 - a))
    fg = np.zeros((h, w, comp.shape[2]))
    bg = np.zeros_like(fg)
    for c in range(comp.shape[2]):
        rhs = np.concatenate([a * comp[:, :, c].ravel(),
                              (1 - a) * comp[:, :, c].ravel()])
        sol = np.linalg.solve(hess, rhs)
        fg[:, :, c] = sol[:n].reshape(h, w)
        bg[:, :, c] = sol[n:].reshape(h, w)
    return fg, bg, hess


def test_criterion_10_solver_matches_dense_solve():
    with criterion(10, "iterative solver within 1e-3 of dense solve; energy monotone"):
        size = 16
        yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
        fg_gt = np.stack([0.2 + 0.5 * xx, 0.3 + 0.3 * yy, 0.5 + 0.2 * xx * yy], axis=2)
        bg_gt = np.stack([0.8 - 0.5 * yy, 0.6 - 0.2 * xx, 0.4 + 0.3 * yy], axis=2)
        cy = cx = size / 2 - 0.5
        r = np.hypot(yy * (size - 1) - cy, xx * (size - 1) - cx)
        alpha = np.clip((size * 0.3 - r) / 2.0 + 0.5, 0.0, 1.0)
        assert (alpha == 0).any() and (alpha == 1).any()
        comp = compose(fg_gt, bg_gt, alpha)

        w = 0.5
        fg_ref, bg_ref, hess = _dense_minimizer(comp, alpha, w)
        assert np.linalg.eigvalsh(hess).min() > 1e-8  # unique minimizer
        cfg = SolverConfig(smoothness=w, levels=1, iterations=20000, tol=0.0)
        fg, bg, info = decompose_smooth(comp, alpha, cfg)
        assert np.abs(fg - np.clip(fg_ref, 0, 1)).max() <= 1e-3
        assert np.abs(bg - np.clip(bg_ref, 0, 1)).max() <= 1e-3
        for trace in info.energies:
            diffs = np.diff(np.array(trace))
            assert (diffs <= 1e-9 * np.maximum(np.array(trace[:-1]), 1.0)).all()
        e_ref = solver_energy(np.clip(fg_ref, 0, 1), np.clip(bg_ref, 0, 1),
                              comp, alpha, w)
        assert solver_energy(fg, bg, comp, alpha, w) <= e_ref * (1 + 1e-6) + 1e-9


# ------------------------------------------------------------ 11: metric arithmetic


def test_criterion_11_error_metric_arithmetic():
    with criterion(11, "SAD equals MAD times N; display scalings match the conventions"):
        rng = np.random.default_rng(1011)
        p = rng.random((17, 13, 3))
        t = rng.random((17, 13, 3))
        e = layer_errors(p, t)
        assert e.sad == e.mad * p.size
        total = float(np.abs(p - t).sum())
        assert abs(e.sad - total) <= 1e-9 * total
        assert DISPLAY_SCALES == {"mad": 1e3, "mse": 1e3, "perceptual": 1e2, "sad": 1e-3}
        raw = {"mad": 0.002, "mse": 1e-4, "perceptual": 0.5, "sad": 12345.0, "psnr": 30.0}
        shown = display_row(raw)
        assert shown["mad"] == 0.002 * 1e3
        assert shown["mse"] == 1e-4 * 1e3
        assert shown["perceptual"] == 0.5 * 1e2
        assert shown["sad"] == 12345.0 * 1e-3
        assert shown["psnr"] == 30.0  # unscaled metrics pass through


# ------------------------------------------------------------ 12: mask statistics


def test_criterion_12_mask_statistics_fixtures():
    with criterion(12, "centered block stats exact; full-frame masks report span > 90"):
        a = np.zeros((8, 8))
        a[2:6, 2:6] = 1.0
        st = fg_stats(a)
        assert st.occupancy == 25.0
        assert st.longest_span == 50.0
        assert st.center_x == 50.0
        assert st.center_y == 50.0

        rng = np.random.default_rng(1012)
        masks = []
        for _ in range(20):  # frame-filling rectangles with thin margins
            m = np.zeros((64, 64))
            top, left = rng.integers(0, 3, size=2)
            bottom, right = rng.integers(62, 65, size=2)
            m[top:bottom, left:right] = 1.0
            masks.append(m)
        summary = fg_stats_summary(masks)
        assert summary["longest_span"]["mean"] > 90.0


# ------------------------------------------------------------ 13: end-to-end


def test_criterion_13_end_to_end_pipeline(tmp_path, corpus32, toy_models):
    with criterion(13, "10 requests emit valid stacks; two-object scenes peel into 3 layers"):
        t0 = time.perf_counter()
        cfg = fast_cfg()
        for i in range(10):
            s = corpus32[28 + i]
            reg = registry_from_sample(s)
            if i % 2:
                req = PipelineRequest(prompt="object", input_image=s.composite,
                                      seed=130 + i)
            else:
                req = PipelineRequest(prompt="an object in a scene",
                                      foreground_indices=(1,), seed=130 + i)
            result = run_pipeline(req, reg, toy_models, cfg,
                                  out_dir=tmp_path / f"run{i}")
            layers, comp, manifest = load_stack(result.manifest_path)
            assert [e.role for e in manifest.entries] == ["fg", "bg"]
            assert np.abs(recompose_stack(layers) - comp).max() <= 1.0 / 255.0 + 4.0 / 65535.0

        for seed in (31, 32):
            scene, tokens = build_two_object_scene(seed=seed, size=32)
            req = PipelineRequest(prompt="two things", foreground_prompts=tokens,
                                  input_image=scene.composite, seed=seed)
            result = multi_layer_decompose(req, scene.registry(), toy_models, cfg,
                                           out_dir=tmp_path / f"multi{seed}")
            layers, comp, manifest = load_stack(result.manifest_path)
            assert [e.role for e in manifest.entries] == ["fg", "fg", "bg"]
            a1, a2 = scene.objects[0][1], scene.objects[1][1]
            clear = (a1 <= EPS_VIS) & (a2 <= EPS_VIS)
            seq = recompose_stack(layers)
            assert np.abs(seq - scene.composite)[clear].max() <= 2.0 / 255.0 + 1e-9
        assert time.perf_counter() - t0 < 600.0


# ------------------------------------------------------------ 14: determinism


def _tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_14_byte_determinism(tmp_path, corpus32, toy_fbdd, toy_models):
    with criterion(14, "training, sampling and persistence are byte-identical per seed"):
        # dataset synthesis
        build_corpus(count=4, seed=33, root=tmp_path / "c1", resolution=32)
        build_corpus(count=4, seed=33, root=tmp_path / "c2", resolution=32)
        assert _tree_bytes(tmp_path / "c1") == _tree_bytes(tmp_path / "c2")

        samples = corpus32[:8]
        codec = IdentityAutoencoder()

        # denoiser training
        cfg = FBDDTrainConfig(steps=10, batch_size=4, lr=2e-4, seed=5,
                              base_width=16, stages=2, schedule_steps=200)
        for run in ("a", "b"):
            bundle, losses = train_fbdd(samples, "fg", codec, cfg)
            save_denoiser(tmp_path / f"den_{run}.ckpt", bundle)
        assert (tmp_path / "den_a.ckpt").read_bytes() == (tmp_path / "den_b.ckpt").read_bytes()

        # alignment training
        est = [degraded_layer_estimate(s, "fan", sd)
               for s, sd in zip(samples, spawn_seeds(61, len(samples)))]
        hcfg = HFATrainConfig(steps=5, batch_size=4, lr=2e-4, seed=6,
                              base_width=16, stages=2, hf_scales=(0, 1))
        for run in ("a", "b"):
            bundle, _ = train_hfa(samples, est, "fan", hcfg)
            save_aligner(tmp_path / f"al_{run}.ckpt", bundle)
        assert (tmp_path / "al_a.ckpt").read_bytes() == (tmp_path / "al_b.ckpt").read_bytes()

        # codec training
        images = [s.composite for s in samples]
        for run in ("a", "b"):
            conv = ConvAutoencoder(factor=2, latent_channels=4, width=16, seed=3)
            train_autoencoder(conv, images, steps=5, batch_size=4, lr=2e-3, seed=3)
            save_codec(tmp_path / f"codec_{run}.ckpt", conv)
        assert (tmp_path / "codec_a.ckpt").read_bytes() == (tmp_path / "codec_b.ckpt").read_bytes()

        # sampling
        s = corpus32[45]
        fg1, bg1 = decompose(s.composite, s.alpha, toy_fbdd, steps=6, seed=3)
        fg2, bg2 = decompose(s.composite, s.alpha, toy_fbdd, steps=6, seed=3)
        assert np.array_equal(fg1, fg2) and np.array_equal(bg1, bg2)

        # full pipeline persistence
        reg = registry_from_sample(s)
        req = PipelineRequest(prompt="object", input_image=s.composite, seed=14)
        cfg_run = fast_cfg(steps=4)
        r1 = run_pipeline(req, reg, toy_models, cfg_run, out_dir=tmp_path / "p1")
        r2 = run_pipeline(req, reg, toy_models, cfg_run, out_dir=tmp_path / "p2")
        assert _tree_bytes(r1.manifest_path.parent) == _tree_bytes(r2.manifest_path.parent)
