"""Shared fixtures: small corpora and toy-trained models.

The expensive session fixtures train real (tiny) networks once and are
shared between the pipeline tests and the acceptance suite.  Everything
is seeded, so reruns produce identical models.
"""

import numpy as np
import pytest

from layerkit.datforge import DatasetSample, build_corpus, load_corpus, sample_from_seed
from layerkit.datforge.procedural import procedural_background
from layerkit.diffusion import FBDDModels, FBDDTrainConfig, IdentityAutoencoder, train_fbdd
from layerkit.hfa import HFATrainConfig, degraded_layer_estimate, train_hfa
from layerkit.pipeline import OracleScene, PipelineModels
from layerkit.raster import composite as compose
from layerkit.seeding import spawn_seeds

CORPUS32_COUNT = 48
TOY_TRAIN_COUNT = 32


@pytest.fixture(scope="session")
def corpus32(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus32")
    build_corpus(count=CORPUS32_COUNT, seed=101, root=root, resolution=32)
    return load_corpus(root)


@pytest.fixture(scope="session")
def corpus32_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus32-disk")
    build_corpus(count=6, seed=202, root=root, resolution=32)
    return root


def _degenerate_scenes(size: int = 32):
    """Empty and wall-to-wall layer tuples for fixture training sets.

    Ordinary cutout scenes always leave some of the background showing,
    so a mask that is all zeros or all ones sits outside what the branch
    networks see during training.  Mixing in scenes where the foreground
    covers nothing (alpha 0, composite equals background) or everything
    (alpha 1, composite equals foreground) keeps those regimes in
    distribution; the sources are varied so the branches track the
    conditioning instead of memorising a handful of textures.
    """
    zeros = np.zeros((size, size))
    ones = np.ones((size, size))
    extra = [sample_from_seed(s, size) for s in range(7000, 7020)]
    fields = [procedural_background(s, size=size).rgb for s in range(7100, 7112)]

    def empty_scene(img, i):
        return DatasetSample(composite=img, alpha=zeros.copy(),
                             foreground=np.zeros_like(img), background=img,
                             seed=9000 + i)

    def full_scene(img, bg, i):
        return DatasetSample(composite=img, alpha=ones.copy(),
                             foreground=img, background=bg, seed=9100 + i)

    return ([empty_scene(e.composite, i) for i, e in enumerate(extra[:4])]
            + [empty_scene(b, 40 + i) for i, b in enumerate(fields[:4])]
            + [full_scene(e.composite, e.background, i)
               for i, e in enumerate(extra[4:20])]
            + [full_scene(b, fields[-1], 40 + i)
               for i, b in enumerate(fields[4:12])])


@pytest.fixture(scope="session")
def toy_fbdd(corpus32):
    """Identity-codec branch pair, trained enough to track conditioning."""
    codec = IdentityAutoencoder()
    cfg = FBDDTrainConfig(steps=6000, batch_size=8, lr=1e-3, seed=7,
                          base_width=16, stages=2, schedule_steps=1000)
    train = list(corpus32[:TOY_TRAIN_COUNT]) + _degenerate_scenes()
    fg_bundle, _ = train_fbdd(train, "fg", codec, cfg)
    bg_bundle, _ = train_fbdd(train, "bg", codec, cfg)
    return FBDDModels(codec, fg_bundle, bg_bundle)


@pytest.fixture(scope="session")
def toy_aligners(corpus32):
    train = corpus32[:24]
    cfg = HFATrainConfig(steps=300, batch_size=8, lr=2e-4, seed=13,
                         base_width=16, stages=2, hf_scales=(0, 1, 2))
    fan_est = [degraded_layer_estimate(s, "fan", sd)
               for s, sd in zip(train, spawn_seeds(51, len(train)))]
    ban_est = [degraded_layer_estimate(s, "ban", sd)
               for s, sd in zip(train, spawn_seeds(52, len(train)))]
    fan, _ = train_hfa(train, fan_est, "fan", cfg)
    ban, _ = train_hfa(train, ban_est, "ban", cfg)
    return fan, ban


@pytest.fixture(scope="session")
def toy_models(toy_fbdd, toy_aligners):
    fan, ban = toy_aligners
    return PipelineModels(fbdd=toy_fbdd, fan=fan, ban=ban)


def build_two_object_scene(seed: int = 0, size: int = 32):
    """Composite with two disjoint procedural objects over one background.

    Returns (scene, tokens): an OracleScene whose objects answer to the
    prompt tokens 'left' and 'right'.
    """
    from layerkit.datforge.procedural import procedural_background, procedural_foreground

    s1, s2, s3 = spawn_seeds(seed, 3)
    asset_size = size // 2 - 2
    left = procedural_foreground(s1, size=asset_size)
    right = procedural_foreground(s2, size=asset_size)
    bg = procedural_background(s3, size=size).rgb

    def place(asset, top, left_col):
        alpha = np.zeros((size, size))
        rgb = np.zeros((size, size, 3))
        h, w = asset.alpha.shape
        alpha[top:top + h, left_col:left_col + w] = asset.alpha
        rgb[top:top + h, left_col:left_col + w] = asset.rgb
        return rgb, alpha

    top = (size - asset_size) // 2
    f1, a1 = place(left, top, 1)
    f2, a2 = place(right, top, size // 2 + 1)
    assert (a1 * a2 == 0).all(), "objects overlap"
    assert (a1 == 1).any() and (a2 == 1).any()

    comp = compose(f2, compose(f1, bg, a1), a2)
    scene = OracleScene(
        composite=comp,
        background=bg,
        objects=(("left", a1, f1), ("right", a2, f2)),
    )
    return scene, ("left", "right")


@pytest.fixture
def two_object_scene():
    return build_two_object_scene
