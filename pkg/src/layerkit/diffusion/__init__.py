"""Conditional latent diffusion for layer decomposition.

Two denoisers with identical architecture but independent weights
invert the composition: one is trained to produce the foreground
layer, one the background layer.  Both are conditioned on the latent
composite and the pixel-unshuffled alpha mask, use v-prediction
training and deterministic coarse-step sampling.
"""

from .schedule import (
    DiffusionSchedule,
    cosine_schedule,
    noisy_latent,
    recover_eps,
    recover_x0,
    v_from_alpha_bar,
    v_target,
)
from .autoencoder import ConvAutoencoder, IdentityAutoencoder, train_autoencoder
from .conditioning import CHANNEL_LAYOUT, ConditionPack, LayoutError, build_condition, make_condition_pack
from .denoiser import DenoiserBundle, new_denoiser
from .training import FBDDTrainConfig, TrainingDivergence, train_fbdd, train_step
from .sampling import UntrainedModelError, sample_layer, sample_timesteps
from .decomposer import FBDDModels, decompose
from .checkpoint import (
    load_checkpoint,
    load_codec,
    load_denoiser,
    save_checkpoint,
    save_codec,
    save_denoiser,
)

__all__ = [
    "DiffusionSchedule",
    "cosine_schedule",
    "noisy_latent",
    "recover_eps",
    "recover_x0",
    "v_from_alpha_bar",
    "v_target",
    "ConvAutoencoder",
    "IdentityAutoencoder",
    "train_autoencoder",
    "CHANNEL_LAYOUT",
    "ConditionPack",
    "LayoutError",
    "build_condition",
    "make_condition_pack",
    "DenoiserBundle",
    "new_denoiser",
    "FBDDTrainConfig",
    "TrainingDivergence",
    "train_fbdd",
    "train_step",
    "UntrainedModelError",
    "sample_layer",
    "sample_timesteps",
    "FBDDModels",
    "decompose",
    "load_checkpoint",
    "load_codec",
    "load_denoiser",
    "save_checkpoint",
    "save_codec",
    "save_denoiser",
]
