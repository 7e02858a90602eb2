"""Aligner persistence in the shared weight container."""

from __future__ import annotations

from ..diffusion.checkpoint import load_checkpoint, save_checkpoint, _load_module_arrays, _module_arrays
from ..nets import UNet
from .refine import AlignBundle


def save_aligner(path, bundle: AlignBundle) -> None:
    meta = {
        "role": bundle.role,
        "loss_variant": bundle.loss_variant,
        "trained": bundle.trained,
        "train_meta": bundle.train_meta,
        "net": {
            "in_channels": bundle.module.in_channels,
            "out_channels": bundle.module.out_channels,
            "base_width": bundle.module.base_width,
            "stages": bundle.module.stages,
            "emb_dim": bundle.module.emb_dim,
        },
    }
    save_checkpoint(path, "aligner", meta, _module_arrays(bundle.module))


def load_aligner(path) -> AlignBundle:
    kind, meta, arrays = load_checkpoint(path)
    if kind != "aligner":
        raise ValueError(f"{path} holds a {kind!r} checkpoint, not an aligner")
    module = UNet(**meta["net"])
    _load_module_arrays(module, arrays)
    module.eval()
    return AlignBundle(
        module=module,
        role=meta["role"],
        loss_variant=meta["loss_variant"],
        trained=meta["trained"],
        train_meta=meta.get("train_meta", {}),
    )
