"""Self-describing, byte-deterministic weight container.

Layout: 8-byte magic, 8-byte little-endian header length, canonical
JSON header, then raw little-endian array blobs in header order.  The
header carries the model kind, its hyperparameters and the channel
layout tag, so loading reconstructs the network without outside
knowledge and refuses models whose layout this build does not speak.
Identical state always serializes to identical bytes (no timestamps,
no pickles).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from ..nets import UNet
from .conditioning import CHANNEL_LAYOUT, LayoutError
from .denoiser import DenoiserBundle
from .schedule import DiffusionSchedule

MAGIC = b"LKWGT001"


def save_checkpoint(path, kind: str, meta: dict, arrays: dict) -> None:
    entries = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        entries.append({"name": name, "dtype": le.dtype.str, "shape": list(le.shape)})
        blobs.append(le.tobytes())
    header = {"schema": 1, "kind": kind, "meta": meta, "arrays": entries}
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path):
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path} is not a weight container (bad magic)")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16:16 + hlen].decode("utf-8"))
    offset = 16 + hlen
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        count = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).reshape(shape)
        arrays[entry["name"]] = arr.copy()
        offset += nbytes
    return header["kind"], header["meta"], arrays


def _module_arrays(module: torch.nn.Module, prefix: str = "net.") -> dict:
    return {
        prefix + name: tensor.detach().cpu().numpy()
        for name, tensor in module.state_dict().items()
    }


def _load_module_arrays(module: torch.nn.Module, arrays: dict, prefix: str = "net.") -> None:
    state = {
        name[len(prefix):]: torch.from_numpy(np.ascontiguousarray(arr))
        for name, arr in arrays.items()
        if name.startswith(prefix)
    }
    module.load_state_dict(state)


def save_denoiser(path, bundle: DenoiserBundle) -> None:
    meta = {
        "branch": bundle.branch,
        "factor": bundle.factor,
        "latent_channels": bundle.latent_channels,
        "layout": bundle.layout,
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
    arrays = {"schedule.alpha_bar": bundle.schedule.alpha_bar}
    arrays.update(_module_arrays(bundle.module))
    save_checkpoint(path, "denoiser", meta, arrays)


def save_codec(path, codec) -> None:
    """Persist either codec flavor; identity saves hyperparameters only."""
    from .autoencoder import ConvAutoencoder, IdentityAutoencoder

    if isinstance(codec, IdentityAutoencoder):
        meta = {"arch": "identity", "channels": codec.latent_channels}
        save_checkpoint(path, "codec", meta, {})
    elif isinstance(codec, ConvAutoencoder):
        meta = {
            "arch": "conv",
            "factor": codec.factor,
            "latent_channels": codec.latent_channels,
            "width": codec.width,
            "trained": codec.trained,
        }
        save_checkpoint(path, "codec", meta, _module_arrays(codec.net))
    else:
        raise TypeError(f"cannot persist codec of type {type(codec).__name__}")


def load_codec(path):
    from .autoencoder import ConvAutoencoder, IdentityAutoencoder

    kind, meta, arrays = load_checkpoint(path)
    if kind != "codec":
        raise ValueError(f"{path} holds a {kind!r} checkpoint, not a codec")
    if meta["arch"] == "identity":
        return IdentityAutoencoder(channels=meta["channels"])
    codec = ConvAutoencoder(
        factor=meta["factor"],
        latent_channels=meta["latent_channels"],
        width=meta["width"],
    )
    _load_module_arrays(codec.net, arrays)
    codec.net.eval()
    codec.trained = bool(meta["trained"])
    return codec


def load_denoiser(path) -> DenoiserBundle:
    kind, meta, arrays = load_checkpoint(path)
    if kind != "denoiser":
        raise ValueError(f"{path} holds a {kind!r} checkpoint, not a denoiser")
    if meta["layout"] != CHANNEL_LAYOUT:
        raise LayoutError(
            f"checkpoint layout {meta['layout']!r} differs from this build's {CHANNEL_LAYOUT!r}"
        )
    module = UNet(**meta["net"])
    _load_module_arrays(module, arrays)
    module.eval()
    bundle = DenoiserBundle(
        module=module,
        branch=meta["branch"],
        factor=meta["factor"],
        latent_channels=meta["latent_channels"],
        schedule=DiffusionSchedule(alpha_bar=arrays["schedule.alpha_bar"].astype(np.float64)),
        layout=meta["layout"],
        trained=meta["trained"],
        train_meta=meta.get("train_meta", {}),
    )
    return bundle
