"""Layer-stack persistence: ordered layer PNGs plus a JSON manifest.

A stack is a front-to-back list of foreground layers (each with its
own alpha) over exactly one background layer, together with the
composite they came from.  Everything raster goes to 16-bit PNG; the
manifest records one sha256 per file plus provenance, so a load can
prove it sees the bytes the writer produced.  The recomposition
invariant (stack recomposes to the composite within 1/255 per pixel)
is enforced at write time and re-checked on load.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .. import pngio
from ..raster import as_alpha, as_image, composite as compose

SCHEMA = 1
RECOMPOSE_TOL = 1.0 / 255.0


class IntegrityError(RuntimeError):
    """Persisted stack does not match its manifest."""


@dataclass(frozen=True)
class LayerEntry:
    role: str                       # "fg" | "bg"
    image_path: str
    alpha_path: Optional[str] = None

    def __post_init__(self):
        if self.role not in ("fg", "bg"):
            raise ValueError(f"role must be 'fg' or 'bg', got {self.role!r}")
        if self.role == "fg" and not self.alpha_path:
            raise ValueError("foreground entries need an alpha path")
        if self.role == "bg" and self.alpha_path:
            raise ValueError("background entries carry no alpha")


@dataclass(frozen=True)
class LayerStackManifest:
    entries: tuple                  # front-to-back, background last
    composite_path: str
    provenance: dict = field(default_factory=dict)
    hashes: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("layer stack is empty")
        if entries[-1].role != "bg":
            raise ValueError("last stack entry must be the background")
        if sum(1 for e in entries if e.role == "bg") != 1:
            raise ValueError("stack must hold exactly one background")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "layer-stack",
            "composite": self.composite_path,
            "layers": [
                {"role": e.role, "image": e.image_path, "alpha": e.alpha_path}
                for e in self.entries
            ],
            "provenance": self.provenance,
            "sha256": self.hashes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LayerStackManifest":
        entries = tuple(
            LayerEntry(role=e["role"], image_path=e["image"], alpha_path=e.get("alpha"))
            for e in data["layers"]
        )
        return cls(
            entries=entries,
            composite_path=data["composite"],
            provenance=data.get("provenance", {}),
            hashes=data.get("sha256", {}),
        )


def recompose_stack(layers) -> np.ndarray:
    """Composite [(image, alpha or None), ...] front-to-back.

    The last entry is the background (alpha ignored); each foreground
    is blended over the running result from back to front.
    """
    layers = list(layers)
    if not layers:
        raise ValueError("nothing to recompose")
    out = as_image(layers[-1][0], "background")
    for image, alpha in reversed(layers[:-1]):
        if alpha is None:
            raise ValueError("foreground entries need an alpha")
        out = compose(as_image(image, "layer"), out, as_alpha(alpha, "alpha"))
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def persist_stack(root, layers, composite_image, provenance=None) -> Path:
    """Write a layer stack under root and return the manifest path.

    layers: [(image, alpha), ...] front-to-back foregrounds followed by
    (background, None) last.  Raises ValueError if the stack does not
    recompose to composite_image within 1/255 per pixel.
    """
    layers = [(as_image(im, "layer"), None if a is None else as_alpha(a, "alpha"))
              for im, a in layers]
    composite_image = as_image(composite_image, "composite")
    err = np.abs(recompose_stack(layers) - composite_image).max()
    if err > RECOMPOSE_TOL:
        raise ValueError(
            f"stack does not recompose its composite: max error {err:.6f} "
            f"exceeds {RECOMPOSE_TOL:.6f}"
        )

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    files = {}
    n_fg = len(layers) - 1
    for i, (image, alpha) in enumerate(layers):
        if i < n_fg:
            img_rel = f"layer_{i:02d}_fg.png"
            alpha_rel = f"layer_{i:02d}_fg_alpha.png"
            pngio.save_image(root / img_rel, image, bit_depth=16)
            pngio.save_alpha(root / alpha_rel, alpha, bit_depth=16)
            entries.append(LayerEntry("fg", img_rel, alpha_rel))
            files[img_rel] = _sha256(root / img_rel)
            files[alpha_rel] = _sha256(root / alpha_rel)
        else:
            img_rel = "background.png"
            pngio.save_image(root / img_rel, image, bit_depth=16)
            entries.append(LayerEntry("bg", img_rel))
            files[img_rel] = _sha256(root / img_rel)
    comp_rel = "composite.png"
    pngio.save_image(root / comp_rel, composite_image, bit_depth=16)
    files[comp_rel] = _sha256(root / comp_rel)

    manifest = LayerStackManifest(
        entries=tuple(entries),
        composite_path=comp_rel,
        provenance=provenance or {},
        hashes=files,
    )
    out = root / "manifest.json"
    out.write_text(json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n")
    return out


def load_stack(manifest_path):
    """Load (layers, composite, manifest) and verify integrity.

    Every referenced file's sha256 must match the manifest and the
    stack must still recompose within tolerance; violations raise
    IntegrityError naming the offending file.
    """
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    manifest = LayerStackManifest.from_dict(json.loads(manifest_path.read_text()))

    referenced = [manifest.composite_path]
    for e in manifest.entries:
        referenced.append(e.image_path)
        if e.alpha_path:
            referenced.append(e.alpha_path)
    for rel in referenced:
        path = root / rel
        if not path.exists():
            raise IntegrityError(f"missing stack file: {rel}")
        want = manifest.hashes.get(rel)
        if want is None:
            raise IntegrityError(f"manifest has no checksum for {rel}")
        got = _sha256(path)
        if got != want:
            raise IntegrityError(f"checksum mismatch for {rel}")

    layers = []
    for e in manifest.entries:
        image = pngio.load_image(root / e.image_path)
        alpha = pngio.load_alpha(root / e.alpha_path) if e.alpha_path else None
        layers.append((image, alpha))
    composite_image = pngio.load_image(root / manifest.composite_path)
    err = np.abs(recompose_stack(layers) - composite_image).max()
    # 16-bit quantization adds at most a few 1/65535 steps on top
    if err > RECOMPOSE_TOL + 4.0 / 65535.0:
        raise IntegrityError(
            f"loaded stack no longer recomposes its composite (max error {err:.6f})"
        )
    return layers, composite_image, manifest
