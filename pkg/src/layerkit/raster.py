"""Raster primitives and the layer composition model.

Conventions used across the package:

* images are float arrays of shape (H, W, C) with C in {1, 3, 4} and
  values in [0, 1]
* alpha masks are float arrays of shape (H, W) in [0, 1]
* integer pixel formats exist only at the I/O boundary; conversion to
  8-bit rounds half up, so 0.5 maps to 128

The composition model is C = a * F + (1 - a) * B.  Where a is exactly 0
or exactly 1 the identities C == B and C == F hold bit for bit in IEEE
arithmetic, and several downstream guarantees (copy rules, manifest
recomposition checks) lean on that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Alpha within EPS_VIS of an endpoint counts as fully transparent or
# fully visible.  1/255 is one quantization step of an 8-bit mask.
EPS_VIS = 1.0 / 255.0


class ShapeError(ValueError):
    """An array does not have the shape an operation requires."""


def as_image(arr, name: str = "image") -> np.ndarray:
    """Validate and return arr as a float64 (H, W, C) image in [0, 1]."""
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 3 or out.shape[2] not in (1, 3, 4):
        raise ShapeError(
            f"{name}: expected (H, W, C) with C in {{1, 3, 4}}, got shape {np.shape(arr)}"
        )
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ShapeError(f"{name}: empty spatial dimensions {out.shape}")
    if np.isnan(out).any():
        raise ValueError(f"{name}: contains NaN")
    if out.min() < 0.0 or out.max() > 1.0:
        raise ValueError(f"{name}: values outside [0, 1]")
    return out


def as_alpha(arr, name: str = "alpha") -> np.ndarray:
    """Validate and return arr as a float64 (H, W) mask in [0, 1]."""
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2:
        raise ShapeError(f"{name}: expected (H, W), got shape {np.shape(arr)}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ShapeError(f"{name}: empty spatial dimensions {out.shape}")
    if np.isnan(out).any():
        raise ValueError(f"{name}: contains NaN")
    if out.min() < 0.0 or out.max() > 1.0:
        raise ValueError(f"{name}: values outside [0, 1]")
    return out


def composite(foreground, background, alpha) -> np.ndarray:
    """Blend foreground over background: a * F + (1 - a) * B.

    All inputs are validated.  Pixels with alpha exactly 1 return the
    foreground value unchanged and pixels with alpha exactly 0 return
    the background value unchanged, with no rounding in between.
    """
    fg = as_image(foreground, "foreground")
    bg = as_image(background, "background")
    a = as_alpha(alpha)
    if fg.shape != bg.shape:
        raise ShapeError(f"foreground {fg.shape} and background {bg.shape} differ")
    if a.shape != fg.shape[:2]:
        raise ShapeError(f"alpha {a.shape} does not match image {fg.shape[:2]}")
    a3 = a[:, :, None]
    out = a3 * fg + (1.0 - a3) * bg
    # Convex combination of values in [0, 1]; clip only guards against
    # last-ulp excursions and never moves the exact endpoint cases.
    return np.clip(out, 0.0, 1.0)


def quantize(img, bit_depth: int = 8) -> np.ndarray:
    """Map [0, 1] floats to unsigned integers, rounding half up."""
    if bit_depth == 8:
        peak, dtype = 255.0, np.uint8
    elif bit_depth == 16:
        peak, dtype = 65535.0, np.uint16
    else:
        raise ValueError(f"unsupported bit depth {bit_depth}")
    arr = np.asarray(img, dtype=np.float64)
    if np.isnan(arr).any():
        raise ValueError("quantize: contains NaN")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("quantize: values outside [0, 1]")
    return np.floor(arr * peak + 0.5).astype(dtype)


def dequantize(arr) -> np.ndarray:
    """Map unsigned integer pixels back to [0, 1] floats."""
    arr = np.asarray(arr)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float64) / 65535.0
    raise ValueError(f"unsupported dtype {arr.dtype}")


def region_copy(layer, source, alpha, target: str, eps_vis: float = EPS_VIS) -> np.ndarray:
    """Overwrite fully visible pixels of a layer estimate with composite values.

    target "fg" copies source pixels where alpha >= 1 - eps_vis (the
    foreground is all you see there); target "bg" copies where
    alpha <= eps_vis.  Copied pixels equal the source bit for bit, all
    other pixels are untouched.
    """
    lay = as_image(layer, "layer")
    src = as_image(source, "source")
    a = as_alpha(alpha)
    if lay.shape != src.shape:
        raise ShapeError(f"layer {lay.shape} and source {src.shape} differ")
    if a.shape != lay.shape[:2]:
        raise ShapeError(f"alpha {a.shape} does not match layer {lay.shape[:2]}")
    if not 0.0 <= eps_vis < 0.5:
        raise ValueError(f"eps_vis {eps_vis} outside [0, 0.5)")
    if target == "fg":
        mask = a >= 1.0 - eps_vis
    elif target == "bg":
        mask = a <= eps_vis
    else:
        raise ValueError(f"target must be 'fg' or 'bg', got {target!r}")
    out = lay.copy()
    out[mask] = src[mask]
    return out


def reconstruction_error(observed, layers: "LayeredImage") -> float:
    """Mean absolute deviation between observed and recomposed pixels."""
    obs = as_image(observed, "observed")
    recomposed = composite(layers.foreground, layers.background, layers.alpha)
    if obs.shape != recomposed.shape:
        raise ShapeError(f"observed {obs.shape} does not match layers {recomposed.shape}")
    return float(np.mean(np.abs(obs - recomposed)))


@dataclass(frozen=True)
class LayeredImage:
    """A composite together with the layers that explain it."""

    foreground: np.ndarray
    background: np.ndarray
    alpha: np.ndarray
    composite: np.ndarray = field(repr=False)

    @classmethod
    def from_layers(cls, foreground, background, alpha) -> "LayeredImage":
        comp = composite(foreground, background, alpha)
        return cls(
            foreground=as_image(foreground, "foreground"),
            background=as_image(background, "background"),
            alpha=as_alpha(alpha),
            composite=comp,
        )

    def validate(self, tol: float = 1e-6) -> None:
        """Check shapes and that the stored composite matches the layers."""
        fg = as_image(self.foreground, "foreground")
        bg = as_image(self.background, "background")
        a = as_alpha(self.alpha)
        comp = as_image(self.composite, "composite")
        if fg.shape != bg.shape or fg.shape != comp.shape:
            raise ShapeError("layer shapes disagree")
        if a.shape != fg.shape[:2]:
            raise ShapeError("alpha shape disagrees with layers")
        err = reconstruction_error(comp, self)
        if err > tol:
            raise ValueError(f"composite deviates from layers: MAD {err:.3g} > {tol:.3g}")

    @property
    def shape(self) -> tuple:
        return self.composite.shape
