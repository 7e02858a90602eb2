"""PNG persistence for images, masks and trimaps.

Images and masks round-trip through 8- or 16-bit PNG; trimaps are
stored 8-bit with the fixed level mapping {0 -> 0, 0.5 -> 128, 1 -> 255}.
All floats follow the package convention of [0, 1] values.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .raster import ShapeError, as_alpha, as_image, dequantize, quantize

TRIMAP_BYTES = (0, 128, 255)


def _encode(path: Path, arr: np.ndarray) -> None:
    ok, buf = cv2.imencode(".png", arr)
    if not ok:
        raise IOError(f"PNG encoding failed for {path}")
    Path(path).write_bytes(buf.tobytes())


def save_image(path, image, bit_depth: int = 16) -> None:
    """Write an (H, W, C) float image as PNG; channels stored RGB(A)."""
    img = as_image(image)
    q = quantize(img, bit_depth)
    if q.shape[2] == 1:
        q = q[:, :, 0]
    elif q.shape[2] == 3:
        q = cv2.cvtColor(q, cv2.COLOR_RGB2BGR)
    else:
        q = cv2.cvtColor(q, cv2.COLOR_RGBA2BGRA)
    _encode(Path(path), q)


def load_image(path) -> np.ndarray:
    """Read a PNG into a float (H, W, C) image in [0, 1]."""
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise IOError(f"cannot read image {path}")
    if arr.ndim == 2:
        arr = arr[:, :, None]
    elif arr.shape[2] == 3:
        arr = cv2.cvtColor(arr, cv2.COLOR_BGR2RGB)
    elif arr.shape[2] == 4:
        arr = cv2.cvtColor(arr, cv2.COLOR_BGRA2RGBA)
    return dequantize(arr)


def save_alpha(path, alpha, bit_depth: int = 16) -> None:
    a = as_alpha(alpha)
    _encode(Path(path), quantize(a, bit_depth))


def load_alpha(path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise IOError(f"cannot read mask {path}")
    if arr.ndim != 2:
        raise ShapeError(f"mask file {path} is not single-channel")
    return dequantize(arr)


def save_trimap(path, trimap) -> None:
    """Write a {0, 0.5, 1} trimap as an 8-bit PNG with bytes {0, 128, 255}."""
    from .trimap import validate_trimap

    t = validate_trimap(trimap)
    # quantize() rounds half up, so the three levels land exactly on
    # 0, 128, 255.
    _encode(Path(path), quantize(t, 8))


def load_trimap(path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise IOError(f"cannot read trimap {path}")
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ShapeError(f"trimap file {path} is not 8-bit single-channel")
    if not np.isin(arr, TRIMAP_BYTES).all():
        raise ValueError(f"trimap file {path} holds bytes outside {{0, 128, 255}}")
    out = np.zeros(arr.shape, dtype=np.float64)
    out[arr == 128] = 0.5
    out[arr == 255] = 1.0
    return out
