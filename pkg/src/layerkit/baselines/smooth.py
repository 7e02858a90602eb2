"""Smoothness-regularized layer decomposition.

Minimizes, over both layers jointly,

    E(F, B) = sum_p |a_p F_p + (1 - a_p) B_p - C_p|^2
            + w * sum_{p~q} (|F_p - F_q|^2 + |B_p - B_q|^2)

with 4-neighbor grid edges.  The solver is red-black Gauss-Seidel on
2x2 pixel blocks: for one pixel with neighbors fixed, the optimal
(F_p, B_p) solves a 2x2 linear system per channel whose determinant
w*d*(a^2 + (1-a)^2) + w^2 d^2 is positive whenever w > 0, so every
update is exact coordinate minimization and the energy never
increases.  A coarse-to-fine pyramid supplies initialization; the
minimizer itself is unique whenever the energy is strictly convex
(any mask containing both fully visible and fully hidden pixels).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from ..raster import ShapeError, as_alpha, as_image


@dataclass(frozen=True)
class SolverConfig:
    smoothness: float = 1.0
    levels: int | None = None  # None: log2(min side) - 2, at least 1
    iterations: int = 200
    tol: float = 1e-6

    def __post_init__(self):
        if self.smoothness <= 0:
            raise ValueError(f"smoothness must be > 0, got {self.smoothness}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.tol < 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")
        if self.levels is not None and self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")


@dataclass
class SolveInfo:
    converged: bool
    energies: list = field(default_factory=list)  # one trace per level, coarse first
    iterations: list = field(default_factory=list)


def solver_energy(fg, bg, comp, alpha, smoothness: float) -> float:
    """The exact objective the solver minimizes."""
    f = np.asarray(fg, dtype=np.float64)
    b = np.asarray(bg, dtype=np.float64)
    c = np.asarray(comp, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)[:, :, None]
    resid = a * f + (1.0 - a) * b - c
    data = float(np.sum(resid * resid))
    smooth = 0.0
    for x in (f, b):
        smooth += float(np.sum((x[1:] - x[:-1]) ** 2))
        smooth += float(np.sum((x[:, 1:] - x[:, :-1]) ** 2))
    return data + smoothness * smooth


def _neighbor_sum(x: np.ndarray) -> np.ndarray:
    s = np.zeros_like(x)
    s[1:] += x[:-1]
    s[:-1] += x[1:]
    s[:, 1:] += x[:, :-1]
    s[:, :-1] += x[:, 1:]
    return s


def _degree(h: int, w: int) -> np.ndarray:
    deg = np.full((h, w), 4.0)
    deg[0] -= 1.0
    deg[-1] -= 1.0
    deg[:, 0] -= 1.0
    deg[:, -1] -= 1.0
    return deg


def _solve_level(comp, alpha, fg, bg, config: SolverConfig):
    h, w = alpha.shape
    a = alpha[:, :, None]
    deg = _degree(h, w)[:, :, None]
    wgt = config.smoothness
    a11 = a * a + wgt * deg
    a12 = a * (1.0 - a)
    a22 = (1.0 - a) ** 2 + wgt * deg
    det = a11 * a22 - a12 * a12
    rhs_f_data = a * comp
    rhs_b_data = (1.0 - a) * comp
    ii, jj = np.mgrid[0:h, 0:w]
    colors = ((ii + jj) % 2 == 0, (ii + jj) % 2 == 1)
    energies = [solver_energy(fg, bg, comp, alpha, wgt)]
    converged = False
    for it in range(config.iterations):
        for mask in colors:
            rf = rhs_f_data + wgt * _neighbor_sum(fg)
            rb = rhs_b_data + wgt * _neighbor_sum(bg)
            f_new = (a22 * rf - a12 * rb) / det
            b_new = (a11 * rb - a12 * rf) / det
            fg[mask] = f_new[mask]
            bg[mask] = b_new[mask]
        energies.append(solver_energy(fg, bg, comp, alpha, wgt))
        prev, cur = energies[-2], energies[-1]
        if prev - cur <= config.tol * max(cur, 1.0):
            converged = True
            break
    return fg, bg, energies, converged


def _downsample(arr: np.ndarray, h: int, w: int) -> np.ndarray:
    out = cv2.resize(arr.astype(np.float32), (w, h), interpolation=cv2.INTER_AREA)
    return out.astype(np.float64)


def _upsample(arr: np.ndarray, h: int, w: int) -> np.ndarray:
    out = cv2.resize(arr.astype(np.float32), (w, h), interpolation=cv2.INTER_LINEAR)
    return out.astype(np.float64)


def decompose_smooth(comp, alpha, config: SolverConfig = SolverConfig()):
    """Minimize the layer energy; returns (fg, bg, info).

    Both layers are initialized with the composite at the coarsest
    pyramid level and refined level by level.  Outputs are clamped to
    [0, 1]; the recorded energy traces are pre-clamp.
    """
    c = as_image(comp, "composite")
    a = as_alpha(alpha)
    if a.shape != c.shape[:2]:
        raise ShapeError(f"alpha {a.shape} does not match composite {c.shape[:2]}")
    h, w = a.shape
    if min(h, w) < 2:
        raise ShapeError("composite must be at least 2x2")
    levels = config.levels
    if levels is None:
        levels = max(1, int(np.log2(min(h, w))) - 2)
    shapes = [(h, w)]
    for _ in range(levels - 1):
        ph, pw = shapes[-1]
        nh, nw = max(2, (ph + 1) // 2), max(2, (pw + 1) // 2)
        if (nh, nw) == shapes[-1]:
            break
        shapes.append((nh, nw))
    shapes = shapes[::-1]  # coarse first

    info = SolveInfo(converged=False)
    fg = bg = None
    for li, (lh, lw) in enumerate(shapes):
        lc = _downsample(c, lh, lw) if (lh, lw) != (h, w) else c.copy()
        la = np.clip(_downsample(a, lh, lw), 0.0, 1.0) if (lh, lw) != (h, w) else a
        if fg is None:
            fg, bg = lc.copy(), lc.copy()
        else:
            fg, bg = _upsample(fg, lh, lw), _upsample(bg, lh, lw)
        fg, bg, energies, converged = _solve_level(lc, la, fg, bg, config)
        info.energies.append(energies)
        info.iterations.append(len(energies) - 1)
        if li == len(shapes) - 1:
            info.converged = converged
    return np.clip(fg, 0.0, 1.0), np.clip(bg, 0.0, 1.0), info
