"""Classical baselines: energy minimization and occlusion inpainting.

These provide reference decompositions with no learned components: a
coupled quadratic solver that explains the composite with two smooth
layers, and inpainting of the foreground-occluded background region.
"""

from .smooth import SolveInfo, SolverConfig, decompose_smooth, solver_energy
from .inpaint import (
    InpaintAdapterError,
    constant_fill,
    diffusion_fill,
    inpaint_occluded,
    occlusion_mask,
)

__all__ = [
    "SolveInfo",
    "SolverConfig",
    "decompose_smooth",
    "solver_energy",
    "InpaintAdapterError",
    "constant_fill",
    "diffusion_fill",
    "inpaint_occluded",
    "occlusion_mask",
]
