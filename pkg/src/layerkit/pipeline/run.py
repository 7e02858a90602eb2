"""Three-stage orchestration: generate, determine foreground, layer.

Stage 1 produces the initial composite (generator adapter, or the
request's input image verbatim for real-image decomposition).  Stage 2
turns the foreground prompt into an alpha mask, either through the
detector -> segmenter -> trimap -> transparency -> matting chain or an
oracle alpha adapter.  Stage 3 runs the diffusion decomposer and the
alignment networks, enforces the visible-region copy rule, and emits a
layer stack.  Stage failures carry the stage name and the adapter
identity so runs can be diagnosed without digging through tracebacks.
"""

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..config import RuntimeConfig, config_hash
from ..diffusion.decomposer import FBDDModels, decompose
from ..hfa.refine import AlignBundle, ban_refine, fan_refine
from ..raster import EPS_VIS, LayeredImage, as_alpha, as_image, quantize, region_copy
from ..seeding import spawn_seeds
from ..trimap import make_trimap, refine_trimap_transparency
from .adapters import AdapterRegistry, adapter_identity
from .manifest import persist_stack

STAGES = ("generation", "foreground-determination", "layering")


class PipelineStageError(RuntimeError):
    """One pipeline stage failed; carries stage and adapter identity."""

    def __init__(self, stage: str, adapter: str, message: str):
        self.stage = stage
        self.adapter = adapter
        super().__init__(f"stage '{stage}' failed in '{adapter}': {message}")


@dataclass(frozen=True)
class PipelineRequest:
    """What to run: a prompt (or input image) plus foreground wording.

    foreground_indices select the prompt words naming the foreground;
    foreground_prompts lists explicit per-layer prompts for multi-layer
    decomposition, front-most first.
    """

    prompt: str = ""
    foreground_indices: tuple = ()
    foreground_prompts: tuple = ()
    input_image: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "foreground_indices",
                           tuple(int(i) for i in self.foreground_indices))
        object.__setattr__(self, "foreground_prompts",
                           tuple(str(p) for p in self.foreground_prompts))
        if self.input_image is not None:
            object.__setattr__(self, "input_image",
                               as_image(self.input_image, "input_image"))
        if not self.prompt and self.input_image is None:
            raise ValueError("request needs a prompt or an input image")
        tokens = self.prompt.split()
        for i in self.foreground_indices:
            if not 0 <= i < len(tokens):
                raise ValueError(
                    f"foreground index {i} out of range for {len(tokens)} prompt words"
                )

    def foreground_prompt(self) -> str:
        """The wording handed to stage 2 for the (single) foreground."""
        tokens = self.prompt.split()
        if self.foreground_indices:
            return " ".join(tokens[i] for i in self.foreground_indices)
        if self.foreground_prompts:
            return self.foreground_prompts[0]
        return self.prompt


@dataclass
class PipelineModels:
    fbdd: FBDDModels
    fan: Optional[AlignBundle] = None
    ban: Optional[AlignBundle] = None

    def __post_init__(self):
        if self.fan is not None and self.fan.role != "fan":
            raise ValueError(f"fan slot got a '{self.fan.role}' aligner")
        if self.ban is not None and self.ban.role != "ban":
            raise ValueError(f"ban slot got a '{self.ban.role}' aligner")


@dataclass
class PipelineResult:
    layers: tuple                   # (image, alpha or None) front-to-back
    composite: np.ndarray
    alpha: Optional[np.ndarray]
    layered: Optional[LayeredImage]
    provenance: dict
    manifest_path: Optional[Path] = None
    skipped: tuple = ()


def _run(stage: str, fn, *args):
    name = adapter_identity(fn)
    try:
        return fn(*args)
    except PipelineStageError:
        raise
    except Exception as e:
        raise PipelineStageError(stage, name, str(e)) from e


def _scaled_radius(radius: int, size: int, reference: int) -> int:
    if radius <= 0:
        return 0
    return max(1, round(radius * size / reference))


def determine_alpha(image, prompt: str, registry: AdapterRegistry,
                    cfg: RuntimeConfig) -> Optional[np.ndarray]:
    """Stage 2: prompt -> alpha, or None when nothing matches.

    With an alpha_oracle adapter the full chain is bypassed (desk
    mode); otherwise detector, segmenter and matting are mandatory and
    the transparency adapter refines the trimap when present.
    """
    stage = "foreground-determination"
    image = as_image(image, "composite")
    if registry.alpha_oracle is not None:
        alpha = _run(stage, registry.alpha_oracle, image, prompt)
        alpha = as_alpha(alpha, "oracle alpha")
        return None if not (alpha >= 0.5).any() else alpha

    registry.require(stage, ("detector", "segmenter", "matting"))
    box = _run(stage, registry.detector, image, prompt)
    if box is None:
        return None
    mask = _run(stage, registry.segmenter, image, box)
    mask = as_alpha(mask, "segmentation mask")

    side = min(image.shape[0], image.shape[1])
    erode = _scaled_radius(cfg.trimap.erode_radius, side, cfg.trimap.reference_size)
    dilate = _scaled_radius(cfg.trimap.dilate_radius, side, cfg.trimap.reference_size)
    trimap = make_trimap(mask, erode, dilate)
    if registry.transparency is not None:
        regions = _run(stage, registry.transparency, image)
        trimap = refine_trimap_transparency(trimap, regions)

    alpha = _run(stage, registry.matting, image, trimap)
    return as_alpha(alpha, "matting alpha")


def _check_copy_rule(layer, source, alpha, target: str) -> None:
    """Visible pixels must be byte-identical to the composite."""
    if target == "fg":
        keep = alpha >= 1.0 - EPS_VIS
    else:
        keep = alpha <= EPS_VIS
    if not keep.any():
        return
    a = quantize(layer, 8)[keep]
    b = quantize(source, 8)[keep]
    if not np.array_equal(a, b):
        raise PipelineStageError(
            "layering", "copy-rule",
            f"{target} output differs from the composite in its visible region",
        )


def _layer_once(comp, alpha, models: PipelineModels, steps: int, seed: int):
    """Stage 3 core: decompose then refine, copy rule enforced."""
    fg_hat, bg_hat = decompose(comp, alpha, models.fbdd, steps=steps, seed=seed)
    if models.fan is not None:
        fg = fan_refine(models.fan, comp, alpha, fg_hat)
    else:
        fg = region_copy(fg_hat, comp, alpha, "fg")
    if models.ban is not None:
        bg = ban_refine(models.ban, comp, alpha, bg_hat)
    else:
        bg = region_copy(bg_hat, comp, alpha, "bg")
    _check_copy_rule(fg, comp, alpha, "fg")
    _check_copy_rule(bg, comp, alpha, "bg")
    return fg, bg


def _stage_one(request: PipelineRequest, registry: AdapterRegistry):
    if request.input_image is not None:
        return request.input_image.copy(), "input-image"
    registry.require("generation", ("generator",))
    comp = _run("generation", registry.generator, request.prompt, request.seed)
    return as_image(comp, "generated composite"), adapter_identity(registry.generator)


def _provenance(request, registry, cfg, source, extra=None) -> dict:
    out = {
        "seed": int(request.seed),
        "prompt": request.prompt,
        "composite_source": source,
        "config_hash": config_hash(cfg),
        "adapters": registry.identities(),
    }
    if extra:
        out.update(extra)
    return out


def run_pipeline(request: PipelineRequest, registry: AdapterRegistry,
                 models: PipelineModels, config: Optional[RuntimeConfig] = None,
                 out_dir=None) -> PipelineResult:
    """Full single-foreground run; persists a stack when out_dir is set."""
    cfg = config if config is not None else RuntimeConfig()

    comp, source = _stage_one(request, registry)

    prompt_fg = request.foreground_prompt()
    alpha = determine_alpha(comp, prompt_fg, registry, cfg)
    if alpha is None:
        raise PipelineStageError(
            "foreground-determination",
            registry.identities().get("alpha_oracle",
                                      registry.identities().get("detector", "?")),
            f"prompt {prompt_fg!r} matched no region",
        )

    try:
        fg, bg = _layer_once(comp, alpha, models, cfg.sampler.steps, request.seed)
    except PipelineStageError:
        raise
    except Exception as e:
        raise PipelineStageError("layering", "fbdd+hfa", str(e)) from e

    layered = LayeredImage.from_layers(fg, bg, alpha)
    layers = ((fg, alpha), (bg, None))
    provenance = _provenance(request, registry, cfg, source,
                             {"foreground_prompt": prompt_fg})
    manifest_path = None
    if out_dir is not None:
        manifest_path = persist_stack(out_dir, layers, layered.composite, provenance)
    return PipelineResult(
        layers=layers,
        composite=layered.composite,
        alpha=alpha,
        layered=layered,
        provenance=provenance,
        manifest_path=manifest_path,
    )


def multi_layer_decompose(request: PipelineRequest, registry: AdapterRegistry,
                          models: PipelineModels,
                          config: Optional[RuntimeConfig] = None,
                          out_dir=None) -> PipelineResult:
    """Peel foregrounds off one at a time, front-most prompt first.

    Each round runs foreground determination and layering against the
    running background; prompts matching nothing are recorded as
    skipped with a warning.  With a single prompt this is exactly
    run_pipeline.
    """
    if not request.foreground_prompts:
        raise ValueError("multi-layer decomposition needs foreground prompts")
    if len(request.foreground_prompts) == 1:
        return run_pipeline(request, registry, models, config, out_dir)

    cfg = config if config is not None else RuntimeConfig()
    comp, source = _stage_one(request, registry)

    layer_seeds = spawn_seeds(request.seed, len(request.foreground_prompts))
    running = comp
    entries = []
    skipped = []
    for prompt, seed in zip(request.foreground_prompts, layer_seeds):
        alpha_k = determine_alpha(running, prompt, registry, cfg)
        if alpha_k is None or not (alpha_k >= 0.5).any():
            warnings.warn(f"foreground prompt {prompt!r} matched no region; skipped")
            skipped.append(prompt)
            continue
        try:
            fg_k, bg_k = _layer_once(running, alpha_k, models, cfg.sampler.steps, seed)
        except PipelineStageError:
            raise
        except Exception as e:
            raise PipelineStageError("layering", "fbdd+hfa", str(e)) from e
        entries.append((fg_k, alpha_k))
        running = bg_k
    entries.append((running, None))

    from .manifest import recompose_stack

    final = recompose_stack(entries)
    provenance = _provenance(request, registry, cfg, source, {
        "foreground_prompts": list(request.foreground_prompts),
        "skipped_prompts": list(skipped),
    })
    manifest_path = None
    if out_dir is not None:
        manifest_path = persist_stack(out_dir, entries, final, provenance)
    return PipelineResult(
        layers=tuple(entries),
        composite=final,
        alpha=entries[0][1] if len(entries) > 1 else None,
        layered=None,
        provenance=provenance,
        manifest_path=manifest_path,
        skipped=tuple(skipped),
    )
