"""External-model adapter slots and desk-mode oracle implementations.

The pipeline calls pretrained models (text-to-image generator, open
vocabulary detector, segmenter, matting network, ...) through plain
callables so any backend can be attached.  Every slot is optional at
construction; a stage that needs a slot resolves it up front and a
missing one raises AdapterConfigError before any work is done.

Adapter callables and their signatures:

    generator(prompt: str, seed: int) -> image (H, W, 3) float in [0, 1]
    detector(image, prompt: str) -> (y0, x0, y1, x1) half-open box, or
        None when nothing matches
    segmenter(image, box) -> binary mask (H, W) float {0, 1}
    matting(image, trimap) -> alpha (H, W) float in [0, 1]
    transparency(image) -> binary regions (H, W) float {0, 1}
    inpainter(image, mask) -> image (H, W, 3)
    alpha_oracle(image, prompt: str) -> alpha (H, W); when present it
        replaces the detector/segmenter/matting chain entirely

External processes are bridged by ProcessAdapter, which exchanges
numpy arrays through a scratch directory (request.json plus one .npy
file per array in each direction).
"""

import json
import subprocess
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..raster import as_alpha, as_image

SLOTS = (
    "generator",
    "detector",
    "segmenter",
    "matting",
    "transparency",
    "inpainter",
    "alpha_oracle",
)


class AdapterConfigError(ValueError):
    """A stage requires adapter slots that are not configured."""


def adapter_identity(fn) -> str:
    """Stable-ish name for provenance records."""
    name = getattr(fn, "adapter_name", None)
    if name:
        return str(name)
    mod = getattr(fn, "__module__", "") or ""
    qual = getattr(fn, "__qualname__", None) or fn.__class__.__name__
    return f"{mod}.{qual}" if mod else qual


@dataclass
class AdapterRegistry:
    generator: Optional[Callable] = None
    detector: Optional[Callable] = None
    segmenter: Optional[Callable] = None
    matting: Optional[Callable] = None
    transparency: Optional[Callable] = None
    inpainter: Optional[Callable] = None
    alpha_oracle: Optional[Callable] = None

    def require(self, stage: str, names) -> None:
        """Fail fast, listing every missing slot for the stage."""
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise AdapterConfigError(
                f"stage '{stage}' needs adapter slot(s) {missing} "
                "but none are configured and no fallback exists"
            )

    def identities(self) -> dict:
        out = {}
        for f in fields(self):
            fn = getattr(self, f.name)
            if fn is not None:
                out[f.name] = adapter_identity(fn)
        return out


def _named(fn, name):
    fn.adapter_name = name
    return fn


def _mask_bbox(mask):
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    return (int(ys.min()), int(xs.min()), int(ys.max()) + 1, int(xs.max()) + 1)


@dataclass(frozen=True)
class OracleScene:
    """Ground-truth answers for desk-mode runs on synthetic scenes.

    objects holds (prompt token, alpha, foreground) front-to-back; a
    query prompt matches the first object whose token appears in it.
    """

    composite: np.ndarray
    background: np.ndarray
    objects: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "composite", as_image(self.composite, "composite"))
        object.__setattr__(self, "background", as_image(self.background, "background"))
        objs = []
        for token, alpha, fg in self.objects:
            objs.append((str(token), as_alpha(alpha, "alpha"), as_image(fg, "foreground")))
        object.__setattr__(self, "objects", tuple(objs))

    def lookup(self, prompt: str):
        tokens = prompt.split()
        for token, alpha, fg in self.objects:
            if token in tokens or token == prompt:
                return alpha, fg
        return None

    def registry(self) -> AdapterRegistry:
        scene = self

        def generator(prompt, seed):
            return scene.composite.copy()

        def detector(image, prompt):
            hit = scene.lookup(prompt)
            if hit is None:
                return None
            return _mask_bbox(hit[0] >= 0.5)

        def segmenter(image, box):
            y0, x0, y1, x1 = box
            best, best_overlap = None, -1.0
            for _, alpha, _ in scene.objects:
                binary = (alpha >= 0.5).astype(np.float64)
                region = binary[y0:y1, x0:x1].sum()
                if region > best_overlap:
                    best, best_overlap = binary, region
            if best is None:
                raise ValueError("oracle scene has no objects")
            out = np.zeros_like(best)
            out[y0:y1, x0:x1] = best[y0:y1, x0:x1]
            return out

        def matting(image, trimap):
            best, best_err = None, np.inf
            for _, alpha, _ in scene.objects:
                known = trimap != 0.5
                err = np.abs(alpha[known] - trimap[known]).sum() if known.any() else 0.0
                if err < best_err:
                    best, best_err = alpha, err
            if best is None:
                raise ValueError("oracle scene has no objects")
            return best.copy()

        def alpha_oracle(image, prompt):
            hit = scene.lookup(prompt)
            if hit is None:
                return np.zeros(image.shape[:2])
            return hit[0].copy()

        return AdapterRegistry(
            generator=_named(generator, "oracle.generator"),
            detector=_named(detector, "oracle.detector"),
            segmenter=_named(segmenter, "oracle.segmenter"),
            matting=_named(matting, "oracle.matting"),
            alpha_oracle=_named(alpha_oracle, "oracle.alpha"),
        )


def registry_from_sample(sample, prompt_token: str = "object") -> AdapterRegistry:
    """Oracle registry answering for one synthetic dataset sample."""
    scene = OracleScene(
        composite=sample.composite,
        background=sample.background,
        objects=((prompt_token, sample.alpha, sample.foreground),),
    )
    return scene.registry()


class ProcessAdapter:
    """File-protocol bridge to an adapter living in another process.

    Each call creates a scratch directory and runs

        argv... request.json response.json

    request.json:  {"kind": str, "params": {...},
                    "arrays": {name: relative .npy path}}
    response.json: {"arrays": {name: relative .npy path}}

    Paths are relative to the scratch directory.  The child process
    must exit 0 and write every output array as float64 .npy.
    """

    def __init__(self, argv, timeout: float = 300.0):
        self.argv = [str(a) for a in argv]
        self.timeout = float(timeout)
        self.adapter_name = "process:" + " ".join(self.argv)

    def call(self, kind: str, arrays: dict, params: Optional[dict] = None) -> dict:
        with tempfile.TemporaryDirectory(prefix="layerkit-adapter-") as tmp:
            root = Path(tmp)
            req = {"kind": kind, "params": params or {}, "arrays": {}}
            for name, arr in arrays.items():
                rel = f"in_{name}.npy"
                np.save(root / rel, np.asarray(arr, dtype=np.float64))
                req["arrays"][name] = rel
            req_path = root / "request.json"
            resp_path = root / "response.json"
            req_path.write_text(json.dumps(req, sort_keys=True))
            proc = subprocess.run(
                self.argv + [str(req_path), str(resp_path)],
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
            if proc.returncode != 0:
                raise RuntimeError(
                    f"adapter process failed ({proc.returncode}): "
                    f"{proc.stderr.strip()[:500]}"
                )
            if not resp_path.exists():
                raise RuntimeError("adapter process wrote no response.json")
            resp = json.loads(resp_path.read_text())
            out = {}
            for name, rel in resp.get("arrays", {}).items():
                out[name] = np.load(root / rel)
            return out


def _process_slot(slot: str, adapter: ProcessAdapter):
    """Wrap a ProcessAdapter as a callable for one registry slot."""

    if slot == "generator":
        def fn(prompt, seed):
            out = adapter.call("generator", {}, {"prompt": prompt, "seed": int(seed)})
            return out["image"]
    elif slot == "detector":
        def fn(image, prompt):
            out = adapter.call("detector", {"image": image}, {"prompt": prompt})
            box = out.get("box")
            if box is None or np.asarray(box).size == 0:
                return None
            y0, x0, y1, x1 = (int(v) for v in np.asarray(box).ravel()[:4])
            return (y0, x0, y1, x1)
    elif slot == "segmenter":
        def fn(image, box):
            out = adapter.call(
                "segmenter", {"image": image}, {"box": [int(v) for v in box]}
            )
            return out["mask"]
    elif slot == "matting":
        def fn(image, trimap):
            out = adapter.call("matting", {"image": image, "trimap": trimap})
            return out["alpha"]
    elif slot == "transparency":
        def fn(image):
            out = adapter.call("transparency", {"image": image})
            return out["regions"]
    elif slot == "inpainter":
        def fn(image, mask):
            out = adapter.call("inpainter", {"image": image, "mask": mask})
            return out["image"]
    elif slot == "alpha_oracle":
        def fn(image, prompt):
            out = adapter.call("alpha_oracle", {"image": image}, {"prompt": prompt})
            return out["alpha"]
    else:
        raise AdapterConfigError(f"unknown adapter slot '{slot}'")
    return _named(fn, adapter.adapter_name)


def load_adapters(path) -> AdapterRegistry:
    """Build a registry from a JSON adapter file.

    Two keys are understood:
      "oracle_sample": {"corpus": dir, "id": sample id} naming a
          persisted dataset sample; loads it and installs the full
          oracle registry (desk mode)
      any slot name: {"argv": [...], "timeout": seconds} describing an
          external adapter process for that slot

    Process entries override oracle slots of the same name.
    """
    path = Path(path)
    spec = json.loads(path.read_text())
    if not isinstance(spec, dict):
        raise AdapterConfigError("adapter file must hold a JSON object")
    registry = AdapterRegistry()
    oracle = spec.pop("oracle_sample", None)
    if oracle is not None:
        from ..datforge import DirectoryCorpus

        corpus = DirectoryCorpus(oracle["corpus"])
        manifest = corpus.read_manifest()
        wanted = str(oracle["id"])
        entry = next((e for e in manifest["samples"] if e["id"] == wanted), None)
        if entry is None:
            raise AdapterConfigError(f"sample id '{wanted}' not in corpus manifest")
        registry = registry_from_sample(corpus.load_sample(entry))
    for slot, entry in spec.items():
        if slot not in SLOTS:
            raise AdapterConfigError(f"unknown adapter slot '{slot}' in {path}")
        if not isinstance(entry, dict) or "argv" not in entry:
            raise AdapterConfigError(f"adapter slot '{slot}' needs an 'argv' list")
        adapter = ProcessAdapter(entry["argv"], timeout=entry.get("timeout", 300.0))
        setattr(registry, slot, _process_slot(slot, adapter))
    return registry
