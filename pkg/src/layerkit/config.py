"""Runtime configuration: one nested schema for every tool.

Values resolve in three layers, later wins:
  1. dataclass defaults below
  2. a JSON or YAML config file (nested by section)
  3. environment variables LAYERKIT_<SECTION>__<KEY>, e.g.
     LAYERKIT_SAMPLER__STEPS=25 or LAYERKIT_HFA__HF_SCALES='[0, 1]'

Env values are parsed as JSON when possible, else kept as strings.
Unknown sections or keys fail loudly.  config_hash() fingerprints the
fully resolved config so runs can prove what they were configured with.
"""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

ENV_PREFIX = "LAYERKIT_"


@dataclass
class DataConfig:
    count: int = 200
    resolution: int = 64
    with_trimaps: bool = True
    bit_depth: int = 16


@dataclass
class TrimapConfig:
    # radii are defined at reference_size and scaled with the short side
    erode_radius: int = 2
    dilate_radius: int = 4
    reference_size: int = 64


@dataclass
class FBDDConfig:
    steps: int = 500
    batch_size: int = 8
    lr: float = 2e-4
    base_width: int = 32
    stages: int = 3
    schedule_steps: int = 1000
    codec: str = "identity"         # "identity" | "conv"
    latent_factor: int = 4          # conv codec only
    latent_channels: int = 4        # conv codec only


@dataclass
class HFAConfig:
    steps: int = 500
    batch_size: int = 8
    lr: float = 2e-4
    base_width: int = 32
    stages: int = 3
    ban_weight: float = 0.2
    hf_scales: tuple = (0, 1, 2)


@dataclass
class SolverConfigSection:
    smoothness: float = 1.0
    iterations: int = 200
    tol: float = 1e-6


@dataclass
class SamplerConfig:
    steps: int = 50


@dataclass
class RuntimeConfig:
    data: DataConfig = field(default_factory=DataConfig)
    trimap: TrimapConfig = field(default_factory=TrimapConfig)
    fbdd: FBDDConfig = field(default_factory=FBDDConfig)
    hfa: HFAConfig = field(default_factory=HFAConfig)
    solver: SolverConfigSection = field(default_factory=SolverConfigSection)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)


def default_config() -> RuntimeConfig:
    return RuntimeConfig()


def _coerce(current, value, where: str):
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            low = value.strip().lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
        raise ValueError(f"{where}: cannot read {value!r} as a boolean")
    if isinstance(current, int) and not isinstance(current, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ValueError(f"{where}: cannot read {value!r} as an integer")
        out = int(value)
        if isinstance(value, float) and out != value:
            raise ValueError(f"{where}: {value!r} is not an integer")
        return out
    if isinstance(current, float):
        return float(value)
    if isinstance(current, tuple):
        if isinstance(value, (list, tuple)):
            return tuple(int(v) for v in value)
        raise ValueError(f"{where}: expected a list, got {value!r}")
    if isinstance(current, str):
        return str(value)
    raise ValueError(f"{where}: unsupported config value type")


def _apply_section(section, values: dict, name: str) -> None:
    known = {f.name for f in fields(section)}
    for key, value in values.items():
        if key not in known:
            raise ValueError(f"unknown config key '{name}.{key}'")
        current = getattr(section, key)
        setattr(section, key, _coerce(current, value, f"{name}.{key}"))


def apply_overrides(cfg: RuntimeConfig, overrides: dict) -> RuntimeConfig:
    sections = {f.name for f in fields(cfg)}
    for name, values in overrides.items():
        if name not in sections:
            raise ValueError(f"unknown config section '{name}'")
        if not isinstance(values, dict):
            raise ValueError(f"config section '{name}' must map keys to values")
        _apply_section(getattr(cfg, name), values, name)
    return cfg


def _read_file(path: Path) -> dict:
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a mapping")
    return data


def _env_overrides(env) -> dict:
    out: dict = {}
    for key, raw in env.items():
        if not key.startswith(ENV_PREFIX):
            continue
        rest = key[len(ENV_PREFIX):]
        if "__" not in rest:
            continue
        section, _, name = rest.partition("__")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out.setdefault(section.lower(), {})[name.lower()] = value
    return out


def load_config(path=None, env=None) -> RuntimeConfig:
    """Resolve defaults <- file <- environment."""
    cfg = default_config()
    if path is not None:
        apply_overrides(cfg, _read_file(Path(path)))
    if env is None:
        env = os.environ
    apply_overrides(cfg, _env_overrides(env))
    return cfg


def to_dict(cfg: RuntimeConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: RuntimeConfig) -> str:
    canon = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def dump_config(cfg: RuntimeConfig, path) -> None:
    Path(path).write_text(json.dumps(to_dict(cfg), sort_keys=True, indent=2) + "\n")
