from .adapters import (
    AdapterConfigError,
    AdapterRegistry,
    OracleScene,
    ProcessAdapter,
    adapter_identity,
    load_adapters,
    registry_from_sample,
)
from .manifest import (
    IntegrityError,
    LayerEntry,
    LayerStackManifest,
    load_stack,
    persist_stack,
    recompose_stack,
)
from .run import (
    PipelineModels,
    PipelineRequest,
    PipelineResult,
    PipelineStageError,
    determine_alpha,
    multi_layer_decompose,
    run_pipeline,
)

__all__ = [
    "AdapterConfigError",
    "AdapterRegistry",
    "OracleScene",
    "ProcessAdapter",
    "adapter_identity",
    "load_adapters",
    "registry_from_sample",
    "IntegrityError",
    "LayerEntry",
    "LayerStackManifest",
    "load_stack",
    "persist_stack",
    "recompose_stack",
    "PipelineModels",
    "PipelineRequest",
    "PipelineResult",
    "PipelineStageError",
    "determine_alpha",
    "multi_layer_decompose",
    "run_pipeline",
]
