"""Dual-decoder U-Net with Laplacian-enhanced skips and softmax fusion."""

from .config import (
    VARIANT_LABELS,
    VARIANT_ORDER,
    ModelConfig,
    Variant,
    layer_inventory,
    param_count,
)
from .layers import LAPLACIAN_STENCIL
from .network import (
    backward,
    decoder_forward,
    encoder_forward,
    forward,
    forward_train,
    fusion_forward,
    laplacian_enhance,
)
from .store import (
    CheckpointError,
    ParamStore,
    init_params,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "VARIANT_LABELS",
    "VARIANT_ORDER",
    "LAPLACIAN_STENCIL",
    "CheckpointError",
    "ModelConfig",
    "ParamStore",
    "Variant",
    "backward",
    "decoder_forward",
    "encoder_forward",
    "forward",
    "forward_train",
    "fusion_forward",
    "init_params",
    "laplacian_enhance",
    "layer_inventory",
    "load_checkpoint",
    "param_count",
    "save_checkpoint",
]
