"""Architecture configuration and the learnable-parameter inventory."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

BASE_CHANNELS = 64
DEPTH = 4
WIDTH_SCALES = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(1))
HEADS = ("denoise", "edge")


class Variant(enum.Enum):
    SINGLE = "single"  # encoder + plain decoder
    DUAL = "dual"  # two plain decoders, fixed 0.5/0.5 blend
    DUAL_LAPLACIAN = "dual-laplacian"  # edge decoder on enhanced skips, fixed blend
    FULL = "full"  # enhanced skips + learned softmax fusion

    @property
    def heads(self):
        return HEADS[:1] if self is Variant.SINGLE else HEADS

    @property
    def enhanced_skips(self):
        return self in (Variant.DUAL_LAPLACIAN, Variant.FULL)

    @property
    def fused(self):
        return self is Variant.FULL


# Table order used by ablation reports.
VARIANT_ORDER = (Variant.SINGLE, Variant.DUAL, Variant.DUAL_LAPLACIAN, Variant.FULL)
VARIANT_LABELS = {
    Variant.SINGLE: "Single Decoder",
    Variant.DUAL: "Dual Decoder Only",
    Variant.DUAL_LAPLACIAN: "Dual Decoder + Laplacian (no fusion)",
    Variant.FULL: "Full (dual + Laplacian + fusion)",
}


def parse_width_scale(value):
    ws = Fraction(value).limit_denominator(64)
    if ws not in WIDTH_SCALES:
        raise ValueError(f"width_scale must be one of 1/16, 1/8, 1/4, 1/2, 1; got {value}")
    return ws


@dataclass(frozen=True)
class ModelConfig:
    variant: Variant = Variant.FULL
    width_scale: Fraction = Fraction(1)
    fusion_hidden: int = 16

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "width_scale", parse_width_scale(self.width_scale))
        if self.fusion_hidden < 1:
            raise ValueError("fusion_hidden must be positive")

    @property
    def channels(self):
        """Encoder channels per depth; the bottleneck has twice the last entry."""
        c0 = round(BASE_CHANNELS * self.width_scale)
        return tuple(c0 * 2**d for d in range(DEPTH))

    @property
    def bottleneck_channels(self):
        return 2 * self.channels[-1]


def layer_inventory(config):
    """Ordered ``(name, shape)`` list of every learnable tensor.

    Conv weights are (out, in, k, k); transposed-conv weights are
    (in, out, 2, 2).
    """
    ch = config.channels
    inv = []

    def conv(prefix, cin, cout, k=3):
        inv.append((f"{prefix}.weight", (cout, cin, k, k)))
        inv.append((f"{prefix}.bias", (cout,)))

    cin = 1
    for d, c in enumerate(ch):
        conv(f"enc{d}.conv1", cin, c)
        conv(f"enc{d}.conv2", c, c)
        cin = c
    conv("bottleneck.conv1", ch[-1], config.bottleneck_channels)
    conv("bottleneck.conv2", config.bottleneck_channels, config.bottleneck_channels)

    for head in config.variant.heads:
        cin = config.bottleneck_channels
        for s, c in enumerate(reversed(ch)):
            inv.append((f"dec_{head}.up{s}.weight", (cin, c, 2, 2)))
            inv.append((f"dec_{head}.up{s}.bias", (c,)))
            conv(f"dec_{head}.block{s}.conv1", 2 * c, c)
            conv(f"dec_{head}.block{s}.conv2", c, c)
            cin = c
        conv(f"dec_{head}.out", ch[0], 1, k=1)

    if config.variant.fused:
        conv("fusion.conv1", 2, config.fusion_hidden)
        conv("fusion.conv2", config.fusion_hidden, 2)
    return inv


def param_count(config):
    return sum(int(np.prod(shape)) for _, shape in layer_inventory(config))
