"""Deterministic chest-radiograph-like phantoms.

Each phantom stacks a vertical background ramp, smooth low-amplitude
texture, two darkened elliptical lung fields and a set of bright sinusoidal
rib bands. Class 1 phantoms additionally carry soft bright opacities inside
a lung field. Geometry is drawn from a PCG64 stream keyed by the seed;
opacities come from a separate stream so both classes share the same base.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imagecore import LabeledDataset, quantize, save_dataset
from .seeding import derive_seed, stream

CLASS_NAMES = ("normal", "opacity")

LUNG_ATTENUATION = 0.45
TEXTURE_AMPLITUDE = 0.03


@dataclass(frozen=True)
class PhantomSpec:
    size: int = 256
    seed: int = 0
    class_label: int = 0

    def __post_init__(self):
        if self.size < 32 or self.size % 16:
            raise ValueError(f"phantom size must be >= 32 and divisible by 16, got {self.size}")
        if self.class_label not in (0, 1):
            raise ValueError(f"class_label must be 0 or 1, got {self.class_label}")


@dataclass
class PhantomLayers:
    image: np.ndarray
    lung_weight: np.ndarray  # 1 deep inside a lung, 0 outside
    lung_radius: np.ndarray  # normalized elliptical radius to the nearer lung
    rib_distance: np.ndarray  # vertical distance to the nearest rib centreline, px
    rib_width: float


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def render_phantom(spec):
    """Build a phantom and the masks used to construct it."""
    s = spec.size
    scale = s / 256.0
    rng = stream("phantom", spec.seed)
    yy, xx = np.meshgrid(np.arange(s, dtype=np.float64), np.arange(s, dtype=np.float64),
                         indexing="ij")

    base = 0.55 + 0.20 * yy / (s - 1)

    # smooth texture: a few long-wavelength plane waves
    n_waves = 4
    amps = rng.uniform(0.5, 1.0, n_waves)
    freqs = rng.uniform(1.0, 4.0, n_waves) / s
    dirs = rng.uniform(0.0, np.pi, n_waves)
    phases = rng.uniform(0.0, 2 * np.pi, n_waves)
    tex = np.zeros_like(base)
    for a, f, d, p in zip(amps, freqs, dirs, phases):
        tex += a * np.sin(2 * np.pi * f * (np.cos(d) * xx + np.sin(d) * yy) + p)
    base += TEXTURE_AMPLITUDE * tex / amps.sum()

    # lung fields
    radius = np.full_like(base, np.inf)
    weight = np.zeros_like(base)
    edge_px = 3.0 * scale
    lungs = []
    for cx_frac in (0.30, 0.70):
        ry = 0.30 * s * rng.uniform(0.9, 1.1)
        rx = 0.15 * s * rng.uniform(0.9, 1.1)
        cy = 0.52 * s + 0.1 * ry * rng.uniform(-1.0, 1.0)
        cx = cx_frac * s + 0.1 * rx * rng.uniform(-1.0, 1.0)
        r = np.sqrt(((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2)
        w = _smoothstep((1.0 - r) * min(rx, ry) / edge_px)
        radius = np.minimum(radius, r)
        weight = np.maximum(weight, w)
        lungs.append((cy, cx, ry, rx, w))
    img = base * (1.0 - (1.0 - LUNG_ATTENUATION) * weight)

    # rib bands
    n_ribs = int(rng.integers(6, 10))
    rib_width = max(1.0, rng.uniform(2.0, 4.0) * scale)
    sd = rib_width / 2.3548  # FWHM -> std
    centres = np.linspace(0.15 * s, 0.85 * s, n_ribs)
    rib_dist = np.full_like(base, np.inf)
    for y0 in centres:
        y0 = y0 + rng.uniform(-0.3, 0.3) * (0.7 * s / n_ribs)
        amp = rng.uniform(0.10, 0.18)
        wobble = rng.uniform(0.02, 0.05) * s
        period = rng.uniform(0.8, 1.4) * s
        phase = rng.uniform(0.0, 2 * np.pi)
        yc = y0 + wobble * np.sin(2 * np.pi * xx / period + phase)
        d = np.abs(yy - yc)
        img += amp * np.exp(-0.5 * (d / sd) ** 2)
        rib_dist = np.minimum(rib_dist, d)

    if spec.class_label == 1:
        orng = stream("phantom-opacity", spec.seed)
        for _ in range(int(orng.integers(1, 4))):
            cy, cx, ry, rx, w = lungs[int(orng.integers(0, 2))]
            ang = orng.uniform(0.0, 2 * np.pi)
            rad = orng.uniform(0.0, 0.6)
            oy = cy + rad * ry * np.sin(ang)
            ox = cx + rad * rx * np.cos(ang)
            ay = orng.uniform(0.05, 0.12) * s
            ax = orng.uniform(0.05, 0.12) * s
            delta = orng.uniform(0.12, 0.25)
            ro = np.sqrt(((yy - oy) / ay) ** 2 + ((xx - ox) / ax) ** 2)
            blob = 1.0 / (1.0 + np.exp((ro - 1.0) / 0.15))
            img += delta * blob * w

    img = np.clip(img, 0.0, 1.0).astype(np.float32)
    return PhantomLayers(img, weight, radius, rib_dist, rib_width)


def generate_phantom(spec):
    return render_phantom(spec).image


def item_seed(seed, index):
    return derive_seed("phantom-item", seed, index) & 0x7FFFFFFF


def generate_dataset(count, size, seed, out_dir=None):
    """``count`` phantoms with alternating labels, quantized to 8 bits.

    The returned images are exactly what the written PGM files decode to.
    """
    if count < 2:
        raise ValueError(f"count must be >= 2 to cover both classes, got {count}")
    items = []
    for i in range(count):
        label = i % 2
        img = generate_phantom(PhantomSpec(size=size, seed=item_seed(seed, i), class_label=label))
        items.append(((quantize(img).astype(np.float32) / np.float32(255.0)), label))
    ds = LabeledDataset(items, CLASS_NAMES)
    if out_dir is not None:
        save_dataset(ds, Path(out_dir))
    return ds
