"""Grayscale image handling: 8-bit I/O, resizing, augmentation, splitting.

An image is a 2-D ``float32`` numpy array with values in [0, 1]. Files are
8-bit single channel; byte ``v`` maps to ``v / 255``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .seeding import stream


class ImageFormatError(ValueError):
    """Raised for files that are not 8-bit single-channel rasters."""


def check_image(img):
    """Return ``img`` as a float32 2-D array, raising if it is not a valid image."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be a non-empty 2-D array, got shape {arr.shape}")
    arr = arr.astype(np.float32, copy=False)
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image pixels must lie in [0, 1]")
    return arr


def quantize(img):
    """Nearest 8-bit level, ties rounded up."""
    x = np.asarray(img, dtype=np.float64)
    return np.clip(np.floor(x * 255.0 + 0.5), 0, 255).astype(np.uint8)


# --- I/O -----------------------------------------------------------------


def _read_pgm_tokens(data, count):
    """Parse ``count`` whitespace-separated header tokens after the magic."""
    tokens = []
    pos = 2
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates header and raster
    return tokens, pos + 1


def _load_pgm(path, data):
    magic = data[:2]
    if magic in (b"P6", b"P3"):
        raise ImageFormatError(f"{path}: multi-channel PPM is not supported (need grayscale)")
    if magic != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (magic {magic!r})")
    tokens, offset = _read_pgm_tokens(data, 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: empty image {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"{path}: maxval {maxval}, only 8-bit (maxval 255) is supported")
    raster = data[offset : offset + width * height]
    if len(raster) != width * height:
        raise ImageFormatError(
            f"{path}: truncated raster ({len(raster)} of {width * height} bytes)"
        )
    pix = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return (pix.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def _load_png(path):
    try:
        from PIL import Image as PILImage
    except ImportError:  # pragma: no cover - optional dependency
        raise ImageFormatError("PNG support requires Pillow") from None
    with PILImage.open(path) as im:
        if im.mode in ("RGB", "RGBA", "LA", "P", "CMYK"):
            raise ImageFormatError(f"{path}: multi-channel PNG (mode {im.mode})")
        if im.mode != "L":
            raise ImageFormatError(f"{path}: bit depth is not 8 (mode {im.mode})")
        pix = np.asarray(im, dtype=np.uint8)
    return (pix.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def load_image(path):
    """Read an 8-bit grayscale PGM (P5) or PNG file into a unit-range image."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    if len(data) < 2:
        raise ImageFormatError(f"{path}: file too short")
    return _load_pgm(path, data)


def save_image(img, path):
    """Write ``img`` as 8-bit PGM, or PNG when the suffix is ``.png``."""
    pix = quantize(check_image(img))
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image as PILImage

        PILImage.fromarray(pix).save(path)
        return
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(pix.tobytes())


# --- geometry ------------------------------------------------------------


def resize_bilinear(img, out_h, out_w):
    """Bilinear resize with half-pixel-centre alignment and edge clamping."""
    img = check_image(img)
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be positive, got {out_h}x{out_w}")
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = np.clip(ys, 0.0, h - 1)
    xs = np.clip(xs, 0.0, w - 1)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    out = kernels.bilinear_sample(img, yy, xx, 0.0)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def flip_horizontal(img):
    return np.ascontiguousarray(np.asarray(img)[:, ::-1])


def rotate(img, degrees, fill=0.0):
    """Rotate about the image centre (bilinear, outside filled with ``fill``)."""
    img = np.asarray(img)
    h, w = img.shape
    theta = math.radians(degrees)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.meshgrid(
        np.arange(h, dtype=np.float64) - cy, np.arange(w, dtype=np.float64) - cx, indexing="ij"
    )
    # inverse map: destination -> source
    sy = cy + cos_t * yy - sin_t * xx
    sx = cx + sin_t * yy + cos_t * xx
    return kernels.bilinear_sample(img, sy, sx, fill)


@dataclass(frozen=True)
class AugmentConfig:
    flip_prob: float = 0.5
    brightness_delta_max: float = 0.10
    contrast_factor_range: tuple[float, float] = (0.9, 1.1)
    rotation_deg_max: float = 15.0

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if self.rotation_deg_max < 0 or self.brightness_delta_max < 0:
            raise ValueError("rotation and brightness bounds must be non-negative")
        lo, hi = self.contrast_factor_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad contrast range {self.contrast_factor_range}")

    @classmethod
    def identity(cls):
        return cls(0.0, 0.0, (1.0, 1.0), 0.0)


def augment(img, cfg, rng):
    """Random flip, mid-grey-pivoted contrast/brightness jitter, then rotation.

    Four uniforms are always drawn (flip, contrast, brightness, angle) so the
    stream advances identically whatever the config.
    """
    img = check_image(img)
    do_flip = rng.random() < cfg.flip_prob
    contrast = rng.uniform(*cfg.contrast_factor_range)
    brightness = rng.uniform(-cfg.brightness_delta_max, cfg.brightness_delta_max)
    angle = rng.uniform(-cfg.rotation_deg_max, cfg.rotation_deg_max)

    out = flip_horizontal(img) if do_flip else img.copy()
    if contrast != 1.0 or brightness != 0.0:
        out = np.clip((out - 0.5) * contrast + 0.5 + brightness, 0.0, 1.0)
    if angle != 0.0:
        out = np.clip(rotate(out, angle, fill=0.0), 0.0, 1.0)
    return out.astype(np.float32)


# --- datasets ------------------------------------------------------------


@dataclass
class LabeledDataset:
    items: list = field(default_factory=list)  # (image, label) pairs
    class_names: tuple = ("normal", "opacity")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    @property
    def labels(self):
        return [lab for _, lab in self.items]

    def class_counts(self):
        counts = [0] * len(self.class_names)
        for _, lab in self.items:
            counts[lab] += 1
        return counts

    def subset(self, indices):
        return LabeledDataset([self.items[i] for i in indices], self.class_names)


def _apportion(n, fractions):
    """Floor of each share, remainder to the largest fractional parts (ties: earlier split)."""
    raw = [f * n for f in fractions]
    counts = [int(math.floor(r)) for r in raw]
    left = n - sum(counts)
    order = sorted(range(len(raw)), key=lambda s: (-(raw[s] - counts[s]), s))
    for s in order[:left]:
        counts[s] += 1
    return counts


def stratified_split(ds, fractions=(0.75, 0.10, 0.15), seed=0):
    """Per-class shuffled train/val/test partition with apportioned counts.

    Items keep their original relative order inside each split.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three non-negative numbers summing to 1: {fractions}")
    by_class = {}
    for idx, (_, lab) in enumerate(ds.items):
        by_class.setdefault(lab, []).append(idx)
    for k in range(len(ds.class_names)):
        n_k = len(by_class.get(k, []))
        if n_k == 0:
            raise ValueError(f"class {ds.class_names[k]!r} is empty")
        if n_k < 3:
            raise ValueError(f"class {ds.class_names[k]!r} has {n_k} items, need at least 3")
    parts = ([], [], [])
    for lab in sorted(by_class):
        members = np.array(by_class[lab])
        perm = stream("split", seed, lab).permutation(len(members))
        members = members[perm]
        start = 0
        for s, cnt in enumerate(_apportion(len(members), fractions)):
            parts[s].extend(members[start : start + cnt].tolist())
            start += cnt
    return tuple(ds.subset(sorted(p)) for p in parts)


def save_dataset(ds, root):
    """Write ``<root>/<class_name>/<index>.pgm``; returns the written paths."""
    root = Path(root)
    paths = []
    for name in ds.class_names:
        (root / name).mkdir(parents=True, exist_ok=True)
    for i, (img, lab) in enumerate(ds.items):
        p = root / ds.class_names[lab] / f"{i:05d}.pgm"
        save_image(img, p)
        paths.append(p)
    return paths


def load_dataset(root):
    """Read a class-per-subdirectory tree; labels follow sorted class names."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    names = sorted(d.name for d in root.iterdir() if d.is_dir())
    if not names:
        raise ValueError(f"no class subdirectories in {root}")
    items = []
    for lab, name in enumerate(names):
        files = sorted(
            f for f in os.listdir(root / name) if f.lower().endswith((".pgm", ".png"))
        )
        items.extend((load_image(root / name / f), lab) for f in files)
    return LabeledDataset(items, tuple(names))
