"""Named parameter collections and the binary checkpoint format.

Layout (little endian, no padding)::

    b"SXR1" | u32 format_version | u32 meta_len | meta (UTF-8 "key=value\\n" lines)
    | u32 n_tensors | n_tensors * (u32 name_len | name | u32 rank | u32 dims[rank] | f32 data)
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import ModelConfig, Variant, layer_inventory
from ..seeding import stream

MAGIC = b"SXR1"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class ParamStore:
    tensors: dict = field(default_factory=dict)
    config: ModelConfig = field(default_factory=ModelConfig)
    epoch: int = 0
    seed: int = 0

    def __getitem__(self, name):
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors)

    def __len__(self):
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    def values(self):
        return self.tensors.values()

    @property
    def size(self):
        return sum(t.size for t in self.tensors.values())

    def astype(self, dtype):
        return ParamStore({k: v.astype(dtype) for k, v in self.tensors.items()},
                          self.config, self.epoch, self.seed)

    def copy(self):
        return self.astype(next(iter(self.tensors.values())).dtype)

    def equals(self, other):
        """Bitwise equality of names, order, shapes and data."""
        if list(self.tensors) != list(other.tensors):
            return False
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.tensors.values(), other.tensors.values())
        )

    def audit(self):
        """Raise unless names/shapes match the config's inventory exactly."""
        check_params(self.config, self.tensors)


def check_params(config, tensors):
    expected = layer_inventory(config)
    names = list(tensors)
    if names != [n for n, _ in expected]:
        missing = sorted({n for n, _ in expected} - set(names))
        extra = sorted(set(names) - {n for n, _ in expected})
        raise CheckpointError(
            f"parameter names do not match {config.variant.value} inventory "
            f"(missing {missing[:3]}, unexpected {extra[:3]})"
        )
    for name, shape in expected:
        if tuple(tensors[name].shape) != tuple(shape):
            raise CheckpointError(f"{name}: shape {tensors[name].shape}, expected {shape}")


def init_params(config, seed, dtype=np.float32):
    """He-normal conv weights (std sqrt(2 / fan_in)), zero biases.

    Every tensor draws from its own stream, so the values of one tensor do
    not depend on which other tensors exist. For the 2x2 stride-2
    transposed convolutions each output pixel sees one tap per input
    channel, so fan_in is the input channel count.
    """
    tensors = {}
    for i, (name, shape) in enumerate(layer_inventory(config)):
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape, dtype=dtype)
            continue
        if ".up" in name:
            fan_in = shape[0]
        else:
            fan_in = shape[1] * shape[2] * shape[3]
        w = stream("init", seed, i).standard_normal(shape) * np.sqrt(2.0 / fan_in)
        tensors[name] = w.astype(dtype)
    return ParamStore(tensors, config, epoch=0, seed=seed)


def _meta_text(store):
    ws = store.config.width_scale
    lines = [
        f"variant={store.config.variant.value}",
        f"width_scale={ws.numerator}/{ws.denominator}",
        f"epoch={store.epoch}",
        f"seed={store.seed}",
        f"fusion_hidden={store.config.fusion_hidden}",
    ]
    return "".join(line + "\n" for line in lines)


def dumps_checkpoint(store):
    store.audit()
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    meta = _meta_text(store).encode("utf-8")
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)
    buf.write(struct.pack("<I", len(store.tensors)))
    for name, arr in store.tensors.items():
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"{name}: non-finite values")
        nb = name.encode("utf-8")
        buf.write(struct.pack("<I", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return buf.getvalue()


def save_checkpoint(store, path):
    data = dumps_checkpoint(store)
    Path(path).write_bytes(data)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise CheckpointError(f"truncated checkpoint while reading {what}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def loads_checkpoint(data):
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise CheckpointError("bad magic: not an SXR1 checkpoint")
    version = r.u32("format version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
    try:
        meta_text = r.take(r.u32("metadata length"), "metadata").decode("utf-8")
        meta = dict(line.split("=", 1) for line in meta_text.splitlines() if line)
        config = ModelConfig(
            variant=Variant(meta["variant"]),
            width_scale=Fraction(meta["width_scale"]),
            fusion_hidden=int(meta.get("fusion_hidden", 16)),
        )
        epoch, seed = int(meta["epoch"]), int(meta["seed"])
    except (KeyError, ValueError, UnicodeDecodeError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"bad metadata block: {exc}") from None
    tensors = {}
    for _ in range(r.u32("tensor count")):
        name = r.take(r.u32("name length"), "name").decode("utf-8")
        if name in tensors:
            raise CheckpointError(f"duplicate tensor name {name!r}")
        rank = r.u32("rank")
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank, "dims"))
        count = int(np.prod(dims)) if rank else 1
        raw = r.take(4 * count, f"data of {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(dims)
    if r.pos != len(data):
        raise CheckpointError(f"{len(data) - r.pos} trailing bytes after last tensor")
    store = ParamStore(tensors, config, epoch=epoch, seed=seed)
    store.audit()
    return store


def load_checkpoint(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read ({exc.strerror})") from exc
    return loads_checkpoint(data)
