"""Supervised training: noisy/clean pair streams, RMSE loss, Adam, early stopping."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import metrics
from .imagecore import AugmentConfig, augment
from .model import ModelConfig, Variant, backward, forward, forward_train, init_params
from .noisegen import apply_noise, sample_params
from .seeding import stream

log = logging.getLogger(__name__)


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 4
    max_epochs: int = 50
    seed: int = 42
    width_scale: Fraction = Fraction(1, 4)
    variant: Variant = Variant.FULL
    early_stop_patience: int = 10
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 1 <= self.max_epochs <= 50:
            raise ValueError("max_epochs must be in 1..50")
        for name in ("learning_rate", "adam_eps", "early_stop_patience"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")

    @property
    def model_config(self):
        return ModelConfig(self.variant, self.width_scale)


@dataclass
class EpochRecord:
    epoch: int
    train_rmse: float
    val_rmse: float
    val_psnr: float
    seconds: float


@dataclass
class LossLog:
    rows: list = field(default_factory=list)

    def append(self, row):
        if self.rows and row.epoch != self.rows[-1].epoch + 1:
            raise ValueError("epochs must be logged consecutively")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_rmse", "val_rmse", "val_psnr", "seconds"])
            for r in self.rows:
                w.writerow([r.epoch, repr(r.train_rmse), repr(r.val_rmse), repr(r.val_psnr),
                            f"{r.seconds:.3f}"])

    @classmethod
    def read_csv(cls, path):
        out = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                out.append(EpochRecord(int(row["epoch"]), float(row["train_rmse"]),
                                       float(row["val_rmse"]), float(row["val_psnr"]),
                                       float(row["seconds"])))
        return out


# --- loss and optimizer --------------------------------------------------


def rmse_loss(pred, target):
    """Root of the mean squared error over every pixel of the batch."""
    pred, target = np.asarray(pred), np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred.astype(np.float64) - target
    return math.sqrt(np.mean(diff * diff))


def rmse_loss_grad(pred, target):
    """(loss, dloss/dpred); the gradient at zero loss is taken as 0."""
    loss = rmse_loss(pred, target)
    if loss == 0.0:
        return loss, np.zeros_like(pred)
    grad = (pred - target) / (pred.size * loss)
    return loss, grad.astype(pred.dtype, copy=False)


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros_like(cls, store):
        return cls({k: np.zeros_like(a) for k, a in store.items()},
                   {k: np.zeros_like(a) for k, a in store.items()})


def adam_step(store, grads, state, cfg):
    """One in-place bias-corrected Adam update of every tensor in ``store``."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient in {name}")
    if set(grads) != set(store.tensors):
        raise ValueError("gradients do not cover the parameter store")
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, theta in store.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != {theta.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        theta -= (cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)).astype(theta.dtype)
    return store, state


# --- data ----------------------------------------------------------------


def pair_rng(mode, run_seed, index, epoch=0, split_name="val"):
    if mode == "train":
        return stream("train-pair", run_seed, epoch, index)
    return stream(f"eval-pair/{split_name}", run_seed, index)


def make_pair(split, index, mode, epoch, run_seed, split_name="val", aug=AugmentConfig()):
    clean, _ = split[index]
    rng = pair_rng(mode, run_seed, index, epoch, split_name)
    if mode == "train":
        clean = augment(clean, aug, rng)
    elif mode != "eval":
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    noisy = apply_noise(clean, sample_params(rng), rng)
    return noisy, clean


def make_pairs(split, mode, epoch=0, run_seed=0, split_name="val", aug=AugmentConfig()):
    """Yield ``(noisy, clean)`` for every item of ``split``, in order.

    Train pairs are augmented and re-noised each epoch; eval pairs depend
    only on (split_name, index, run_seed).
    """
    if len(split) == 0:
        raise ValueError("split is empty")
    for i in range(len(split)):
        yield make_pair(split, i, mode, epoch, run_seed, split_name, aug)


def _batch(images):
    return np.stack(images)[:, None, :, :]


def denoise(img, store):
    """Clamped inference on one image."""
    return forward(_batch([img]).astype(np.float32), store.config, store)[0, 0]


def evaluate_pairs(store, pairs):
    """Per-image metric records of the model's output against the clean image."""
    return [metrics.evaluate_all(clean, denoise(noisy, store)) for noisy, clean in pairs]


def validation_scores(store, pairs):
    """(mean per-image RMSE, mean per-image PSNR) of clamped model outputs."""
    rm, ps = [], []
    for noisy, clean in pairs:
        out = denoise(noisy, store)
        err = metrics.rmse(clean, out)
        rm.append(err)
        ps.append(metrics.psnr_from_rmse(err))
    return float(np.mean(rm)), float(np.mean(ps))


# --- loop ----------------------------------------------------------------


@dataclass
class TrainResult:
    best: object  # ParamStore with the lowest validation RMSE
    last: object  # ParamStore after the final completed epoch
    log: LossLog
    best_epoch: int
    stop_reason: str


def train_step(store, noisy, clean, state, cfg):
    """Forward, RMSE loss, full backward pass and one Adam update on a batch."""
    out, tape = forward_train(noisy, store.config, store)
    loss, dout = rmse_loss_grad(out, clean)
    if not math.isfinite(loss):
        raise NonFiniteError("non-finite loss")
    grads = backward(dout, tape, store.config, store)
    adam_step(store, grads, state, cfg)
    return loss


def train(train_set, val_set, cfg, on_epoch=None):
    """Train ``cfg.variant`` on ``train_set``; validate on fixed noisy ``val_set`` pairs."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("train and validation splits must be non-empty")
    h, w = train_set[0][0].shape
    if h % 16 or w % 16:
        raise ValueError(f"image size {h}x{w} must be divisible by 16")

    store = init_params(cfg.model_config, cfg.seed)
    state = AdamState.zeros_like(store)
    val_pairs = list(make_pairs(val_set, "eval", 0, cfg.seed, "val"))
    log_ = LossLog()
    best, best_epoch, best_rmse = store.copy(), 0, math.inf
    stale = 0
    stop = "max_epochs"
    n = len(train_set)
    for epoch in range(1, cfg.max_epochs + 1):
        t0 = time.perf_counter()
        order = stream("shuffle", cfg.seed, epoch).permutation(n)
        losses = []
        try:
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                pairs = [make_pair(train_set, int(i), "train", epoch, cfg.seed, aug=cfg.augment)
                         for i in idx]
                noisy = _batch([p[0] for p in pairs])
                clean = _batch([p[1] for p in pairs])
                losses.append(train_step(store, noisy, clean, state, cfg))
        except NonFiniteError as exc:
            log.error("epoch %d aborted: %s; keeping epoch-%d checkpoint", epoch, exc, best_epoch)
            store = best.copy()
            stop = "non_finite"
            break
        val_rmse, val_psnr = validation_scores(store, val_pairs)
        row = EpochRecord(epoch, float(np.mean(losses)), val_rmse, val_psnr,
                          time.perf_counter() - t0)
        log_.append(row)
        log.info("epoch %d train_rmse %.5f val_rmse %.5f val_psnr %.2f (%.1fs)", epoch,
                 row.train_rmse, val_rmse, val_psnr, row.seconds)
        if on_epoch is not None:
            on_epoch(row)
        store.epoch = epoch
        if val_rmse < best_rmse:
            best_rmse, best_epoch, stale = val_rmse, epoch, 0
            best = store.copy()
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                stop = "early_stop"
                break
    return TrainResult(best, store, log_, best_epoch, stop)
