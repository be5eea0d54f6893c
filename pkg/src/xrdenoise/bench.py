"""Evaluation harness: overall rows, per-noise-level grid, ablation, report files."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .model import VARIANT_LABELS, VARIANT_ORDER, ParamStore, load_checkpoint
from .noisegen import apply_noise, noise_grid
from .seeding import stream
from .trainer import TrainConfig, denoise, make_pairs, train

NOISY_TAG = "noisy-input"
CSV_HEADER = ["model", "sigma", "eta", "rmse_mean", "rmse_std", "psnr_mean", "psnr_std",
              "ssim_mean", "ssim_std", "snr_mean", "snr_std", "n"]
# decimals per metric in every emitted report
PRECISION = {"rmse": 4, "psnr": 2, "ssim": 4, "snr": 2}


@dataclass(frozen=True)
class BenchRow:
    model: str
    sigma: object  # 8-bit grey levels, or "all"
    eta: object  # photon scale, or "all"
    rmse_mean: float
    rmse_std: float
    psnr_mean: float
    psnr_std: float
    ssim_mean: float
    ssim_std: float
    snr_mean: float
    snr_std: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a report row needs at least one image")

    @classmethod
    def from_records(cls, model, sigma, eta, records):
        vals = {}
        for key in PRECISION:
            xs = np.array([getattr(r, key) for r in records], dtype=np.float64)
            vals[f"{key}_mean"] = float(xs.mean())
            vals[f"{key}_std"] = float(xs.std(ddof=1)) if len(xs) > 1 else 0.0
        return cls(model, sigma, eta, n=len(records), **vals)


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def extend(self, rows):
        self.rows.extend(rows)

    def by_model(self, model):
        return [r for r in self.rows if r.model == model]


def _as_store(ckpt):
    return ckpt if isinstance(ckpt, ParamStore) else load_checkpoint(ckpt)


def _model_denoiser(store, test):
    h, w = test[0][0].shape
    if h % 16 or w % 16:
        raise ValueError(f"test images {h}x{w} are not divisible by 16")
    return lambda img: denoise(img, store)


def _fmt_noise(v):
    return int(v) if float(v).is_integer() else float(v)


def _score(denoiser, pairs):
    model, noisy = [], []
    for n_img, clean in pairs:
        model.append(metrics.evaluate_all(clean, denoiser(n_img)))
        noisy.append(metrics.evaluate_all(clean, n_img))
    return model, noisy


def eval_overall(ckpt, test, run_seed, model_tag=None, denoiser=None):
    """Model row and noisy-input reference row on the fixed eval-mode test pairs.

    ``denoiser`` (image -> image) overrides the checkpoint, e.g. for oracle
    models; ``ckpt`` may then be ``None``.
    """
    if denoiser is None:
        store = _as_store(ckpt)
        denoiser = _model_denoiser(store, test)
        model_tag = model_tag or store.config.variant.value
    pairs = list(make_pairs(test, "eval", 0, run_seed, "test"))
    model, noisy = _score(denoiser, pairs)
    return BenchReport([
        BenchRow.from_records(model_tag or "model", "all", "all", model),
        BenchRow.from_records(NOISY_TAG, "all", "all", noisy),
    ])


def grid_pairs(test, run_seed, cell):
    """Noisy test images at grid cell ``cell``; own rng domain per (cell, image)."""
    params = noise_grid()[cell]
    for i, (clean, _) in enumerate(test):
        rng = stream("grid-pair/test", run_seed, cell, i)
        yield apply_noise(clean, params, rng), clean


def eval_grid(ckpt, test, run_seed, model_tag=None, denoiser=None):
    """One model row per grid cell (grid order), then the matching noisy-input rows."""
    if denoiser is None:
        store = _as_store(ckpt)
        denoiser = _model_denoiser(store, test)
        model_tag = model_tag or store.config.variant.value
    model_rows, noisy_rows = [], []
    for cell, params in enumerate(noise_grid()):
        model, noisy = _score(denoiser, grid_pairs(test, run_seed, cell))
        s, e = _fmt_noise(params.sigma8), _fmt_noise(params.eta)
        model_rows.append(BenchRow.from_records(model_tag or "model", s, e, model))
        noisy_rows.append(BenchRow.from_records(NOISY_TAG, s, e, noisy))
    return BenchReport(model_rows + noisy_rows)


@dataclass
class AblationResult:
    report: BenchReport  # four rows in VARIANT_ORDER
    reference: BenchRow  # noisy-input row on the same test pairs
    logs: dict  # variant value -> LossLog
    stores: dict  # variant value -> best ParamStore
    failed: list = field(default_factory=list)  # (variant value, message)


def run_ablation(train_set, val_set, test_set, base_cfg, on_variant=None):
    """Train and score every variant with identical seeds and hyperparameters.

    A failed variant stops the run; rows finished so far are returned and
    the failure is listed in ``failed``.
    """
    result = AblationResult(BenchReport(), None, {}, {})
    for variant in VARIANT_ORDER:
        cfg = TrainConfig(**{**base_cfg.__dict__, "variant": variant})
        try:
            res = train(train_set, val_set, cfg)
        except Exception as exc:  # noqa: BLE001 - reported, partial results kept
            result.failed.append((variant.value, f"{type(exc).__name__}: {exc}"))
            break
        rows = eval_overall(res.best, test_set, base_cfg.seed, model_tag=variant.value)
        result.report.rows.append(rows.rows[0])
        result.reference = rows.rows[1]
        result.logs[variant.value] = res.log
        result.stores[variant.value] = res.best
        if on_variant is not None:
            on_variant(variant, res, rows.rows[0])
    return result


# --- output --------------------------------------------------------------


def _cells(row):
    out = [row.model, str(row.sigma), str(row.eta)]
    for key, dp in PRECISION.items():
        out.append(f"{getattr(row, key + '_mean'):.{dp}f}")
        out.append(f"{getattr(row, key + '_std'):.{dp}f}")
    out.append(str(row.n))
    return out


def report_csv(report):
    lines = [",".join(CSV_HEADER)]
    lines.extend(",".join(_cells(r)) for r in report)
    return "\n".join(lines) + "\n"


def report_markdown(report):
    head = ["Model", "σ", "η", "RMSE", "PSNR (dB)", "SSIM", "SNR (dB)", "n"]
    body = []
    for r in report:
        c = _cells(r)
        body.append([c[0], c[1], c[2], f"{c[3]} ± {c[4]}", f"{c[5]} ± {c[6]}",
                     f"{c[7]} ± {c[8]}", f"{c[9]} ± {c[10]}", c[11]])
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h)
              for i, h in enumerate(head)]

    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([line(head), sep, *(line(b) for b in body)]) + "\n"


def emit_report(report, fmt, path):
    if fmt == "csv":
        text = report_csv(report)
    elif fmt in ("md", "markdown"):
        text = report_markdown(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc


def _parse_noise(v):
    if v == "all":
        return v
    f = float(v)
    return int(f) if f.is_integer() else f


def read_report_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected report header {header}")
        rows = []
        for rec in reader:
            nums = [float(x) for x in rec[3:11]]
            rows.append(BenchRow(rec[0], _parse_noise(rec[1]), _parse_noise(rec[2]), *nums,
                                 n=int(rec[11])))
    return BenchReport(rows)


def variant_label(tag):
    for v in VARIANT_ORDER:
        if v.value == tag:
            return VARIANT_LABELS[v]
    return tag

