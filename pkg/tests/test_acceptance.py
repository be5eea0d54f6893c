"""Acceptance suite: one test per criterion, each reported as PASS/FAIL at the end.

Run alone with ``pytest tests/test_acceptance.py -v``. Criteria 9 and 10 train
models at desk scale and take several minutes each on one CPU core.
"""

import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from xrdenoise import bench, cli, metrics
from xrdenoise.imagecore import stratified_split
from xrdenoise.model import (
    ModelConfig,
    Variant,
    forward,
    fusion_forward,
    init_params,
    laplacian_enhance,
    load_checkpoint,
    param_count,
    save_checkpoint,
)
from xrdenoise.model.config import WIDTH_SCALES
from xrdenoise.noisegen import NoiseParams, apply_noise, poisson_array
from xrdenoise.phantom import generate_dataset
from xrdenoise.seeding import stream
from xrdenoise.trainer import LossLog, TrainConfig, make_pairs, train, validation_scores

from conftest import poisson_gof_pvalue
from gradcheck import check_gradients
from test_metrics import reference_ssim

TINY = Fraction(1, 16)
criterion = pytest.mark.criterion


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def zero_fusion(store):
    for k in store:
        if k.startswith("fusion"):
            store.tensors[k] = np.zeros_like(store[k])
    return store


# --- desk-scale fixtures ---------------------------------------------------

DESK = dict(count=200, size=64, seed=42)
DESK_CFG = dict(width_scale=Fraction(1, 4), max_epochs=20, batch_size=4, learning_rate=1e-4,
                seed=42)


@pytest.fixture(scope="module")
def desk_splits():
    return stratified_split(generate_dataset(**DESK), seed=DESK["seed"])


@pytest.fixture(scope="module")
def desk_full(desk_splits):
    tr, va, _ = desk_splits
    with Timer() as t:
        res = train(tr, va, TrainConfig(variant=Variant.FULL, **DESK_CFG))
    return res, t.seconds


# --- criteria ----------------------------------------------------------------


@criterion(1, "noise-model moments")
def test_noise_moments(note):
    img = np.full((1000, 1000), 0.5)
    with Timer() as t:
        out = apply_noise(img, NoiseParams(eta=100, sigma8=10), stream("acceptance", 1))
    want = 0.5 / 100 + (10 / 255) ** 2
    mean, var = float(out.mean()), float(out.var())
    note(f"mean {mean:.5f}, var {var:.7f} vs {want:.7f}, {t.seconds:.1f}s")
    assert abs(mean - 0.5) <= 0.002
    assert abs(var / want - 1) <= 0.05
    assert t.seconds < 10


@criterion(2, "Poisson exactness (chi-square GOF)")
def test_poisson_exact(note):
    pvals = []
    with Timer() as t:
        for i, lam in enumerate((0.5, 4.0, 150.0)):
            draws = poisson_array(np.full(1_000_000, lam), stream("acceptance", 2, i))
            pvals.append(poisson_gof_pvalue(draws, lam))
    note("p = " + ", ".join(f"{p:.3f}" for p in pvals) + f", {t.seconds:.1f}s")
    assert all(p > 0.001 for p in pvals)
    assert t.seconds < 30


@criterion(3, "metric oracles")
def test_metric_oracles(note):
    a, b = np.full((32, 32), 0.5), np.full((32, 32), 0.6)
    assert metrics.psnr_from_rmse(0.1) == 20.0
    assert abs(metrics.ssim(a, b) - 0.98361) <= 1e-5
    assert abs(metrics.snr(a, b) - 13.979) <= 1e-3
    rng = stream("acceptance", 3)
    worst = 0.0
    for _ in range(20):
        x = rng.random((64, 64))
        y = np.clip(x + rng.normal(0, 0.1, x.shape), 0, 1)
        worst = max(worst, abs(metrics.ssim(x, y) - reference_ssim(x, y)))
    note(f"max SSIM deviation {worst:.1e}")
    assert worst <= 1e-6


@criterion(4, "Laplacian stencil")
def test_laplacian():
    const = np.full((1, 3, 16, 16), 0.42, np.float32)
    assert laplacian_enhance(const).tobytes() == const.tobytes()
    imp = np.zeros((1, 1, 9, 9))
    imp[0, 0, 4, 4] = 1
    want = np.zeros((9, 9))
    want[3:6, 3:6] = -1
    want[4, 4] = 9
    assert np.array_equal(laplacian_enhance(imp)[0, 0], want)
    probe = np.zeros((1, 2, 9, 9))
    probe[0, 0, 4, 4] = 1
    probe[0, 1] = 0.7
    out = laplacian_enhance(probe)
    assert np.array_equal(out[0, 0], want) and np.array_equal(out[0, 1], probe[0, 1])


@criterion(5, "fusion properties")
def test_fusion(note):
    rng = stream("acceptance", 5)
    params = init_params(ModelConfig(Variant.FULL, TINY), 5)
    fus = {k: rng.normal(0, 1, params[k].shape) for k in params if k.startswith("fusion")}
    xd, xe = rng.random((2, 1, 32, 32)), rng.random((2, 1, 32, 32))
    _, alpha = fusion_forward(xd, xe, fus)
    dev = float(np.abs(alpha.sum(axis=1) - 1).max())
    note(f"max |a1+a2-1| {dev:.1e}")
    assert dev <= 1e-6
    out, _ = fusion_forward(xd, xd.copy(), fus)
    assert np.array_equal(out, xd)
    zero = {k: np.zeros_like(v) for k, v in fus.items()}
    out, alpha = fusion_forward(xd, xe, zero)
    assert np.all(alpha == 0.5)
    assert np.array_equal(out, xe + 0.5 * (xd - xe))
    np.testing.assert_allclose(out, 0.5 * (xd + xe), rtol=0, atol=1e-15)


@criterion(6, "variant algebra")
def test_variant_algebra():
    x = stream("acceptance", 6).random((2, 1, 32, 32)).astype(np.float32)
    dual = init_params(ModelConfig(Variant.DUAL, TINY), 6)
    for k in dual:
        if k.startswith("dec_edge"):
            dual.tensors[k] = dual[k.replace("dec_edge", "dec_denoise")].copy()
    single = {k: v for k, v in dual.items() if not k.startswith("dec_edge")}
    a = forward(x, ModelConfig(Variant.DUAL, TINY), dual, clamp=False)
    b = forward(x, ModelConfig(Variant.SINGLE, TINY), single, clamp=False)
    assert a.tobytes() == b.tobytes()

    full = zero_fusion(init_params(ModelConfig(Variant.FULL, TINY), 6))
    dl = {k: v for k, v in full.items() if not k.startswith("fusion")}
    a = forward(x, ModelConfig(Variant.FULL, TINY), full, clamp=False)
    b = forward(x, ModelConfig(Variant.DUAL_LAPLACIAN, TINY), dl, clamp=False)
    assert a.tobytes() == b.tobytes()

    for ws in WIDTH_SCALES:
        diff = (param_count(ModelConfig(Variant.FULL, ws))
                - param_count(ModelConfig(Variant.DUAL_LAPLACIAN, ws)))
        assert diff == 594


@criterion(7, "gradient check")
def test_gradient_check(note):
    with Timer() as t:
        res = check_gradients(ModelConfig(Variant.FULL, TINY), n_samples=200, step=1e-4,
                              seed=7, size=16)
    note(f"{len(res.errors)} params over {len(res.tensors)} tensors, worst rel err "
         f"{res.worst:.1e}, {res.skipped} switch crossings skipped, {t.seconds:.0f}s")
    assert len(res.errors) >= 200
    assert {"encoder conv", "transposed conv", "fusion conv"} <= res.kinds
    assert res.worst < 1e-3
    assert t.seconds < 300


@criterion(8, "shapes, serialization and resumed evaluation")
def test_shapes_and_serialization(tmp_path, note):
    rng = stream("acceptance", 8)
    for ws in (TINY, Fraction(1, 4), Fraction(1)):
        cfg = ModelConfig(Variant.FULL, ws)
        store = init_params(cfg, 8)
        for size in (16, 32, 64, 256):
            x = rng.random((1, 1, size, size)).astype(np.float32)
            assert forward(x, cfg, store).shape == x.shape
        save_checkpoint(store, tmp_path / "m.sxr")
        assert load_checkpoint(tmp_path / "m.sxr").equals(store)
        del store

    ds = generate_dataset(24, 32, 8)
    tr, va, _ = stratified_split(ds, (0.5, 0.25, 0.25), seed=8)
    res = train(tr, va, TrainConfig(width_scale=TINY, max_epochs=3, seed=8,
                                    learning_rate=1e-3))
    save_checkpoint(res.best, tmp_path / "best.sxr")
    res.log.write_csv(tmp_path / "log.csv")
    logged = LossLog.read_csv(tmp_path / "log.csv").rows[res.best_epoch - 1]
    resumed = validation_scores(load_checkpoint(tmp_path / "best.sxr"),
                                list(make_pairs(va, "eval", 0, 8, "val")))
    note(f"resumed val_rmse {resumed[0]!r}")
    assert resumed == (logged.val_rmse, logged.val_psnr)


@pytest.mark.slow
@criterion(9, "desk-scale training trend")
def test_desk_training(desk_splits, desk_full, note):
    res, seconds = desk_full
    report = bench.eval_overall(res.best, desk_splits[2], DESK["seed"])
    model, noisy = report.rows
    gain, sgain = model.psnr_mean - noisy.psnr_mean, model.ssim_mean - noisy.ssim_mean
    note(f"PSNR {noisy.psnr_mean:.2f} -> {model.psnr_mean:.2f} dB (+{gain:.2f}), "
         f"SSIM {noisy.ssim_mean:.4f} -> {model.ssim_mean:.4f} (+{sgain:.4f}), "
         f"{seconds / 60:.1f} min")
    assert gain >= 4.0
    assert sgain >= 0.05
    assert seconds < 30 * 60


@pytest.mark.slow
def test_desk_train_loss_drops(desk_full):
    rows = desk_full[0].log.rows
    assert len(rows) == 20
    assert rows[-1].train_rmse <= 0.7 * rows[0].train_rmse


@pytest.mark.slow
@criterion(10, "ablation harness")
def test_ablation(desk_splits, note):
    tr, va, te = desk_splits
    res = bench.run_ablation(tr, va, te, TrainConfig(**DESK_CFG))
    assert not res.failed, res.failed
    assert [r.model for r in res.report] == ["single", "dual", "dual-laplacian", "full"]
    note(", ".join(f"{r.model} {r.psnr_mean:.2f}" for r in res.report)
         + f" vs noisy {res.reference.psnr_mean:.2f} dB")
    for rows in res.logs.values():
        assert len(rows) >= 1
    assert all(r.psnr_mean > res.reference.psnr_mean for r in res.report)


@pytest.mark.slow
@criterion(11, "grid harness")
def test_grid(desk_splits, desk_full, note):
    rep = bench.eval_grid(desk_full[0].best, desk_splits[2], DESK["seed"])
    model, noisy = rep.rows[:6], rep.rows[6:]
    assert [(r.sigma, r.eta) for r in noisy] == [(5, 300), (10, 200), (15, 150), (20, 100),
                                                 (25, 50), (30, 100)]
    assert [(r.sigma, r.eta) for r in model] == [(r.sigma, r.eta) for r in noisy]
    ps = [r.psnr_mean for r in noisy]
    note("noisy PSNR " + " > ".join(f"{p:.2f}" for p in ps[:5]))
    assert all(a > b for a, b in zip(ps[:4], ps[1:5]))


@pytest.mark.slow
def test_grid_denoised_trend(desk_splits, desk_full):
    model = bench.eval_grid(desk_full[0].best, desk_splits[2], DESK["seed"]).rows[:6]
    assert model[0].psnr_mean > model[4].psnr_mean


@criterion(12, "end-to-end determinism")
def test_determinism(tmp_path, note):
    def pipeline(root):
        data, ck = root / "data", root / "m.sxr"
        steps = [
            ["phantom", "generate", "--count", "48", "--size", "64", "--seed", "12",
             "--out", data],
            ["train", "--data", data, "--epochs", "3", "--width-scale", "1/4",
             "--seed", "12", "--out", ck],
            ["eval", "--ckpt", ck, "--data", data, "--seed", "12", "--out", root / "r.csv"],
            ["eval", "--ckpt", ck, "--data", data, "--seed", "12", "--mode", "grid",
             "--out", root / "g.csv"],
        ]
        for argv in steps:
            assert cli.main([str(a) for a in argv]) == 0
        return [(root / n).read_bytes() for n in ("m.sxr", "m.sxr.last", "r.csv", "g.csv")]

    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first, second = pipeline(tmp_path / "a"), pipeline(tmp_path / "b")
    note(f"checkpoint {len(first[0])} bytes")
    assert first == second


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-rA"]))
