"""Command-line interface.

Every failure exits nonzero after printing one JSON line on stderr,
``{"error": <kind>, "message": <text>}``.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import bench, metrics
from .imagecore import load_dataset, load_image, save_image, stratified_split
from .model import Variant, load_checkpoint, save_checkpoint
from .model.config import parse_width_scale
from .noisegen import NoiseParams, apply_noise
from .phantom import generate_dataset
from .seeding import stream
from .trainer import TrainConfig, train

VARIANTS = [v.value for v in Variant]


def _width_scale(ctx, param, value):
    try:
        return parse_width_scale(value)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None


def _splits(data, seed):
    return stratified_split(load_dataset(data), seed=seed)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Low-dose radiograph denoising lab."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.group()
def phantom():
    """Synthetic chest phantoms."""


@phantom.command("generate")
@click.option("--count", type=int, required=True)
@click.option("--size", type=int, default=256, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def phantom_generate(count, size, seed, out_dir):
    """Write COUNT phantoms as <out>/<class>/<index>.pgm."""
    ds = generate_dataset(count, size, seed, out_dir)
    click.echo(f"wrote {len(ds)} images ({ds.class_counts()[0]} normal, "
               f"{ds.class_counts()[1]} opacity) to {out_dir}")


@cli.group()
def noise():
    """Poisson-Gaussian degradation."""


@noise.command("apply")
@click.option("--eta", type=float, required=True, help="Photon scale (Poisson rate per unit).")
@click.option("--sigma", type=float, required=True, help="Gaussian std in 8-bit grey levels.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--in", "src", type=click.Path(dir_okay=False), required=True)
@click.option("--out", "dst", type=click.Path(dir_okay=False), required=True)
def noise_apply(eta, sigma, seed, src, dst):
    """Degrade one image."""
    img = load_image(src)
    save_image(apply_noise(img, NoiseParams(eta, sigma), stream("noise-apply", seed)), dst)


@cli.command("train")
@click.option("--variant", type=click.Choice(VARIANTS), default="full", show_default=True)
@click.option("--data", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--epochs", type=int, default=50, show_default=True)
@click.option("--width-scale", default="1/4", callback=_width_scale, show_default=True)
@click.option("--batch", type=int, default=4, show_default=True)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--patience", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def train_cmd(variant, data, epochs, width_scale, batch, lr, patience, seed, out):
    """Train on the train split of DATA; keep the best-validation checkpoint.

    The split is drawn with --seed, so evaluate with the same seed. The loss
    log goes to <out>.log.csv and the final-epoch weights to <out>.last.
    """
    tr, va, _ = _splits(data, seed)
    cfg = TrainConfig(learning_rate=lr, batch_size=batch, max_epochs=epochs, seed=seed,
                      width_scale=width_scale, variant=variant, early_stop_patience=patience)
    res = train(tr, va, cfg)
    out = Path(out)
    save_checkpoint(res.best, out)
    save_checkpoint(res.last, out.with_name(out.name + ".last"))
    res.log.write_csv(out.with_name(out.name + ".log.csv"))
    click.echo(f"best epoch {res.best_epoch} of {len(res.log)} ({res.stop_reason}); "
               f"checkpoint {out}")
    if res.stop_reason == "non_finite":
        raise RuntimeError("training aborted on a non-finite loss; best checkpoint saved")


@cli.command("eval")
@click.option("--ckpt", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--mode", type=click.Choice(["overall", "grid"]), default="overall",
              show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "md"]), default="csv",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def eval_cmd(ckpt, data, mode, seed, fmt, out):
    """Score a checkpoint on the test split of DATA."""
    store = load_checkpoint(ckpt)
    _, _, test = _splits(data, seed)
    run = bench.eval_overall if mode == "overall" else bench.eval_grid
    bench.emit_report(run(store, test, seed), fmt, out)


@cli.command("ablate")
@click.option("--data", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--epochs", type=int, default=20, show_default=True)
@click.option("--width-scale", default="1/4", callback=_width_scale, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def ablate_cmd(data, epochs, width_scale, seed, out_dir):
    """Train all four variants and write ablation.{csv,md} plus per-variant artifacts."""
    tr, va, te = _splits(data, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = TrainConfig(max_epochs=epochs, seed=seed, width_scale=width_scale)

    def keep(variant, res, row):
        save_checkpoint(res.best, out / f"{variant.value}.sxr")
        res.log.write_csv(out / f"{variant.value}.log.csv")

    result = bench.run_ablation(tr, va, te, base, on_variant=keep)
    bench.emit_report(result.report, "csv", out / "ablation.csv")
    bench.emit_report(result.report, "md", out / "ablation.md")
    if result.reference is not None:
        bench.emit_report(bench.BenchReport([result.reference]), "csv",
                          out / "noisy_reference.csv")
    if result.failed:
        tag, msg = result.failed[0]
        raise RuntimeError(f"variant {tag} failed ({msg}); partial report written")


@cli.command("metrics")
@click.option("--ref", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--test", type=click.Path(exists=True, dir_okay=False), required=True)
def metrics_cmd(ref, test):
    """Print rmse,psnr,ssim,snr for one image pair."""
    click.echo(metrics.evaluate_all(load_image(ref), load_image(test)).csv())


def _fail(kind, message):
    msg = " ".join(str(message).split())
    sys.stderr.write(json.dumps({"error": kind, "message": msg}) + "\n")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="xrdenoise", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        _fail("Aborted", "interrupted")
        return 130
    except click.ClickException as exc:
        _fail(type(exc).__name__, exc.format_message())
        return exc.exit_code or 2
    except Exception as exc:  # noqa: BLE001 - one-line machine-readable failure
        _fail(type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
