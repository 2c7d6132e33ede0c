"""Command-line entry points: segment, eval, bench-similarity."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click

from .errors import ScribblesegError
from .imgio import load_image, load_scribbles, save_image, save_mask
from .lowlevel import MeanShiftParams
from .pipeline import (
    EngineConfig,
    add_scribbles,
    batch_evaluate,
    create_session,
    format_aggregate_table,
    run_cut,
    write_report_jsonl,
)
from .similarity import SimilarityConfig, benchmark_kernels


def _engine_config(bins, lam, measure, lowlevel, connectivity, hs, hr, min_size,
                   slic_k, slic_compactness, beta_sq, alpha) -> EngineConfig:
    return EngineConfig(
        similarity=SimilarityConfig(bins=bins, lam=lam, measure=measure),
        lowlevel=lowlevel,
        meanshift=MeanShiftParams(hs=hs, hr=hr, min_size=min_size),
        slic_k=slic_k,
        slic_compactness=slic_compactness,
        connectivity=connectivity,
        beta_sq=beta_sq,
        overlay_alpha=alpha,
    )


def _config_options(fn):
    opts = [
        click.option("--lambda", "lam", default=0.2, show_default=True,
                     help="neighbor-bin weight in the channel similarity"),
        click.option("--measure", type=click.Choice(["pssi", "bha"]), default="pssi", show_default=True),
        click.option("--lowlevel", type=click.Choice(["meanshift", "slic"]), default="meanshift",
                     show_default=True),
        click.option("--connectivity", type=click.Choice(["4", "8"]), default="8", show_default=True),
        click.option("--hs", default=8.0, show_default=True, help="mean-shift spatial bandwidth (px)"),
        click.option("--hr", default=8.0, show_default=True, help="mean-shift range bandwidth (Luv)"),
        click.option("--min-size", default=50, show_default=True, help="smallest surviving segment (px)"),
        click.option("--slic-k", default=400, show_default=True, help="SLIC target cluster count"),
        click.option("--slic-compactness", default=10.0, show_default=True),
        click.option("--beta-sq", default=0.3, show_default=True, help="beta^2 for the F-beta score"),
        click.option("--alpha", default=0.6, show_default=True, help="overlay background blend"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Scribble-guided image segmentation via spanning-tree partitioning."""


@main.command("segment")
@click.argument("image_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("scribbles_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--bg-scribbles", type=click.Path(exists=True, dir_okay=False), default=None,
              help="treat SCRIBBLES_PATH as the fg mask and this as the bg mask")
@click.option("--bbox", nargs=4, type=int, default=None,
              help="row0 col0 row1 col1; everything fully outside is background")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="output mask PNG")
@click.option("--overlay", "overlay_path", type=click.Path(dir_okay=False), default=None,
              help="also write the translucent-background overlay PNG")
@click.option("--bins", default=8, show_default=True, help="histogram bins per channel")
@_config_options
def cmd_segment(image_path, scribbles_path, bg_scribbles, bbox, out, overlay_path,
                bins, lam, measure, lowlevel, connectivity, hs, hr, min_size,
                slic_k, slic_compactness, beta_sq, alpha):
    """Segment one image from scribbles and write the foreground mask."""
    config = _engine_config(bins, lam, measure, lowlevel, int(connectivity), hs, hr,
                            min_size, slic_k, slic_compactness, beta_sq, alpha)
    try:
        image = load_image(image_path)
        source = (scribbles_path, bg_scribbles) if bg_scribbles else scribbles_path
        scribbles = load_scribbles(source)
        if bbox:
            from .imgio import Scribbles
            scribbles = scribbles.union(Scribbles(bbox=tuple(bbox)))
        start = time.perf_counter()
        session = create_session(image, config)
        add_scribbles(session, scribbles)
        mask, overlay, cut = run_cut(session)
        elapsed = time.perf_counter() - start
        save_mask(mask, out)
        if overlay_path:
            save_image(overlay, overlay_path)
    except (ScribblesegError, OSError) as exc:
        raise click.ClickException(str(exc))
    u, v, w = cut.removed_edge
    click.echo(f"segments: {session.segmap.n_segments}")
    click.echo(f"removed edge: ({u}, {v}) weight {w:.6f}")
    click.echo(f"seconds: {elapsed:.3f}")


@main.command("eval")
@click.argument("dataset_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="write per-image + aggregate records as JSON lines")
@click.option("--bins", "bins_csv", default="8", show_default=True,
              help="bins per channel; a comma-separated list sweeps, one aggregate block per value")
@_config_options
def cmd_eval(dataset_dir, report_path, bins_csv,
             lam, measure, lowlevel, connectivity, hs, hr, min_size,
             slic_k, slic_compactness, beta_sq, alpha):
    """Evaluate a dataset directory (image / scribbles / ground truth per item)."""
    bin_values = [int(b) for b in bins_csv.split(",")]
    try:
        for b in bin_values:
            config = _engine_config(b, lam, measure, lowlevel, int(connectivity), hs, hr,
                                    min_size, slic_k, slic_compactness, beta_sq, alpha)
            result = batch_evaluate(dataset_dir, config)
            click.echo(f"--- bins={b} measure={measure} lowlevel={lowlevel} ---")
            click.echo(format_aggregate_table(result))
            for name, reason in result.skipped:
                click.echo(f"skipped {name}: {reason}", err=True)
            if report_path:
                suffix = f".b{b}" if len(bin_values) > 1 else ""
                write_report_jsonl(result, f"{report_path}{suffix}")
    except ScribblesegError as exc:
        raise click.ClickException(str(exc))


@main.command("bench-similarity")
@click.option("--bins", "bins_csv", default="8,16,32,64", show_default=True,
              help="comma-separated bin counts")
@click.option("--iterations", default=10_000, show_default=True,
              help="kernel evaluations per bin count")
@click.option("--seed", default=0, show_default=True)
def cmd_bench_similarity(bins_csv, iterations, seed):
    """Time the linear and cubic similarity kernels across bin counts."""
    bins_list = [int(b) for b in bins_csv.split(",")]
    result = benchmark_kernels(bins_list, evaluations=iterations, seed=seed)
    click.echo(f"{'bins':>6} {'pssi s/batch':>14} {'bha s/batch':>14}")
    for b, tp, tb in zip(result.bins, result.pssi_seconds, result.bha_seconds):
        click.echo(f"{b:>6} {tp:>14.6f} {tb:>14.6f}")
    if result.pssi_slope is not None:
        click.echo(f"pssi log-log slope: {result.pssi_slope:.3f}")
        click.echo(f"bha  log-log slope: {result.bha_slope:.3f}")
    else:
        click.echo("slopes: undefined (need at least two bin counts)")


if __name__ == "__main__":
    sys.exit(main())
