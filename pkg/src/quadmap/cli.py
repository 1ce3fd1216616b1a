"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/format error. Diagnostics go
to stderr; reports go to stdout as ``key=value`` lines (``--format text``)
or JSON objects, one per line (``--format records``). A ``-`` path reads
stdin or writes stdout.
"""

from __future__ import annotations

import json
import sys
from io import BytesIO

import click
import numpy as np

from . import codec, metrics
from .errors import QuadmapError
from .quadtree import EncodeConfig, compose, encode_dense, node_count, rasterize
from .sparse import FeatureGrid, build_decoder_stages, toy_decoder_profile

_FORMAT_OPTION = click.option(
    "--format",
    "fmt",
    type=click.Choice(["text", "records"]),
    default="text",
    show_default=True,
    help="Report style: key=value lines or JSON records.",
)


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_bytes(path: str, data: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as fh:
        fh.write(data)


def _load_forest(path: str):
    return codec.read_forest(_read_bytes(path))


def _load_disparity(path: str) -> np.ndarray:
    data = _read_bytes(path)
    if data[:4] == b"QFM1":
        return rasterize(codec.read_forest(data))
    return codec.read_dense(data)


def _emit(records: list[dict], fmt: str) -> None:
    if fmt == "records":
        for rec in records:
            click.echo(json.dumps(rec, sort_keys=False))
        return
    for i, rec in enumerate(records):
        if i:
            click.echo("")
        for key, value in rec.items():
            click.echo(f"{key}={value}")


def _forest_stats(forest) -> dict:
    counts = node_count(forest)
    rec = {"record": "stats", "levels": forest.level_count}
    for i, c in enumerate(counts.per_level):
        rec[f"nodes_q{forest.level_count - 1 - i}"] = c
    rec["nodes_total"] = counts.total
    rec["compression_ratio"] = round(metrics.compression_ratio(forest), 6)
    return rec


@click.group()
def cli() -> None:
    """Quadtree depth-map tools."""


@cli.command()
@click.argument("input", metavar="INPUT")
@click.argument("output", metavar="[OUTPUT]", required=False)
@click.option("--tau", type=float, default=0.1, show_default=True,
              help="Subdivision threshold, in disparity units of the input.")
@click.option("--levels", type=int, default=6, show_default=True)
@click.option("--keep-children/--no-keep-children", default=True, show_default=True,
              help="Keep sibling quadruples that host no deeper subdivision.")
@click.option("--tau-sweep", default=None, metavar="T0,T1,...",
              help="Sweep thresholds and report (tau, compression_ratio, rmse) "
                   "instead of writing a single encode.")
@_FORMAT_OPTION
def encode(input, output, tau, levels, keep_children, tau_sweep, fmt):
    """Encode a dense PFM/PGM map INTO a QFM1 forest, reporting stats."""
    dense = codec.read_dense(_read_bytes(input))
    if dense.ndim != 2:
        raise click.UsageError("encode expects a single-channel map")
    if tau_sweep is not None:
        try:
            taus = [float(t) for t in tau_sweep.split(",") if t.strip()]
        except ValueError as exc:
            raise click.UsageError(f"bad --tau-sweep value: {exc}")
        if not taus:
            raise click.UsageError("--tau-sweep needs at least one threshold")
        records = []
        for t in taus:
            forest = encode_dense(dense, EncodeConfig(t, levels, keep_children))
            err = rasterize(forest) - dense
            records.append(
                {
                    "record": "tau_sweep",
                    "tau": t,
                    "compression_ratio": round(metrics.compression_ratio(forest), 6),
                    "rmse": round(float(np.sqrt(np.mean(err**2))), 9),
                }
            )
        _emit(records, fmt)
        return
    if output is None:
        raise click.UsageError("OUTPUT is required unless --tau-sweep is given")
    forest = encode_dense(dense, EncodeConfig(tau, levels, keep_children))
    _write_bytes(output, codec.write_forest(forest))
    _emit([_forest_stats(forest)], fmt)


@cli.command()
@click.argument("input", metavar="INPUT")
@click.argument("output", metavar="OUTPUT")
@click.option("--level", type=int, default=0, show_default=True,
              help="Quadtree level to compose at (0 = full resolution).")
def decode(input, output, level):
    """Expand a QFM1 forest into a dense PFM map."""
    forest = _load_forest(input)
    grid = compose(forest, level)
    buf = BytesIO()
    codec.write_pfm(grid, buf)
    _write_bytes(output, buf.getvalue())


@cli.command("eval")
@click.argument("pred", metavar="PRED")
@click.argument("gt", metavar="GT")
@click.option("--scale", type=float, default=1.0, show_default=True,
              help="Metric scale: depth = scale / disparity.")
@_FORMAT_OPTION
def eval_cmd(pred, gt, scale, fmt):
    """Score a prediction (QFM1 or PFM) against a dense reference map."""
    p = _load_disparity(pred)
    g = _load_disparity(gt)
    m = metrics.depth_metrics(p, g, g > 0, scale=scale)
    _emit(
        [
            {
                "record": "depth_metrics",
                "abs_rel": round(m.abs_rel, 9),
                "sq_rel": round(m.sq_rel, 9),
                "rmse": round(m.rmse, 9),
                "n_valid": m.n_valid,
            }
        ],
        fmt,
    )


@cli.command("compare-structure")
@click.argument("a", metavar="A")
@click.argument("b", metavar="B")
@_FORMAT_OPTION
def compare_structure(a, b, fmt):
    """Compare the branching structure of two QFM1 forests."""
    fa = _load_forest(a)
    fb = _load_forest(b)
    report = metrics.structure_likelihood(fa, fb)
    rec = {
        "record": "structure",
        "likelihood": round(report.likelihood, 9),
        "compression_a": round(report.compression_a, 6),
        "compression_b": round(report.compression_b, 6),
    }
    for i, m in enumerate(report.per_level_match):
        rec[f"match_q{fa.level_count - 1 - i}"] = round(m, 9)
    _emit([rec], fmt)


@cli.command()
@click.argument("input", metavar="INPUT")
@_FORMAT_OPTION
def stats(input, fmt):
    """Node counts, compression ratio, and per-level data distribution."""
    forest = _load_forest(input)
    rec = _forest_stats(forest)
    for i, share in enumerate(metrics.level_distribution(forest)):
        rec[f"share_q{forest.level_count - 1 - i}"] = round(share, 6)
    _emit([rec], fmt)


@cli.command("sparsity-demo")
@click.argument("output", metavar="[OUTPUT.qfm]", required=False)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tau", type=float, default=0.05, show_default=True)
@click.option("--levels", type=int, default=6, show_default=True)
@click.option("--channels", type=int, default=8, show_default=True)
@_FORMAT_OPTION
def sparsity_demo(output, seed, tau, levels, channels, fmt):
    """Run the untrained sparse decoder and report sparse vs dense MACs.

    Writes the resulting forest (and a rendered .ppm alongside) when an
    output path is given.
    """
    if levels < 2 or channels < 1:
        raise click.UsageError("need --levels >= 2 and --channels >= 1")
    rng = np.random.default_rng(seed)
    base = 4
    seed_grid = FeatureGrid.create(
        rng.uniform(0.0, 1.0, size=(base, base, channels)),
        np.ones((base, base), dtype=bool),
    )
    stages = build_decoder_stages(levels, channels, seed=seed)
    forest, reports = toy_decoder_profile(seed_grid, stages, tau)

    records = []
    for i, rep in enumerate(reports):
        records.append(
            {
                "record": "stage_flops",
                "level": levels - 1 - i,
                "sparse_macs": rep.sparse_macs,
                "dense_macs": rep.dense_macs,
                "active_fraction": round(rep.active_fraction, 6),
            }
        )
    summary = _forest_stats(forest)
    summary.update(
        record="sparsity_demo",
        tau=tau,
        seed=seed,
        channels=channels,
        sparse_macs_total=sum(r.sparse_macs for r in reports),
        dense_macs_total=sum(r.dense_macs for r in reports),
    )
    records.append(summary)
    _emit(records, fmt)

    if output is not None:
        _write_bytes(output, codec.write_forest(forest))
        if output != "-":
            ppm_path = (
                output[:-4] + ".ppm" if output.endswith(".qfm") else output + ".ppm"
            )
            buf = BytesIO()
            codec.write_ppm(codec.render_quadtree(forest), buf)
            _write_bytes(ppm_path, buf.getvalue())


@cli.command()
@click.argument("input", metavar="INPUT")
@click.argument("output", metavar="OUTPUT")
def render(input, output):
    """Render a QFM1 forest as a PPM image."""
    forest = _load_forest(input)
    buf = BytesIO()
    codec.write_ppm(codec.render_quadtree(forest), buf)
    _write_bytes(output, buf.getvalue())


def main(argv=None) -> int:
    """Run the CLI; returns the process exit code instead of raising."""
    try:
        cli.main(args=argv, prog_name="quadmap", standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except (QuadmapError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
