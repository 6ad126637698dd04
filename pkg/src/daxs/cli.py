"""`daxs` command line: simulate, fit, align-average, sign-compare, serve.

Every command is a pure function of its input files and explicit seeds.
Input problems (unreadable files, malformed JSON, failed validation) exit
with status 2 and a diagnostic on stderr.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .extract import SeedCurves
from .globalfit import FitConfig
from .hamiltonian import ModelParams
from .image import SpectralImage
from .pipeline import (
    extraction_config_from,
    overlay_polylines,
    run_align_average,
    run_fit,
    run_sign_compare,
)
from .plotting import save_heatmap, save_sign_compare_chart
from .simulate import LeadModel, SimConfig, render_daxs_image


class InputError(click.ClickException):
    exit_code = 2


def _fail(message: str) -> "InputError":
    return InputError(message)


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _fail(f"{path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail(
            f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def _parse(path: str, parser, what: str):
    try:
        return parser(_load_json(path))
    except InputError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise _fail(f"{path}: invalid {what}: {exc}") from exc


@click.group()
def main():
    """Delta-axis spectroscopy simulation and Hamiltonian extraction."""


@main.command()
@click.argument("params_file", type=click.Path())
@click.argument("sim_config_file", type=click.Path())
@click.option("-o", "--out", "out_path", required=True, type=click.Path(),
              help="Output DAXS-IMG path.")
@click.option("--seed", type=int, default=None, help="Override the noise RNG seed.")
@click.option("--png/--no-png", default=True, show_default=True,
              help="Render a heatmap PNG next to the image document.")
def simulate(params_file, sim_config_file, out_path, seed, png):
    """Render a synthetic DAXS image from model parameters."""
    params = _parse(params_file, ModelParams.from_dict, "model parameters")
    doc = _load_json(sim_config_file)
    try:
        cfg = SimConfig.from_dict(doc)
        leads = LeadModel.from_list(doc["leads"]) if doc.get("leads") else None
        lead_voltage = float(doc.get("lead_voltage", 0.0))
    except (ValueError, KeyError, TypeError) as exc:
        raise _fail(f"{sim_config_file}: invalid simulation config: {exc}") from exc
    if seed is not None:
        cfg = SimConfig.from_dict({**cfg.to_dict(), "rng_seed": seed})

    img = render_daxs_image(params, cfg, leads=leads, lead_voltage=lead_voltage)
    img.save(out_path)
    if png:
        save_heatmap(img, Path(out_path).with_suffix(".png"))
    click.echo(f"wrote {out_path}")


def _load_fit_inputs(image_file, seeds_file, fit_config_file):
    img = _parse(image_file, SpectralImage.from_dict, "DAXS-IMG document")
    seeds = _parse(seeds_file, SeedCurves.from_dict, "seed curves")
    doc = _load_json(fit_config_file)
    try:
        fit_cfg = FitConfig.from_dict(doc)
        extraction = extraction_config_from(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise _fail(f"{fit_config_file}: invalid fit config: {exc}") from exc
    return img, seeds, fit_cfg, extraction


def _overlay_spec(img, result, bindings) -> list[dict]:
    polys = overlay_polylines(img, result, bindings)
    return [{"x": [p[0] for p in poly["points"]],
             "y": [p[1] for p in poly["points"]],
             "label": poly["track_id"]} for poly in polys]


@main.command()
@click.argument("image_file", type=click.Path())
@click.argument("seeds_file", type=click.Path())
@click.argument("fit_config_file", type=click.Path())
@click.option("-o", "--out", "out_path", required=True, type=click.Path(),
              help="Output FitResult JSON path.")
@click.option("--tracks", "tracks_path", type=click.Path(), default=None,
              help="Peak-track CSV path (default: alongside the fit result).")
@click.option("--sign-class", type=click.Choice(["a", "b"]), default=None,
              help="Override the sign class from the fit config.")
@click.option("--png/--no-png", default=True, show_default=True,
              help="Render the fit overlay next to the fit result.")
def fit(image_file, seeds_file, fit_config_file, out_path, tracks_path, sign_class, png):
    """Extract peak tracks from an image and fit the Hamiltonian to them."""
    img, seeds, fit_cfg, extraction = _load_fit_inputs(
        image_file, seeds_file, fit_config_file)
    if sign_class is not None:
        fit_cfg = FitConfig.from_dict({**fit_cfg.to_dict(), "sign_class": sign_class})
    try:
        tracks, result = run_fit(img, seeds, fit_cfg, extraction)
    except ValueError as exc:
        raise _fail(str(exc)) from exc

    result.save(out_path)
    tracks_path = tracks_path or str(Path(out_path).with_suffix(".tracks.csv"))
    tracks.save(tracks_path)
    if png:
        save_heatmap(img, Path(out_path).with_suffix(".png"),
                     overlays=_overlay_spec(img, result, tracks.bindings))
    for warning in tracks.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"wrote {out_path} and {tracks_path} "
               f"(converged={result.converged}, rms={result.residual_rms:.4g} GHz)")


@main.command("align-average")
@click.argument("image_files", nargs=-1, type=click.Path())
@click.option("--track-spec", "track_spec", required=True, type=click.Path(),
              help="Seed file whose first curve marks the lower anticrossing branch.")
@click.option("-o", "--out", "out_path", required=True, type=click.Path(),
              help="Output averaged DAXS-IMG path.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Alignment report JSON path (default: alongside the image).")
@click.option("--png/--no-png", default=True, show_default=True)
def align_average(image_files, track_spec, out_path, report_path, png):
    """Align repeated scans on the anticrossing vertex and average them."""
    if len(image_files) < 2:
        raise _fail("need at least 2 image files to align and average")
    images = [_parse(p, SpectralImage.from_dict, "DAXS-IMG document")
              for p in image_files]
    seeds = _parse(track_spec, SeedCurves.from_dict, "seed curves")
    if len(seeds) == 0:
        raise _fail(f"{track_spec}: no curves in track spec")
    try:
        average, report = run_align_average(
            images, [str(p) for p in image_files], seeds.curves[0])
    except ValueError as exc:
        raise _fail(str(exc)) from exc

    average.image.save(out_path)
    report_path = report_path or str(Path(out_path).with_suffix(".report.json"))
    Path(report_path).write_text(json.dumps(report, indent=2))
    if png:
        save_heatmap(average.image, Path(out_path).with_suffix(".png"))
    click.echo(f"wrote {out_path} and {report_path}")


@main.command("sign-compare")
@click.argument("image_file", type=click.Path())
@click.argument("seeds_file", type=click.Path())
@click.argument("fit_config_file", type=click.Path())
@click.option("-o", "--out", "out_path", required=True, type=click.Path(),
              help="Output CSV of per-coupling percent differences.")
@click.option("--png/--no-png", default=True, show_default=True)
def sign_compare(image_file, seeds_file, fit_config_file, out_path, png):
    """Fit under both sign-class representatives and compare magnitudes."""
    img, seeds, fit_cfg, extraction = _load_fit_inputs(
        image_file, seeds_file, fit_config_file)
    try:
        tracks, comparison = run_sign_compare(img, seeds, fit_cfg, extraction)
    except ValueError as exc:
        raise _fail(str(exc)) from exc

    lines = ["coupling,percent_diff"]
    lines += [f"{name},{float(value)!r}" for name, value in comparison.percent_diff.items()]
    Path(out_path).write_text("\n".join(lines) + "\n")
    if png:
        save_sign_compare_chart(comparison.percent_diff,
                                Path(out_path).with_suffix(".png"))
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--port", type=int, default=8047, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", "data_dir", type=click.Path(), default=None,
              help="Artifact directory (default: DAXS_DATA_DIR or ./daxs-data).")
def serve(port, host, data_dir):
    """Run the HTTP service backing the annotation UI."""
    import uvicorn

    from .service import create_app

    data_dir = data_dir or os.environ.get("DAXS_DATA_DIR", "daxs-data")
    app = create_app(Path(data_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
