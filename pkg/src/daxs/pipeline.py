"""End-to-end compositions shared by the command line and the HTTP service."""

from __future__ import annotations

import numpy as np

from .extract import ExtractionConfig, PeakTracks, SeedCurve, SeedCurves, extract_tracks
from .globalfit import (
    FitConfig,
    FitResult,
    SignClassComparison,
    compare_sign_classes,
    fit_hamiltonian,
)
from .hamiltonian import ModelParams, branch_energies, sector_branch_count
from .image import SpectralImage
from .registration import AverageResult, align_images, average_images, fit_anticrossing


def validate_seed_bindings(seeds: SeedCurves, params: ModelParams) -> None:
    """Reject seed curves bound to branches the model does not have."""
    for curve in seeds:
        label = curve.branch
        if label is None:
            continue
        count = sector_branch_count(params, label.sector)
        if label.index >= count:
            raise ValueError(
                f"seed curve {curve.track_id!r} is bound to absent branch "
                f"{label.key()} (sector has {count} branches)")


def extraction_config_from(doc: dict) -> ExtractionConfig:
    return ExtractionConfig.from_dict(doc.get("extraction", {}))


def run_fit(img: SpectralImage, seeds: SeedCurves, fit_cfg: FitConfig,
            extraction_cfg: ExtractionConfig | None = None
            ) -> tuple[PeakTracks, FitResult]:
    validate_seed_bindings(seeds, fit_cfg.initial)
    tracks = extract_tracks(img, seeds, extraction_cfg)
    return tracks, fit_hamiltonian(tracks, fit_cfg)


def run_sign_compare(img: SpectralImage, seeds: SeedCurves, fit_cfg: FitConfig,
                     extraction_cfg: ExtractionConfig | None = None
                     ) -> tuple[PeakTracks, SignClassComparison]:
    validate_seed_bindings(seeds, fit_cfg.initial)
    tracks = extract_tracks(img, seeds, extraction_cfg)
    return tracks, compare_sign_classes(tracks, fit_cfg)


def overlay_polylines(img: SpectralImage, result: FitResult,
                      bindings: dict) -> list[dict]:
    """Fitted branch curves sampled on the image x axis, for UI overlays."""
    xs = img.x_axis.values()
    out = []
    for track_id, label in bindings.items():
        energy = branch_energies(result.params, [label], xs)[0]
        delta = result.scale * energy + result.delta_offset
        out.append({
            "track_id": track_id,
            "branch": {"sector": label.sector, "index": label.index,
                       "spin_z": label.spin_z},
            "points": np.column_stack([xs, delta]).tolist(),
        })
    return out


def run_align_average(images: list[SpectralImage], image_ids: list[str],
                      spec_curve: SeedCurve,
                      extraction_cfg: ExtractionConfig | None = None
                      ) -> tuple[AverageResult, list[dict]]:
    """Extract the designated lower anticrossing branch in every image, fit a
    hyperbola, align on the vertex pixels and average."""
    if len(images) < 2:
        raise ValueError("need at least 2 images to align and average")
    seeds = SeedCurves((spec_curve,))
    refs = []
    for img in images:
        tracks = extract_tracks(img, seeds, extraction_cfg)
        xs, deltas, sigmas = tracks.arrays(spec_curve.track_id)
        if xs.size < 5:
            raise ValueError(
                f"anticrossing track has only {xs.size} usable points; need >= 5")
        fit = fit_anticrossing(xs, deltas, sigmas)
        refs.append((img.x_axis.index_of(fit.center),
                     img.y_axis.index_of(fit.vertex_delta)))

    aligned = align_images(images, refs)
    report = []
    for image_id, (ix, iy) in zip(image_ids, refs):
        report.append({
            "image_id": image_id,
            "ref_pixel": [ix, iy],
            "shift": [refs[0][0] - ix, refs[0][1] - iy],
        })
    return average_images(aligned), report
