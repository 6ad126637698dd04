#!/usr/bin/env python3
"""Regenerate the committed round-trip fixture under tests/fixtures/.

The fixture is a triplet-sector scene: four visible branches over two wide
anticrossings, singlet states dark. The fit config frees only the
identifiable parameters, so the fixture exercises the full extract-and-fit
path quickly and deterministically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from daxs.extract import ExtractionConfig, SeedCurve, SeedCurves, extract_tracks
from daxs.globalfit import FitConfig, fit_hamiltonian
from daxs.hamiltonian import (
    BranchLabel,
    LevelOffsets,
    ModelParams,
    TunnelCouplings,
    branch_energies,
)
from daxs.image import AxisSpec
from daxs.simulate import SimConfig, render_daxs_image

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

TRUE_PARAMS = ModelParams(
    TunnelCouplings(t21=4.0, t22=9.0, t41=3.0, t42=11.0),
    LevelOffsets(l21=28.0, r21=9.0, r31=20.0, r41=42.0),
)

SIM = SimConfig(
    eps_axis=AxisSpec(-32.0, 1.0, 85),
    delta_axis=AxisSpec(-32.0, 0.25, 369),
    linewidth=2.0,
    visibility={f"singlet:{i}": 0.0 for i in range(4)},
    noise_sigma=0.04,
    rng_seed=2024,
)

INITIAL = ModelParams(
    TunnelCouplings(t21=4.8, t22=7.6, t41=2.4, t42=12.8),
    LevelOffsets(l21=31.0, r21=7.8, r31=20.0, r41=38.0),
)

FIT_CONFIG = {
    "initial": INITIAL.to_dict(),
    "free": {"t11": False, "t12": False, "t31": False, "t32": False,
             "r31": False},
    "sign_class": "a",
    "tie_t42_to_t32": False,
    "fit_scale": True,
    "fit_delta_offset": True,
    "extraction": {"sg_window": 11, "sg_order": 2, "linewidth": 2.0},
}


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    labels = [BranchLabel("triplet", i) for i in range(4)]
    img = render_daxs_image(TRUE_PARAMS, SIM)

    eps = SIM.eps_axis.values()
    energies = branch_energies(TRUE_PARAMS, labels, eps)
    rng = np.random.default_rng(5)
    curves = []
    for k, label in enumerate(labels):
        sub = np.arange(0, eps.size, 7)
        if sub[-1] != eps.size - 1:
            sub = np.append(sub, eps.size - 1)
        wobble = rng.uniform(-0.3, 0.3, sub.size)
        curves.append(SeedCurve(f"branch{k}",
                                np.column_stack([eps[sub], energies[k][sub] + wobble]),
                                label))
    seeds = SeedCurves(tuple(curves))

    img.save(OUT_DIR / "fixture_image.json")
    seeds.save(OUT_DIR / "fixture_seeds.json")
    (OUT_DIR / "fixture_fitconfig.json").write_text(json.dumps(FIT_CONFIG, indent=2))

    tracks = extract_tracks(img, seeds, ExtractionConfig.from_dict(FIT_CONFIG["extraction"]))
    result = fit_hamiltonian(tracks, FitConfig.from_dict(FIT_CONFIG))
    fitted = result.coupling_magnitudes()
    report = {name: {"true": TRUE_PARAMS.couplings.magnitude(name),
                     "fitted": fitted[name]}
              for name in ("t21", "t22", "t41", "t42")}
    expected = {
        "description": "triplet-sector round-trip fixture",
        "true_params": TRUE_PARAMS.to_dict(),
        "coupling_tolerance_percent": 5.0,
        "scale_tolerance": 0.04,
        "fitted_reference": report,
        "scale_reference": result.scale,
        "residual_rms_reference": result.residual_rms,
    }
    (OUT_DIR / "fixture_expected.json").write_text(json.dumps(expected, indent=2))

    print(f"fit converged={result.converged} rms={result.residual_rms:.4f} "
          f"s={result.scale:.5f}")
    for name, entry in report.items():
        err = 100 * abs(entry["fitted"] - entry["true"]) / entry["true"]
        print(f"  {name}: true {entry['true']:5.2f} fitted {entry['fitted']:8.4f} "
              f"({err:.2f}%)")


if __name__ == "__main__":
    main()
