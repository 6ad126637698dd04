"""Shared synthetic scenarios for the test suite.

`desk_scenario` is the full 11-branch setup used by the round-trip and
sign-class tests; `fixture_paths` points at the small committed triplet-only
fixture exercised by the CLI, service and acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from daxs.extract import ExtractionConfig, SeedCurve, SeedCurves, extract_tracks
from daxs.globalfit import FitConfig
from daxs.hamiltonian import (
    COUPLING_NAMES,
    BranchLabel,
    LevelOffsets,
    ModelParams,
    TunnelCouplings,
    branch_energies,
)
from daxs.image import AxisSpec
from daxs.simulate import SimConfig, render_daxs_image

FIXTURE_DIR = Path(__file__).parent / "fixtures"


def all_branch_labels() -> list[BranchLabel]:
    return ([BranchLabel("triplet", i) for i in range(4)]
            + [BranchLabel("singlet", i) for i in range(7)])


def desk_params() -> ModelParams:
    """Couplings in the 2-25 GHz range over well-spread level offsets."""
    return ModelParams(
        TunnelCouplings(t11=2.5, t12=5.0, t21=4.0, t22=7.0,
                        t31=4.0, t32=9.0, t41=2.5, t42=9.0),
        LevelOffsets(l21=40.0, r21=10.0, r31=30.0, r41=58.0),
    )


def desk_sim_config(noise_sigma: float = 0.05, rng_seed: int = 7) -> SimConfig:
    return SimConfig(
        eps_axis=AxisSpec(-55.0, 1.0, 131),
        delta_axis=AxisSpec(-50.0, 0.25, 561),
        linewidth=2.0,
        noise_sigma=noise_sigma,
        rng_seed=rng_seed,
    )


def seeds_from_truth(params: ModelParams, eps: np.ndarray, wobble: float = 0.4,
                     stride: int = 8, rng_seed: int = 3,
                     labels: list[BranchLabel] | None = None) -> SeedCurves:
    """Polylines along the true branch curves with hand-drawn imprecision."""
    labels = labels if labels is not None else all_branch_labels()
    energies = branch_energies(params, labels, eps)
    rng = np.random.default_rng(rng_seed)
    curves = []
    for k, label in enumerate(labels):
        sub = np.arange(0, eps.size, stride)
        if sub[-1] != eps.size - 1:
            sub = np.append(sub, eps.size - 1)
        noise = rng.uniform(-wobble, wobble, sub.size)
        curves.append(SeedCurve(f"trk{k}",
                                np.column_stack([eps[sub], energies[k][sub] + noise]),
                                label))
    return SeedCurves(tuple(curves))


def perturbed_params(params: ModelParams, frac: float = 0.3,
                     rng_seed: int = 42) -> ModelParams:
    """Every magnitude scaled by a random factor in [1-frac, 1+frac]."""
    rng = np.random.default_rng(rng_seed)
    couplings = TunnelCouplings(**{
        name: params.couplings.value(name) * (1 + rng.uniform(-frac, frac))
        for name in COUPLING_NAMES})
    o = params.offsets
    raw = {name: getattr(o, name) * (1 + rng.uniform(-frac, frac))
           for name in ("l21", "r21", "r31", "r41")}
    raw["r31"] = max(raw["r31"], raw["r21"])
    raw["r41"] = max(raw["r41"], raw["r31"])
    return ModelParams(couplings, LevelOffsets(**raw), params.zeeman)


@dataclass
class DeskScenario:
    params: ModelParams
    sim: SimConfig
    seeds: SeedCurves
    tracks: object
    init: ModelParams

    def fit_config(self, **overrides) -> FitConfig:
        return FitConfig(initial=self.init, **overrides)


@pytest.fixture(scope="session")
def desk_scenario() -> DeskScenario:
    """Simulated desk-scale image run through extraction once per session."""
    params = desk_params()
    sim = desk_sim_config()
    img = render_daxs_image(params, sim)
    seeds = seeds_from_truth(params, sim.eps_axis.values())
    tracks = extract_tracks(img, seeds, ExtractionConfig())
    return DeskScenario(params=params, sim=sim, seeds=seeds, tracks=tracks,
                        init=perturbed_params(params))


@pytest.fixture(scope="session")
def fixture_paths() -> dict[str, Path]:
    paths = {
        "image": FIXTURE_DIR / "fixture_image.json",
        "seeds": FIXTURE_DIR / "fixture_seeds.json",
        "fit_config": FIXTURE_DIR / "fixture_fitconfig.json",
        "expected": FIXTURE_DIR / "fixture_expected.json",
    }
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        pytest.fail(f"committed fixtures missing: {missing}; "
                    "regenerate with scripts/make_fixtures.py")
    return paths
