"""Forward simulation of DAXS images, reservoir sweeps and magneto maps.

Every dot transition renders as a Lorentzian ridge in delta centered on
scale * E_branch(eps) + delta_offset; lead resonances add Lorentzian lines
whose delta position moves linearly with the reservoir gate voltage. Widths
are FWHM throughout. Pixel noise is additive Gaussian from a seeded
generator, so identical (params, config, seed) produce bit-identical images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import BranchLabel, ModelParams, branch_energies, branch_labels
from .image import AxisDescriptor, AxisSpec, SpectralImage

DEFAULT_LINEWIDTH = 2.0  # GHz FWHM, electron-temperature broadening scale


def lorentzian(x, center: float, fwhm: float, amplitude: float = 1.0):
    """Peak-normalized Lorentzian: amplitude at `center`, full width `fwhm`."""
    u = 2.0 * (np.asarray(x) - center) / fwhm
    return amplitude / (1.0 + u * u)


@dataclass(frozen=True)
class LeadResonance:
    """A quasi-1D reservoir resonance: a line delta(V) = intercept + slope * V."""

    intercept: float        # GHz at zero reservoir gate voltage
    slope: float            # GHz per mV, nonzero (dot states do not move)
    width: float = DEFAULT_LINEWIDTH
    amplitude: float = 1.0

    def __post_init__(self):
        if self.slope == 0:
            raise ValueError("lead resonance slope must be nonzero")
        if self.width <= 0:
            raise ValueError("lead resonance width must be > 0")

    def delta_at(self, voltage: float) -> float:
        return self.intercept + self.slope * voltage

    def to_dict(self) -> dict:
        return {"intercept": self.intercept, "slope": self.slope,
                "width": self.width, "amplitude": self.amplitude}

    @classmethod
    def from_dict(cls, doc: dict) -> "LeadResonance":
        return cls(intercept=float(doc["intercept"]), slope=float(doc["slope"]),
                   width=float(doc.get("width", DEFAULT_LINEWIDTH)),
                   amplitude=float(doc.get("amplitude", 1.0)))


@dataclass(frozen=True)
class LeadModel:
    resonances: tuple[LeadResonance, ...]

    @classmethod
    def from_list(cls, docs: list) -> "LeadModel":
        return cls(tuple(LeadResonance.from_dict(d) for d in docs))

    def to_list(self) -> list:
        return [r.to_dict() for r in self.resonances]


@dataclass(frozen=True)
class SimConfig:
    """Rendering configuration for all map types.

    `visibility` maps branch keys ("triplet:0", or "triplet:0:+1" for one
    Zeeman replica) to weights; unlisted branches render at weight 1.
    """

    eps_axis: AxisSpec
    delta_axis: AxisSpec
    linewidth: float = DEFAULT_LINEWIDTH
    visibility: dict = field(default_factory=dict)
    noise_sigma: float = 0.0
    rng_seed: int = 0
    scale: float = 1.0
    delta_offset: float = 0.0

    def __post_init__(self):
        if self.linewidth <= 0:
            raise ValueError("linewidth must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for key, weight in self.visibility.items():
            BranchLabel.from_key(key)
            if weight < 0:
                raise ValueError(f"visibility weight for {key} must be >= 0")

    def weight_for(self, label: BranchLabel) -> float:
        if label.key() in self.visibility:
            return float(self.visibility[label.key()])
        base = f"{label.sector}:{label.index}"
        return float(self.visibility.get(base, 1.0))

    def to_dict(self) -> dict:
        return {
            "eps_axis": {"start": self.eps_axis.start, "step": self.eps_axis.step,
                         "count": self.eps_axis.count},
            "delta_axis": {"start": self.delta_axis.start, "step": self.delta_axis.step,
                           "count": self.delta_axis.count},
            "linewidth": self.linewidth,
            "visibility": dict(self.visibility),
            "noise_sigma": self.noise_sigma,
            "rng_seed": self.rng_seed,
            "scale": self.scale,
            "delta_offset": self.delta_offset,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        return cls(
            eps_axis=AxisSpec.from_dict(doc["eps_axis"]),
            delta_axis=AxisSpec.from_dict(doc["delta_axis"]),
            linewidth=float(doc.get("linewidth", DEFAULT_LINEWIDTH)),
            visibility=dict(doc.get("visibility", {})),
            noise_sigma=float(doc.get("noise_sigma", 0.0)),
            rng_seed=int(doc.get("rng_seed", 0)),
            scale=float(doc.get("scale", 1.0)),
            delta_offset=float(doc.get("delta_offset", 0.0)),
        )


def _check_axes(cfg: SimConfig) -> None:
    if cfg.eps_axis.count < 1 or cfg.delta_axis.count < 1:
        raise ValueError("axes must contain at least one sample")


def _add_noise(data: np.ndarray, cfg: SimConfig) -> np.ndarray:
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(cfg.rng_seed)
        data = data + rng.normal(0.0, cfg.noise_sigma, size=data.shape)
    return data


def _branch_positions(params: ModelParams, cfg: SimConfig, eps) -> tuple[list, np.ndarray]:
    """(labels, delta positions) of every visible branch, positions (n_labels, n_eps)."""
    labels = branch_labels(params)
    energies = branch_energies(params, labels, eps)
    return labels, cfg.scale * energies + cfg.delta_offset


def render_daxs_image(params: ModelParams, cfg: SimConfig,
                      leads: LeadModel | None = None,
                      lead_voltage: float = 0.0) -> SpectralImage:
    """Intensity map over (eps, delta): dot branches plus fixed lead lines."""
    _check_axes(cfg)
    eps = cfg.eps_axis.values()
    delta = cfg.delta_axis.values()
    labels, positions = _branch_positions(params, cfg, eps)

    data = np.zeros((delta.size, eps.size))
    for label, centers in zip(labels, positions):
        weight = cfg.weight_for(label)
        if weight == 0.0:
            continue
        u = 2.0 * (delta[:, None] - centers[None, :]) / cfg.linewidth
        data += weight / (1.0 + u * u)

    if leads is not None:
        for res in leads.resonances:
            data += lorentzian(delta, res.delta_at(lead_voltage), res.width,
                               res.amplitude)[:, None]

    data = _add_noise(data, cfg)
    return SpectralImage(
        x_axis=AxisDescriptor("eps", "GHz", cfg.eps_axis.start, cfg.eps_axis.step,
                              cfg.eps_axis.count),
        y_axis=AxisDescriptor("delta", "GHz", cfg.delta_axis.start, cfg.delta_axis.step,
                              cfg.delta_axis.count),
        data=data,
    )


def render_reservoir_sweep(params: ModelParams, leads: LeadModel, eps_fixed: float,
                           voltage_axis: AxisSpec, cfg: SimConfig) -> SpectralImage:
    """Map over (reservoir voltage, delta) at fixed eps.

    Compensation is assumed ideal, so dot lines sit at constant delta across
    the sweep while lead lines follow their configured slopes.
    """
    _check_axes(cfg)
    if not math.isfinite(eps_fixed):
        raise ValueError("eps_fixed must be finite")
    voltages = voltage_axis.values()
    delta = cfg.delta_axis.values()
    labels, positions = _branch_positions(params, cfg, np.array([eps_fixed]))

    column = np.zeros(delta.size)
    for label, centers in zip(labels, positions):
        weight = cfg.weight_for(label)
        if weight:
            column += lorentzian(delta, float(centers[0]), cfg.linewidth, weight)
    data = np.repeat(column[:, None], voltages.size, axis=1)

    for res in leads.resonances:
        u = 2.0 * (delta[:, None] - res.delta_at(voltages)[None, :]) / res.width
        data += res.amplitude / (1.0 + u * u)

    data = _add_noise(data, cfg)
    return SpectralImage(
        x_axis=AxisDescriptor("reservoir_voltage", "mV", voltage_axis.start,
                              voltage_axis.step, voltage_axis.count),
        y_axis=AxisDescriptor("delta", "GHz", cfg.delta_axis.start, cfg.delta_axis.step,
                              cfg.delta_axis.count),
        data=data,
    )


def render_magneto_map(params: ModelParams, ez_axis: AxisSpec, eps_fixed: float,
                       cfg: SimConfig) -> SpectralImage:
    """Map over (Zeeman energy, delta) at fixed eps.

    Each triplet branch renders at its zero-field delta and at +-E_Z around
    it; singlet branches stay fixed across the field axis.
    """
    _check_axes(cfg)
    if not math.isfinite(eps_fixed):
        raise ValueError("eps_fixed must be finite")
    ez = ez_axis.values()
    if np.any(ez < 0):
        raise ValueError("Zeeman axis must be >= 0")
    delta = cfg.delta_axis.values()

    base = ModelParams(params.couplings, params.offsets, zeeman=0.0)
    labels = branch_labels(base)
    centers = cfg.scale * branch_energies(base, labels, np.array([eps_fixed]))[:, 0] \
        + cfg.delta_offset

    data = np.zeros((delta.size, ez.size))
    split = ez > 0  # a zero-field column renders one collapsed triplet line
    for label, center in zip(labels, centers):
        weight = cfg.weight_for(label)
        if weight == 0.0:
            continue
        if label.sector == "triplet":
            data += lorentzian(delta, center, cfg.linewidth, weight)[:, None] * ~split
            for sz in (-1, 0, 1):
                u = 2.0 * (delta[:, None] - (center + sz * cfg.scale * ez)[None, :]) \
                    / cfg.linewidth
                data += weight / (1.0 + u * u) * split
        else:
            data += lorentzian(delta, center, cfg.linewidth, weight)[:, None]

    data = _add_noise(data, cfg)
    return SpectralImage(
        x_axis=AxisDescriptor("zeeman", "GHz", ez_axis.start, ez_axis.step, ez_axis.count),
        y_axis=AxisDescriptor("delta", "GHz", cfg.delta_axis.start, cfg.delta_axis.step,
                              cfg.delta_axis.count),
        data=data,
    )
