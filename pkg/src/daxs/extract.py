"""Peak-track extraction: seeded multi-Lorentzian column fits over an image.

Operator-drawn (or file-supplied) seed polylines give per-column center
guesses; every covered column is fit jointly with one Lorentzian per seed
plus an optional constant baseline, and the fitted centers are threaded into
per-track point lists. Points are dropped, never reassigned, when the fit
did not converge, a width stuck at its bound, a center jumped too far from
its seed, or two peaks merged near an anticrossing.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .hamiltonian import BranchLabel
from .image import SpectralImage
from .simulate import DEFAULT_LINEWIDTH
from .smoothing import smooth_array

SEEDS_FORMAT = "daxs-seeds"
SEEDS_VERSION = 1


@dataclass(frozen=True)
class SeedCurve:
    """One hand-drawn polyline: x strictly increasing, >= 2 vertices."""

    track_id: str
    points: np.ndarray  # (n, 2) columns (x, delta)
    branch: BranchLabel | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError(f"curve {self.track_id!r} needs >= 2 (x, delta) points")
        if not np.all(np.isfinite(pts)):
            raise ValueError(f"curve {self.track_id!r} has non-finite vertices")
        if not np.all(np.diff(pts[:, 0]) > 0):
            raise ValueError(f"curve {self.track_id!r} x values must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def covers(self, x: float) -> bool:
        return self.points[0, 0] <= x <= self.points[-1, 0]

    def delta_at(self, x: float) -> float:
        return float(np.interp(x, self.points[:, 0], self.points[:, 1]))


@dataclass(frozen=True)
class SeedCurves:
    curves: tuple[SeedCurve, ...]

    def __post_init__(self):
        ids = [c.track_id for c in self.curves]
        if len(set(ids)) != len(ids):
            raise ValueError("track_ids must be unique")

    def __iter__(self):
        return iter(self.curves)

    def __len__(self):
        return len(self.curves)

    def to_dict(self) -> dict:
        curves = []
        for c in self.curves:
            branch = None
            if c.branch is not None:
                branch = {"sector": c.branch.sector, "index": c.branch.index,
                          "spin_z": c.branch.spin_z}
            curves.append({"track_id": c.track_id, "branch": branch,
                           "points": c.points.tolist()})
        return {"format": SEEDS_FORMAT, "version": SEEDS_VERSION, "curves": curves}

    @classmethod
    def from_dict(cls, doc: dict) -> "SeedCurves":
        if doc.get("format") != SEEDS_FORMAT:
            raise ValueError(f"not a {SEEDS_FORMAT} document")
        if doc.get("version") != SEEDS_VERSION:
            raise ValueError(f"unsupported {SEEDS_FORMAT} version {doc.get('version')!r}")
        curves = []
        for entry in doc["curves"]:
            branch = None
            if entry.get("branch") is not None:
                b = entry["branch"]
                branch = BranchLabel(b["sector"], int(b["index"]), int(b.get("spin_z", 0)))
            curves.append(SeedCurve(track_id=str(entry["track_id"]),
                                    points=np.array(entry["points"], dtype=float),
                                    branch=branch))
        return cls(tuple(curves))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SeedCurves":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "SeedCurves":
        return cls.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


@dataclass(frozen=True)
class TrackPoint:
    x: float
    delta: float
    delta_sigma: float
    amplitude: float
    width: float


@dataclass
class PeakTracks:
    """Fitted Lorentzian centers per track, in x order, plus drop diagnostics.

    `bindings` maps track ids to the branch labels their seed curves carried;
    it lives only in memory (the CSV format stores points alone).
    """

    points: dict[str, list[TrackPoint]] = field(default_factory=dict)
    omitted: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    bindings: dict[str, BranchLabel] = field(default_factory=dict)

    def track_ids(self) -> list[str]:
        return list(self.points)

    def __len__(self):
        return sum(len(pts) for pts in self.points.values())

    def arrays(self, track_id: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, delta, delta_sigma) arrays for one track."""
        pts = self.points[track_id]
        return (np.array([p.x for p in pts]), np.array([p.delta for p in pts]),
                np.array([p.delta_sigma for p in pts]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["track_id", "x", "delta", "delta_sigma", "amplitude", "width"])
        for track_id in self.points:
            for p in self.points[track_id]:
                writer.writerow([track_id, repr(p.x), repr(p.delta), repr(p.delta_sigma),
                                 repr(p.amplitude), repr(p.width)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PeakTracks":
        reader = csv.DictReader(io.StringIO(text))
        tracks = cls()
        for row in reader:
            tracks.points.setdefault(row["track_id"], []).append(TrackPoint(
                x=float(row["x"]), delta=float(row["delta"]),
                delta_sigma=float(row["delta_sigma"]),
                amplitude=float(row["amplitude"]), width=float(row["width"]),
            ))
        for pts in tracks.points.values():
            pts.sort(key=lambda p: p.x)
        return tracks

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path) -> "PeakTracks":
        return cls.from_csv(Path(path).read_text())


@dataclass(frozen=True)
class PeakFit:
    """One fitted Lorentzian from a column fit."""

    center: float
    width: float
    amplitude: float
    center_stderr: float
    converged: bool
    width_clamped: bool


def _lorentz_model(delta: np.ndarray, params: np.ndarray, n_peaks: int,
                   fit_baseline: bool) -> np.ndarray:
    offset = params[0] if fit_baseline else 0.0
    out = np.full(delta.shape, offset)
    base = 1 if fit_baseline else 0
    for k in range(n_peaks):
        amp, center, width = params[base + 3 * k: base + 3 * k + 3]
        u = 2.0 * (delta - center) / width
        out += amp / (1.0 + u * u)
    return out


def _lorentz_jacobian(delta: np.ndarray, params: np.ndarray, n_peaks: int,
                      fit_baseline: bool) -> np.ndarray:
    base = 1 if fit_baseline else 0
    jac = np.empty((delta.size, base + 3 * n_peaks))
    if fit_baseline:
        jac[:, 0] = 1.0
    for k in range(n_peaks):
        amp, center, width = params[base + 3 * k: base + 3 * k + 3]
        u = 2.0 * (delta - center) / width
        denom = (1.0 + u * u) ** 2
        jac[:, base + 3 * k] = 1.0 / (1.0 + u * u)
        jac[:, base + 3 * k + 1] = 4.0 * amp * u / (width * denom)
        jac[:, base + 3 * k + 2] = 2.0 * amp * u * u / (width * denom)
    return jac


def fit_column_peaks(delta: np.ndarray, intensity: np.ndarray, seeds,
                     width_bounds: tuple[float, float],
                     init_width: float | None = None,
                     fit_baseline: bool = True,
                     baseline: float = 0.0,
                     max_nfev: int = 2000) -> list[PeakFit]:
    """Joint bounded fit of one Lorentzian per seed to a single column.

    Returns one :class:`PeakFit` per seed, in seed order. Non-convergence is
    reported through the flag, not raised; a seed outside the delta axis is
    an input error.
    """
    delta = np.asarray(delta, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    seeds = [float(s) for s in seeds]
    if not seeds:
        raise ValueError("at least one seed is required")
    lo, hi = width_bounds
    if not (0 < lo < hi):
        raise ValueError(f"width bounds must satisfy 0 < lo < hi, got {width_bounds}")
    dmin, dmax = float(delta.min()), float(delta.max())
    for s in seeds:
        if not (dmin <= s <= dmax):
            raise ValueError(f"seed {s} outside delta axis [{dmin}, {dmax}]")

    if init_width is None:
        init_width = math.sqrt(lo * hi)
    init_width = min(max(init_width, lo), hi)

    n = len(seeds)
    floor = float(np.median(intensity))
    p0, lower, upper = [], [], []
    if fit_baseline:
        p0, lower, upper = [floor], [-np.inf], [np.inf]
    span = max(np.ptp(intensity), 1e-12)
    for s in seeds:
        near = np.abs(delta - s) <= max(init_width, 2 * abs(delta[1] - delta[0]))
        amp0 = max(float(intensity[near].max() - floor) if near.any() else span, 1e-3 * span)
        p0 += [amp0, s, init_width]
        lower += [0.0, dmin, lo]
        upper += [np.inf, dmax, hi]

    residual_offset = 0.0 if fit_baseline else baseline

    def residuals(p):
        return _lorentz_model(delta, p, n, fit_baseline) + residual_offset - intensity

    def jacobian(p):
        return _lorentz_jacobian(delta, p, n, fit_baseline)

    result = least_squares(residuals, np.asarray(p0), jac=jacobian,
                           bounds=(lower, upper), max_nfev=max_nfev)

    # standard errors from the local quadratic model at the optimum
    m, npar = result.fun.size, result.x.size
    if m > npar:
        jtj = result.jac.T @ result.jac
        sigma2 = 2.0 * result.cost / (m - npar)
        try:
            cov = np.linalg.pinv(jtj) * sigma2
            stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        except np.linalg.LinAlgError:
            stderr = np.full(npar, np.inf)
    else:
        stderr = np.zeros(npar)

    fits = []
    base = 1 if fit_baseline else 0
    width_span = hi - lo
    for k in range(n):
        amp, center, width = result.x[base + 3 * k: base + 3 * k + 3]
        clamped = min(width - lo, hi - width) < 1e-9 * width_span
        fits.append(PeakFit(
            center=float(center), width=float(width), amplitude=float(amp),
            center_stderr=float(stderr[base + 3 * k + 1]),
            converged=bool(result.success), width_clamped=bool(clamped),
        ))
    return fits


@dataclass(frozen=True)
class ExtractionConfig:
    """Knobs for smoothing, column fits and track-threading guards."""

    sg_window: int = 11
    sg_order: int = 2
    smooth: bool = True
    linewidth: float = DEFAULT_LINEWIDTH
    width_bounds: tuple[float, float] | None = None  # default [linewidth/4, 4*linewidth]
    fit_baseline: bool = True
    max_center_shift: float | None = None            # default 3 * linewidth
    min_separation: float | None = None              # default linewidth / 2
    sigma_floor: float | None = None                 # default linewidth / 1000

    def __post_init__(self):
        if self.linewidth <= 0:
            raise ValueError("linewidth must be > 0")

    def effective_width_bounds(self) -> tuple[float, float]:
        if self.width_bounds is not None:
            return self.width_bounds
        return (self.linewidth / 4.0, 4.0 * self.linewidth)

    def effective_max_shift(self) -> float:
        return 3.0 * self.linewidth if self.max_center_shift is None else self.max_center_shift

    def effective_min_separation(self) -> float:
        return self.linewidth / 2.0 if self.min_separation is None else self.min_separation

    def effective_sigma_floor(self) -> float:
        # keeps inverse-variance weights bounded when a column fit reports a
        # degenerate center uncertainty
        return self.linewidth / 1000.0 if self.sigma_floor is None else self.sigma_floor

    def to_dict(self) -> dict:
        return {
            "sg_window": self.sg_window, "sg_order": self.sg_order, "smooth": self.smooth,
            "linewidth": self.linewidth,
            "width_bounds": list(self.width_bounds) if self.width_bounds else None,
            "fit_baseline": self.fit_baseline,
            "max_center_shift": self.max_center_shift,
            "min_separation": self.min_separation,
            "sigma_floor": self.sigma_floor,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExtractionConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in doc.items() if k in known}
        if kwargs.get("width_bounds") is not None:
            kwargs["width_bounds"] = tuple(kwargs["width_bounds"])
        return cls(**kwargs)


def extract_tracks(img: SpectralImage, seeds: SeedCurves,
                   cfg: ExtractionConfig | None = None) -> PeakTracks:
    """Smooth, fit every covered column, and thread centers into tracks."""
    cfg = cfg or ExtractionConfig()
    tracks = PeakTracks(points={c.track_id: [] for c in seeds},
                        omitted={c.track_id: 0 for c in seeds},
                        bindings={c.track_id: c.branch for c in seeds
                                  if c.branch is not None})
    if len(seeds) == 0:
        return tracks

    data = img.data
    if cfg.smooth:
        data = smooth_array(data, cfg.sg_window, cfg.sg_order)
    delta = img.y_axis.values()
    xs = img.x_axis.values()
    dmin, dmax = float(delta.min()), float(delta.max())
    bounds = cfg.effective_width_bounds()
    max_shift = cfg.effective_max_shift()
    min_sep = cfg.effective_min_separation()

    covered_any = {c.track_id: False for c in seeds}
    for ix, x in enumerate(xs):
        active, guesses = [], []
        for curve in seeds:
            if not curve.covers(x):
                continue
            covered_any[curve.track_id] = True
            guess = curve.delta_at(x)
            if dmin <= guess <= dmax:
                active.append(curve)
                guesses.append(guess)
            else:
                tracks.omitted[curve.track_id] += 1
        if not active:
            continue

        fits = fit_column_peaks(delta, data[:, ix], guesses, bounds,
                                init_width=cfg.linewidth,
                                fit_baseline=cfg.fit_baseline)

        keep = []
        for curve, guess, fit in zip(active, guesses, fits):
            ok = fit.converged and not fit.width_clamped \
                and abs(fit.center - guess) <= max_shift
            keep.append(ok)

        # near-anticrossing guards: drop pairs that merged or swapped order,
        # and any center that landed nearer to a neighbor's seed than its own
        # (a peak that slid onto the wrong ridge)
        centers = [f.center for f in fits]
        for i in range(len(fits)):
            for j in range(i + 1, len(fits)):
                merged = abs(centers[i] - centers[j]) < min_sep
                swapped = (centers[i] - centers[j]) * (guesses[i] - guesses[j]) < 0
                if merged or swapped:
                    keep[i] = keep[j] = False
        for i in range(len(fits)):
            own = abs(centers[i] - guesses[i])
            if any(abs(centers[i] - guesses[j]) < own
                   for j in range(len(fits)) if j != i):
                keep[i] = False

        for curve, fit, ok in zip(active, fits, keep):
            if not ok:
                tracks.omitted[curve.track_id] += 1
                continue
            tracks.points[curve.track_id].append(TrackPoint(
                x=float(x), delta=fit.center,
                delta_sigma=max(fit.center_stderr, cfg.effective_sigma_floor()),
                amplitude=fit.amplitude, width=fit.width,
            ))

    for curve in seeds:
        if not covered_any[curve.track_id]:
            tracks.warnings.append(
                f"seed curve {curve.track_id!r} covers no image columns")
        tracks.points[curve.track_id].sort(key=lambda p: p.x)
    return tracks
