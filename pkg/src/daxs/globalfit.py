"""Global nonlinear least-squares fit of Hamiltonian branches to peak tracks.

The fitting function is the concatenation of the model's eigenvalue curves,
one per bound track: each track point (x, delta, sigma) contributes the
weighted residual (delta - (s * E_branch(x) + delta_offset)) / sigma. Coupling
magnitudes are bounded at zero and their signs pinned to the selected sign
equivalence class; t42 can be tied to t32 since its anticrossing is not
directly visible.

Right-dot offsets are optimized as gaps (r21, r31 - r21, r41 - r31), each
bounded at zero, so the level ordering r21 <= r31 <= r41 holds throughout.
Freeing r31/r41 therefore frees the gap above the next level down; reported
values and standard errors are transformed back to absolute offsets.
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

from .extract import PeakTracks
from .hamiltonian import (
    COUPLING_NAMES,
    LevelOffsets,
    ModelParams,
    TunnelCouplings,
    branch_energy_curves,
    sign_class_representatives,
)

# optimizer coordinates, in packing order
_COORD_NAMES = list(COUPLING_NAMES) + ["l21", "r21", "g31", "g41", "zeeman", "s", "delta_offset"]
# user-facing parameter names (gaps reported as absolute offsets)
PARAM_NAMES = list(COUPLING_NAMES) + ["l21", "r21", "r31", "r41", "zeeman", "s", "delta_offset"]

FD_STEP = 1e-4  # GHz, central-difference step for the numeric Jacobian

# couplings whose sign-class comparison is not meaningful: t31 is obscured by
# neighboring anticrossings, t41 is below the linewidth, t42 is tied to t32
SIGN_COMPARE_EXCLUDED = ("t31", "t41", "t42")


def default_free_mask() -> dict[str, bool]:
    mask = {name: True for name in COUPLING_NAMES}
    mask.update({"l21": True, "r21": True, "r31": True, "r41": True, "zeeman": False})
    return mask


@dataclass(frozen=True)
class FitConfig:
    initial: ModelParams
    free: dict[str, bool] = field(default_factory=default_free_mask)
    sign_class: str = "a"
    tie_t42_to_t32: bool = True
    fit_scale: bool = True
    fit_delta_offset: bool = True
    scale_init: float = 1.0
    delta_offset_init: float = 0.0
    max_iterations: int = 200
    tolerance: float = 1e-10
    weighting: str = "inverse_variance"  # or "uniform"

    def __post_init__(self):
        if self.sign_class not in sign_class_representatives():
            raise ValueError(f"unknown sign class {self.sign_class!r}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.weighting not in ("inverse_variance", "uniform"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        mask = default_free_mask()
        bad = set(self.free) - set(mask)
        if bad:
            raise ValueError(f"unknown parameters in free mask: {sorted(bad)}")
        mask.update(self.free)
        object.__setattr__(self, "free", mask)
        if not (any(mask.values()) or self.fit_scale or self.fit_delta_offset):
            raise ValueError("at least one parameter must be free")

    def free_names(self) -> list[str]:
        names = [n for n in PARAM_NAMES if n not in ("s", "delta_offset")
                 and self.free.get(n, False)]
        if self.tie_t42_to_t32 and "t42" in names:
            names.remove("t42")
        if self.fit_scale:
            names.append("s")
        if self.fit_delta_offset:
            names.append("delta_offset")
        return names

    def to_dict(self) -> dict:
        return {
            "initial": self.initial.to_dict(),
            "free": dict(self.free),
            "sign_class": self.sign_class,
            "tie_t42_to_t32": self.tie_t42_to_t32,
            "fit_scale": self.fit_scale,
            "fit_delta_offset": self.fit_delta_offset,
            "scale_init": self.scale_init,
            "delta_offset_init": self.delta_offset_init,
            "max_iterations": self.max_iterations,
            "tolerance": self.tolerance,
            "weighting": self.weighting,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FitConfig":
        doc = dict(doc)
        doc["initial"] = ModelParams.from_dict(doc["initial"])
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})

    @classmethod
    def load(cls, path) -> "FitConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class FitResult:
    params: ModelParams
    scale: float
    delta_offset: float
    residual_rms: float                 # unweighted RMS of delta residuals, GHz
    stderr: dict[str, float]
    iterations: int
    converged: bool
    residuals: dict[str, np.ndarray]    # per-track delta - prediction, GHz
    sign_class: str
    cost: float                         # half weighted sum of squares at solution
    free_names: list[str]

    def coupling_magnitudes(self) -> dict[str, float]:
        return self.params.couplings.magnitudes()

    def to_dict(self) -> dict:
        doc = self.params.to_dict()
        doc.update({
            "s": self.scale,
            "delta_offset": self.delta_offset,
            "residual_rms": self.residual_rms,
            "stderr": {k: (v if math.isfinite(v) else None)
                       for k, v in self.stderr.items()},
            "converged": self.converged,
            "iterations": self.iterations,
            "sign_class": self.sign_class,
            "residuals": {k: np.asarray(v).tolist() for k, v in self.residuals.items()},
        })
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


class _TrackData:
    """Bound tracks flattened for residual evaluation."""

    def __init__(self, tracks: PeakTracks, weighting: str):
        bindings = tracks.bindings
        if not bindings:
            raise ValueError("no tracks are bound to branch labels")
        labels = list(bindings.values())
        if len(set(labels)) != len(labels):
            raise ValueError("each bound track must map to a distinct branch label")

        self.track_ids, self.labels = [], []
        xs, deltas, sigmas, slices = [], [], [], []
        start = 0
        for track_id, label in bindings.items():
            pts = tracks.points.get(track_id, [])
            if not pts:
                continue
            x, d, s = tracks.arrays(track_id)
            self.track_ids.append(track_id)
            self.labels.append(label)
            xs.append(x)
            deltas.append(d)
            sigmas.append(s)
            slices.append(slice(start, start + x.size))
            start += x.size
        if not xs:
            raise ValueError("bound tracks contain no points")

        self.x = np.concatenate(xs)
        self.delta = np.concatenate(deltas)
        sigma = np.concatenate(sigmas)
        if np.any(sigma <= 0):
            raise ValueError("track point uncertainties must be > 0")
        self.weight = 1.0 / sigma if weighting == "inverse_variance" else np.ones_like(sigma)
        self.slices = slices

        self.unique_x, self.x_index = np.unique(self.x, return_inverse=True)

    def predictions(self, params: ModelParams, scale: float, offset: float) -> np.ndarray:
        triplet, singlet = branch_energy_curves(params, self.unique_x)
        by_sector = {"triplet": triplet, "singlet": singlet}
        pred = np.empty_like(self.delta)
        for label, sl in zip(self.labels, self.slices):
            curves = by_sector[label.sector]
            if label.index >= curves.shape[1]:
                raise ValueError(f"branch {label.key()} out of range for current parameters")
            energy = curves[self.x_index[sl], label.index] + label.spin_z * params.zeeman
            pred[sl] = scale * energy + offset
        return pred


def _pack_initial(cfg: FitConfig) -> dict[str, float]:
    c, o = cfg.initial.couplings, cfg.initial.offsets
    coords = {name: c.magnitude(name) for name in COUPLING_NAMES}
    coords.update({
        "l21": o.l21, "r21": o.r21,
        "g31": o.r31 - o.r21, "g41": o.r41 - o.r31,
        "zeeman": cfg.initial.zeeman,
        "s": cfg.scale_init, "delta_offset": cfg.delta_offset_init,
    })
    return coords


def _free_coords(cfg: FitConfig) -> list[str]:
    free = []
    for name in _COORD_NAMES:
        if name == "g31":
            flag = cfg.free.get("r31", False)
        elif name == "g41":
            flag = cfg.free.get("r41", False)
        elif name == "s":
            flag = cfg.fit_scale
        elif name == "delta_offset":
            flag = cfg.fit_delta_offset
        elif name == "t42" and cfg.tie_t42_to_t32:
            flag = False
        else:
            flag = cfg.free.get(name, False)
        if flag:
            free.append(name)
    return free


def _unpack(coords: dict[str, float], cfg: FitConfig):
    """(ModelParams, scale, delta_offset) from optimizer coordinates.

    Magnitudes may poke infinitesimally below zero during finite differencing;
    signs come from the configured class.
    """
    signs = sign_class_representatives()[cfg.sign_class]
    mags = {name: float(coords[name]) for name in COUPLING_NAMES}
    if cfg.tie_t42_to_t32:
        mags["t42"] = mags["t32"]
    couplings = TunnelCouplings(**{n: signs[n] * m for n, m in mags.items()})
    r21 = float(coords["r21"])
    offsets = _RawOffsets(float(coords["l21"]), r21, r21 + float(coords["g31"]),
                          r21 + float(coords["g31"]) + float(coords["g41"]))
    params = ModelParams.__new__(ModelParams)
    object.__setattr__(params, "couplings", couplings)
    object.__setattr__(params, "offsets", offsets)
    object.__setattr__(params, "zeeman", float(coords["zeeman"]))
    return params, float(coords["s"]), float(coords["delta_offset"])


@dataclass(frozen=True)
class _RawOffsets:
    """Offsets container without ordering validation, for optimizer interiors."""

    l21: float
    r21: float
    r31: float
    r41: float


def _validated_params(params) -> ModelParams:
    offsets = LevelOffsets(l21=max(params.offsets.l21, 0.0), r21=max(params.offsets.r21, 0.0),
                           r31=max(params.offsets.r31, params.offsets.r21, 0.0),
                           r41=max(params.offsets.r41, params.offsets.r31, 0.0))
    return ModelParams(params.couplings, offsets, max(params.zeeman, 0.0))


def _objective_functions(data: _TrackData, cfg: FitConfig):
    base = _pack_initial(cfg)
    free = _free_coords(cfg)

    def residuals(theta: np.ndarray) -> np.ndarray:
        coords = dict(base)
        coords.update(zip(free, theta))
        params, scale, offset = _unpack(coords, cfg)
        return (data.delta - data.predictions(params, scale, offset)) * data.weight

    def jacobian(theta: np.ndarray) -> np.ndarray:
        jac = np.empty((data.delta.size, theta.size))
        for k in range(theta.size):
            up, dn = theta.copy(), theta.copy()
            up[k] += FD_STEP / 2
            dn[k] -= FD_STEP / 2
            jac[:, k] = (residuals(up) - residuals(dn)) / FD_STEP
        return jac

    lower = np.array([0.0 if n not in ("s", "delta_offset") else -np.inf for n in free])
    lower[[i for i, n in enumerate(free) if n == "s"]] = 0.0
    upper = np.full(len(free), np.inf)
    theta0 = np.array([base[n] for n in free])
    return residuals, jacobian, theta0, (lower, upper), free


def _standard_errors(jac: np.ndarray, res: np.ndarray, free: list[str],
                     coords: dict[str, float]) -> dict[str, float]:
    """Per-parameter standard errors; near-null directions get inf."""
    m, n = jac.shape
    sigma2 = float(res @ res) / (m - n) if m > n else 0.0
    u, s, vt = np.linalg.svd(jac, full_matrices=False)
    good = s > s[0] * 1e-10 if s.size else np.array([], dtype=bool)
    inv_s2 = np.where(good, 1.0 / np.where(good, s, 1.0) ** 2, 0.0)
    cov = (vt.T * inv_s2) @ vt * sigma2
    null_weight = (vt.T[:, ~good] ** 2).sum(axis=1) if (~good).any() else np.zeros(n)

    stderr_coord = {}
    for i, name in enumerate(free):
        stderr_coord[name] = math.inf if null_weight[i] > 1e-8 else math.sqrt(max(cov[i, i], 0.0))

    # gaps -> absolute offsets: r31 = r21 + g31, r41 = r21 + g31 + g41
    def combine(names):
        idx = [free.index(n) for n in names if n in free]
        if any(math.isinf(stderr_coord.get(n, 0.0)) for n in names if n in free):
            return math.inf
        if not idx:
            return 0.0
        sub = cov[np.ix_(idx, idx)]
        return math.sqrt(max(float(sub.sum()), 0.0))

    out = {}
    for name in PARAM_NAMES:
        if name == "r31":
            out[name] = combine(["r21", "g31"])
        elif name == "r41":
            out[name] = combine(["r21", "g31", "g41"])
        elif name in free:
            out[name] = stderr_coord[name]
        else:
            out[name] = 0.0
    return out


def fit_hamiltonian(tracks: PeakTracks, cfg: FitConfig) -> FitResult:
    """Weighted trust-region least squares of branch curves against tracks."""
    data = _TrackData(tracks, cfg.weighting)
    residuals, jacobian, theta0, bounds, free = _objective_functions(data, cfg)

    # gtol stays tight but finite: an exactly zero gradient (perfect fit, or a
    # parameter with no leverage) must stop the solver instead of feeding NaN
    # steps through the trust region
    result = least_squares(
        residuals, theta0, jac=jacobian, bounds=bounds, method="trf",
        ftol=cfg.tolerance, xtol=cfg.tolerance, gtol=1e-12,
        max_nfev=cfg.max_iterations,
    )

    coords = _pack_initial(cfg)
    coords.update(zip(free, result.x))
    raw_params, scale, offset = _unpack(coords, cfg)
    params = _validated_params(raw_params)

    pred = data.predictions(params, scale, offset)
    plain = data.delta - pred
    per_track = {tid: plain[sl].copy() for tid, sl in zip(data.track_ids, data.slices)}

    stderr = _standard_errors(result.jac, result.fun, free, coords)
    if cfg.tie_t42_to_t32:
        stderr["t42"] = stderr["t32"]

    report_free = cfg.free_names()
    return FitResult(
        params=params, scale=scale, delta_offset=offset,
        residual_rms=float(np.sqrt(np.mean(plain ** 2))),
        stderr=stderr,
        iterations=int(result.njev if result.njev is not None else result.nfev),
        converged=bool(result.success),
        residuals=per_track,
        sign_class=cfg.sign_class,
        cost=float(result.cost),
        free_names=report_free,
    )


def objective_gradient(tracks: PeakTracks, cfg: FitConfig,
                       theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(gradient of sum of squared residuals, theta) at a feasible point.

    Exposed for verification: the gradient is assembled as 2 J^T r from the
    same Jacobian the fitter uses.
    """
    data = _TrackData(tracks, cfg.weighting)
    residuals, jacobian, theta0, _, _ = _objective_functions(data, cfg)
    theta = np.asarray(theta, dtype=float) if theta is not None else theta0
    r = residuals(theta)
    return 2.0 * jacobian(theta).T @ r, theta


def objective_value(tracks: PeakTracks, cfg: FitConfig, theta: np.ndarray) -> float:
    data = _TrackData(tracks, cfg.weighting)
    residuals, _, _, _, _ = _objective_functions(data, cfg)
    r = residuals(np.asarray(theta, dtype=float))
    return float(r @ r)


@dataclass
class SignClassComparison:
    percent_diff: dict[str, float]      # reported couplings only
    abs_diff: dict[str, float]          # all couplings, |m_a - m_b|
    fits: dict[str, FitResult]

    def to_dict(self) -> dict:
        return {"percent_diff": self.percent_diff, "abs_diff": self.abs_diff}


def compare_sign_classes(tracks: PeakTracks, cfg: FitConfig) -> SignClassComparison:
    """Fit once per sign-class representative and compare coupling magnitudes.

    t31, t41 and t42 are excluded from the percent report: the first two are
    not reliably measurable and the third is tied, not fitted.
    """
    fits = {}
    for name in sign_class_representatives():
        fit_cfg = FitConfig(**{**cfg.to_dict(), "initial": cfg.initial,
                               "sign_class": name})
        fits[name] = fit_hamiltonian(tracks, fit_cfg)
    mags_a = fits["a"].coupling_magnitudes()
    mags_b = fits["b"].coupling_magnitudes()

    abs_diff, percent = {}, {}
    for name in COUPLING_NAMES:
        diff = float(abs(mags_a[name] - mags_b[name]))
        abs_diff[name] = diff
        if name in SIGN_COMPARE_EXCLUDED:
            continue
        mean = (mags_a[name] + mags_b[name]) / 2
        percent[name] = 0.0 if mean == 0 else float(100.0 * diff / mean)
    return SignClassComparison(percent_diff=percent, abs_diff=abs_diff, fits=fits)


def estimate_scan_variability(results: list[FitResult]) -> dict[str, tuple[float, float]]:
    """Per-coupling (mean, sample std) of fitted magnitudes over repeated scans."""
    if len(results) < 2:
        raise ValueError("need at least 2 fit results")
    masks = {tuple(r.free_names) for r in results}
    if len(masks) != 1:
        raise ValueError("fit results have mixed free-parameter masks")
    out = {}
    for name in COUPLING_NAMES:
        values = np.array([r.coupling_magnitudes()[name] for r in results])
        std = 0.0 if np.ptp(values) == 0 else float(values.std(ddof=1))
        out[name] = (float(values.mean()), std)
    return out


@dataclass(frozen=True)
class BudgetRow:
    coupling: str
    mean: float
    random_sigma: float
    systematic_sigma: float
    total_sigma: float
    reliable: bool


@dataclass
class ErrorBudget:
    rows: list[BudgetRow]

    def row(self, coupling: str) -> BudgetRow:
        for r in self.rows:
            if r.coupling == coupling:
                return r
        raise KeyError(coupling)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["coupling", "mean", "random_sigma", "systematic_sigma",
                         "total_sigma", "reliable"])
        for r in self.rows:
            writer.writerow([r.coupling, repr(r.mean), repr(r.random_sigma),
                             repr(r.systematic_sigma), repr(r.total_sigma),
                             str(r.reliable).lower()])
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())


def build_error_budget(random: dict[str, float], systematic: dict[str, float],
                       means: dict[str, float],
                       covered: dict[str, bool] | None = None) -> ErrorBudget:
    """Combine scan-to-scan and sign-class uncertainty in quadrature.

    `systematic` holds absolute magnitude differences between sign-class
    fits; half the difference enters the quadrature. A coupling is flagged
    unreliable when its total uncertainty exceeds half its mean or its
    anticrossing was never covered by track data.
    """
    names = sorted(set(random) | set(systematic))
    rows = []
    for name in names:
        rand = float(random.get(name, 0.0))
        sysd = float(systematic.get(name, 0.0))
        if rand < 0 or sysd < 0:
            raise ValueError(f"negative uncertainty input for {name}")
        sys_sigma = sysd / 2.0
        total = math.hypot(rand, sys_sigma)
        mean = float(means.get(name, 0.0))
        is_covered = True if covered is None else bool(covered.get(name, False))
        reliable = is_covered and (mean > 0) and (total / mean <= 0.5)
        rows.append(BudgetRow(coupling=name, mean=mean, random_sigma=rand,
                              systematic_sigma=sys_sigma, total_sigma=total,
                              reliable=reliable))
    return ErrorBudget(rows=rows)


def anticrossing_positions(params: ModelParams) -> dict[str, float]:
    """Detuning of each coupling's diabatic crossing: eps = r_i - l_j."""
    o = params.offsets
    left = {"1": 0.0, "2": o.l21}
    right = {"1": 0.0, "2": o.r21, "3": o.r31, "4": o.r41}
    return {f"t{i}{j}": right[i] - left[j] for i in right for j in left}


def anticrossing_coverage(tracks: PeakTracks, params: ModelParams,
                          margin: float = 0.0) -> dict[str, bool]:
    """Whether any bound same-sector track spans each coupling's anticrossing."""
    positions = anticrossing_positions(params)
    sector_of = {name: ("triplet" if name in ("t21", "t22", "t41", "t42") else "singlet")
                 for name in COUPLING_NAMES}
    spans = {}
    for track_id, label in tracks.bindings.items():
        pts = tracks.points.get(track_id, [])
        if pts:
            xs = [p.x for p in pts]
            spans.setdefault(label.sector, []).append((min(xs), max(xs)))
    return {
        name: any(lo - margin <= positions[name] <= hi + margin
                  for lo, hi in spans.get(sector_of[name], []))
        for name in COUPLING_NAMES
    }
