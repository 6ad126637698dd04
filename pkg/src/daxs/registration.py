"""Scan registration and reservoir-line discrimination.

Repeated DAXS scans taken at different reservoir voltages are aligned on the
vertex of the ground anticrossing (fit as one hyperbola branch) and averaged
pixel-wise, which washes out lead resonances while dot lines reinforce.
Tracks from a reservoir sweep are classified as dot states or lead
resonances by their robust slope against the gate voltage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .extract import PeakTracks
from .image import SpectralImage


@dataclass(frozen=True)
class HyperbolaFit:
    """Lower anticrossing branch: delta(x) = c + m*(x - x0) - sqrt(a^2 (x - x0)^2 + t^2)."""

    center: float           # x0, detuning of the minimum gap
    vertex_delta: float     # delta at the vertex, c - t
    slope: float            # m, shared asymptote tilt
    asymptote: float        # a, half the slope difference between the asymptotes
    gap_half_width: float   # t, half the minimum gap
    residual_rms: float
    stderr: dict[str, float]
    converged: bool

    @property
    def asymptote_slopes(self) -> tuple[float, float]:
        return (self.slope - self.asymptote, self.slope + self.asymptote)

    def delta_at(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return (self.vertex_delta + self.gap_half_width + self.slope * u
                - np.sqrt(self.asymptote ** 2 * u ** 2 + self.gap_half_width ** 2))


def fit_anticrossing(x, delta, sigma=None) -> HyperbolaFit:
    """Least-squares hyperbola-branch fit to a lower-branch track segment.

    Needs >= 5 points spanning both sides of the minimum-gap region;
    collinear input is rejected since the curvature is then unidentifiable.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if x.size != delta.size or x.size < 5:
        raise ValueError("need at least 5 (x, delta) points")
    if sigma is None:
        weight = np.ones_like(delta)
    else:
        sigma = np.asarray(sigma, dtype=float)
        if np.any(sigma <= 0):
            raise ValueError("sigma values must be > 0")
        weight = 1.0 / sigma

    line = np.polyfit(x, delta, 1)
    line_res = delta - np.polyval(line, x)
    scale = max(float(np.ptp(delta)), 1e-12)
    if float(np.max(np.abs(line_res))) < 1e-12 * scale:
        raise ValueError("points are collinear; anticrossing curvature is unidentifiable")

    # the lower branch peaks at the vertex; start from the top point
    i0 = int(np.argmax(line_res))
    x0_guess = float(x[i0])
    t_guess = max(float(np.max(line_res) - np.min(line_res)), 1e-3 * scale)
    c_guess = float(delta[i0]) + t_guess

    def residuals(p):
        c, m, x0, a, t = p
        u = x - x0
        model = c + m * u - np.sqrt(a * a * u * u + t * t)
        return (model - delta) * weight

    p0 = np.array([c_guess, float(line[0]), x0_guess, 0.5, t_guess])
    lower = [-np.inf, -np.inf, -np.inf, 0.0, 1e-12]
    upper = [np.inf, np.inf, np.inf, np.inf, np.inf]
    result = least_squares(residuals, p0, bounds=(lower, upper), xtol=1e-14, ftol=1e-14)

    c, m, x0, a, t = result.x
    m_pts, n_par = x.size, 5
    if m_pts > n_par:
        sigma2 = 2.0 * result.cost / (m_pts - n_par)
        try:
            cov = np.linalg.pinv(result.jac.T @ result.jac) * sigma2
            err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        except np.linalg.LinAlgError:
            err = np.full(n_par, np.inf)
    else:
        err = np.zeros(n_par)

    res = result.fun / weight
    return HyperbolaFit(
        center=float(x0), vertex_delta=float(c - t), slope=float(m),
        asymptote=float(a), gap_half_width=float(t),
        residual_rms=float(np.sqrt(np.mean(res ** 2))),
        stderr=dict(zip(("c", "m", "center", "asymptote", "gap_half_width"), err)),
        converged=bool(result.success),
    )


def align_images(images: list[SpectralImage],
                 refs: list[tuple[int, int]]) -> list[SpectralImage]:
    """Translate images by whole pixels so all reference pixels coincide.

    The first image is the anchor. Pixels shifted in from outside are marked
    missing in the output masks, never zero-filled. All images must share
    both axis step sizes.
    """
    if len(images) != len(refs):
        raise ValueError("one reference pixel is required per image")
    if not images:
        raise ValueError("no images to align")
    anchor = images[0]
    for img in images[1:]:
        if (img.x_axis.step != anchor.x_axis.step
                or img.y_axis.step != anchor.y_axis.step):
            raise ValueError("images must share axis step sizes")

    tx, ty = refs[0]
    aligned = []
    for img, (ix, iy) in zip(images, refs):
        ny, nx = img.shape
        if not (0 <= ix < nx and 0 <= iy < ny):
            raise ValueError(f"reference pixel ({ix}, {iy}) outside image {img.shape}")
        dx, dy = tx - ix, ty - iy
        data = np.zeros_like(img.data)
        mask = np.zeros(img.shape, dtype=bool)
        src = img.valid_mask()
        x_lo, x_hi = max(0, dx), min(nx, nx + dx)
        y_lo, y_hi = max(0, dy), min(ny, ny + dy)
        if x_lo < x_hi and y_lo < y_hi:
            data[y_lo:y_hi, x_lo:x_hi] = img.data[y_lo - dy:y_hi - dy, x_lo - dx:x_hi - dx]
            mask[y_lo:y_hi, x_lo:x_hi] = src[y_lo - dy:y_hi - dy, x_lo - dx:x_hi - dx]
        data[~mask] = 0.0
        aligned.append(SpectralImage(anchor.x_axis, anchor.y_axis, data, mask=mask))
    return aligned


@dataclass
class AverageResult:
    image: SpectralImage     # per-pixel mean over contributing scans
    counts: np.ndarray       # contributing-scan count per pixel


def average_images(aligned: list[SpectralImage]) -> AverageResult:
    """Pixel-wise mean over non-missing values; requires a common overlap."""
    if len(aligned) < 2:
        raise ValueError("need at least 2 images to average")
    shape = aligned[0].shape
    for img in aligned[1:]:
        if img.shape != shape:
            raise ValueError("aligned images must share shape")
    counts = np.zeros(shape, dtype=int)
    total = np.zeros(shape)
    for img in aligned:
        valid = img.valid_mask()
        counts += valid
        total += np.where(valid, img.data, 0.0)
    if not np.any(counts == len(aligned)):
        raise ValueError("aligned images have zero common overlap")
    mean = np.divide(total, counts, out=np.zeros(shape), where=counts > 0)
    image = SpectralImage(aligned[0].x_axis, aligned[0].y_axis, mean, mask=counts > 0)
    return AverageResult(image=image, counts=counts)


@dataclass(frozen=True)
class LineClass:
    track_id: str
    slope: float    # GHz per mV, least-absolute-deviation estimate
    kind: str       # "dot" or "lead"


def _lad_slope(v: np.ndarray, delta: np.ndarray, iterations: int = 60) -> float:
    """Least-absolute-deviation line slope via iteratively reweighted LS."""
    design = np.column_stack([np.ones_like(v), v])
    beta, *_ = np.linalg.lstsq(design, delta, rcond=None)
    eps = 1e-10 * max(float(np.ptp(delta)), 1.0)
    for _ in range(iterations):
        r = np.abs(delta - design @ beta)
        w = 1.0 / np.maximum(r, eps)
        wd = design * w[:, None]
        beta_new, *_ = np.linalg.lstsq(wd.T @ design, wd.T @ delta, rcond=None)
        if np.allclose(beta_new, beta, rtol=0, atol=1e-12):
            beta = beta_new
            break
        beta = beta_new
    return float(beta[1])


def classify_lines(sweep_tracks: PeakTracks, slope_threshold: float) -> list[LineClass]:
    """Split reservoir-sweep tracks into dot states and lead resonances.

    Dot states stay put under compensation, so |slope| below the threshold
    means "dot". Tracks spanning fewer than 3 voltage points are skipped with
    a warning appended to the input's warning list.
    """
    if slope_threshold <= 0:
        raise ValueError("slope_threshold must be > 0")
    out = []
    for track_id in sweep_tracks.points:
        v, delta, _ = sweep_tracks.arrays(track_id)
        if np.unique(v).size < 3:
            sweep_tracks.warnings.append(
                f"track {track_id!r} spans fewer than 3 voltage points; skipped")
            continue
        slope = _lad_slope(v, delta)
        kind = "dot" if abs(slope) < slope_threshold else "lead"
        out.append(LineClass(track_id=track_id, slope=slope, kind=kind))
    return out
