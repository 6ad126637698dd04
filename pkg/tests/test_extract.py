import numpy as np
import pytest

from daxs.extract import (
    ExtractionConfig,
    PeakTracks,
    SeedCurve,
    SeedCurves,
    TrackPoint,
    extract_tracks,
    fit_column_peaks,
)
from daxs.hamiltonian import BranchLabel, LevelOffsets, ModelParams, TunnelCouplings, branch_energies
from daxs.image import AxisSpec, SpectralImage
from daxs.simulate import SimConfig, lorentzian, render_daxs_image

DELTA = np.arange(-20.0, 20.0, 0.1)
WIDTH_BOUNDS = (0.5, 8.0)


def single_branch_image(scale=1.0, offset=0.0, noise=0.0,
                        delta_axis=AxisSpec(-20.0, 0.1, 401)):
    params = ModelParams(TunnelCouplings(t21=4.0),
                         LevelOffsets(l21=30, r21=5, r31=30, r41=30))
    weights = {f"triplet:{i}": 0.0 for i in range(1, 4)} | \
        {f"singlet:{i}": 0.0 for i in range(4)}
    cfg = SimConfig(eps_axis=AxisSpec(-10.0, 0.5, 41), delta_axis=delta_axis,
                    linewidth=2.0, visibility=weights, noise_sigma=noise,
                    rng_seed=5, scale=scale, delta_offset=offset)
    return params, cfg, render_daxs_image(params, cfg)


class TestFitColumnPeaks:
    def test_single_lorentzian_center_recovery(self):
        truth = 3.123456
        column = lorentzian(DELTA, truth, 2.0, 1.0)
        fits = fit_column_peaks(DELTA, column, [truth + 1.0], WIDTH_BOUNDS)
        assert len(fits) == 1
        assert fits[0].converged and not fits[0].width_clamped
        assert fits[0].center == pytest.approx(truth, abs=1e-6)

    def test_two_peaks_ten_linewidths_apart(self):
        c1, c2 = -11.2, 8.8  # separation 10 * fwhm
        column = lorentzian(DELTA, c1, 2.0, 1.0) + lorentzian(DELTA, c2, 2.0, 0.7)
        fits = fit_column_peaks(DELTA, column, [c1 + 0.5, c2 - 0.5], WIDTH_BOUNDS)
        assert fits[0].center == pytest.approx(c1, abs=1e-3)
        assert fits[1].center == pytest.approx(c2, abs=1e-3)
        # results follow seed order
        assert fits[0].center < fits[1].center

    def test_width_outside_bounds_clamps_and_flags(self):
        column = lorentzian(DELTA, 0.0, 20.0, 1.0)  # much wider than the ceiling
        fits = fit_column_peaks(DELTA, column, [0.0], (0.5, 4.0))
        assert fits[0].width == pytest.approx(4.0, abs=1e-6)
        assert fits[0].width_clamped

    def test_seed_outside_axis_rejected(self):
        column = np.zeros_like(DELTA)
        with pytest.raises(ValueError):
            fit_column_peaks(DELTA, column, [100.0], WIDTH_BOUNDS)
        with pytest.raises(ValueError):
            fit_column_peaks(DELTA, column, [], WIDTH_BOUNDS)
        with pytest.raises(ValueError):
            fit_column_peaks(DELTA, column, [0.0], (0.0, 4.0))

    def test_center_stderr_positive_with_noise(self):
        rng = np.random.default_rng(0)
        column = lorentzian(DELTA, 1.0, 2.0, 1.0) + rng.normal(0, 0.05, DELTA.size)
        fits = fit_column_peaks(DELTA, column, [1.0], WIDTH_BOUNDS)
        assert fits[0].center_stderr > 0


class TestSeedCurves:
    def test_validation(self):
        with pytest.raises(ValueError):
            SeedCurve("a", np.array([[0.0, 1.0]]))  # single point
        with pytest.raises(ValueError):
            SeedCurve("a", np.array([[0.0, 1.0], [0.0, 2.0]]))  # x not increasing
        with pytest.raises(ValueError):
            SeedCurves((SeedCurve("a", np.array([[0, 1], [1, 2]])),
                        SeedCurve("a", np.array([[0, 1], [1, 2]]))))

    def test_json_round_trip(self):
        curves = SeedCurves((
            SeedCurve("low", np.array([[0.0, 1.5], [2.0, 1.75], [5.0, 2.0]]),
                      BranchLabel("triplet", 0)),
            SeedCurve("free", np.array([[1.0, -3.0], [4.0, -2.0]])),
        ))
        doc = curves.to_dict()
        assert doc["format"] == "daxs-seeds" and doc["version"] == 1
        restored = SeedCurves.from_json(curves.to_json())
        assert restored.curves[0].branch == BranchLabel("triplet", 0)
        assert restored.curves[1].branch is None
        assert np.array_equal(restored.curves[0].points, curves.curves[0].points)

    def test_linear_interpolation(self):
        curve = SeedCurve("a", np.array([[0.0, 0.0], [10.0, 5.0]]))
        assert curve.delta_at(4.0) == pytest.approx(2.0)
        assert curve.covers(0.0) and curve.covers(10.0) and not curve.covers(10.5)


class TestExtractTracks:
    def test_single_branch_track_accuracy(self):
        params, cfg, img = single_branch_image(scale=1.02, offset=0.8)
        eps = cfg.eps_axis.values()
        truth = 1.02 * branch_energies(params, [BranchLabel("triplet", 0)], eps)[0] + 0.8
        sub = np.append(np.arange(0, eps.size, 6), eps.size - 1)
        seeds = SeedCurves((SeedCurve(
            "t0", np.column_stack([eps[sub], truth[sub] + 0.3]),
            BranchLabel("triplet", 0)),))
        tracks = extract_tracks(img, seeds, ExtractionConfig(smooth=False))
        xs, deltas, sigmas = tracks.arrays("t0")
        assert xs.size == eps.size
        errors = np.abs(deltas - truth[np.searchsorted(eps, xs)])
        assert np.max(errors) < 0.05 * cfg.linewidth
        assert np.all(sigmas > 0)
        assert tracks.bindings["t0"] == BranchLabel("triplet", 0)

    def test_empty_seeds_empty_tracks(self):
        _, _, img = single_branch_image()
        tracks = extract_tracks(img, SeedCurves(()), ExtractionConfig())
        assert len(tracks) == 0 and tracks.track_ids() == []

    def test_curve_covering_no_columns_warns(self):
        _, _, img = single_branch_image()
        seeds = SeedCurves((SeedCurve(
            "outside", np.array([[100.0, 0.0], [110.0, 0.0]]),
            BranchLabel("triplet", 0)),))
        tracks = extract_tracks(img, seeds, ExtractionConfig())
        assert tracks.points["outside"] == []
        assert any("outside" in w for w in tracks.warnings)

    def test_merged_peaks_omitted_not_misassigned(self):
        # a small t21 pulls the two branches within the linewidth at the gap
        params = ModelParams(TunnelCouplings(t21=0.4),
                             LevelOffsets(l21=40, r21=5, r31=40, r41=40))
        weights = {"triplet:2": 0.0, "triplet:3": 0.0} | \
            {f"singlet:{i}": 0.0 for i in range(4)}
        cfg = SimConfig(eps_axis=AxisSpec(-5.0, 0.5, 41), delta_axis=AxisSpec(-15.0, 0.05, 501),
                        linewidth=2.0, visibility=weights)
        img = render_daxs_image(params, cfg)
        eps = cfg.eps_axis.values()
        labels = [BranchLabel("triplet", 0), BranchLabel("triplet", 1)]
        truth = branch_energies(params, labels, eps)
        seeds = SeedCurves(tuple(
            SeedCurve(f"b{k}", np.column_stack([eps, truth[k]]), labels[k])
            for k in range(2)))
        tracks = extract_tracks(img, seeds, ExtractionConfig(smooth=False))
        # near the minimum gap (2 GHz = linewidth) points merge and are dropped
        assert tracks.omitted["b0"] > 0 and tracks.omitted["b1"] > 0
        for k, tid in enumerate(("b0", "b1")):
            xs, deltas, _ = tracks.arrays(tid)
            errors = np.abs(deltas - truth[k][np.searchsorted(eps, xs)])
            assert np.max(errors) < 0.5  # surviving points are on their own branch

    def test_translation_equivariance(self):
        shift_pixels = 7
        params, cfg, img = single_branch_image()
        step = cfg.delta_axis.step
        eps = cfg.eps_axis.values()
        truth = branch_energies(params, [BranchLabel("triplet", 0)], eps)[0]
        seeds = SeedCurves((SeedCurve(
            "t0", np.column_stack([eps[::8], truth[::8]]), BranchLabel("triplet", 0)),))
        shifted_data = np.zeros_like(img.data)
        shifted_data[shift_pixels:, :] = img.data[:-shift_pixels, :]
        shifted_img = SpectralImage(img.x_axis, img.y_axis, shifted_data)
        shifted_seeds = SeedCurves((SeedCurve(
            "t0", np.column_stack([eps[::8], truth[::8] + shift_pixels * step]),
            BranchLabel("triplet", 0)),))
        cfg_x = ExtractionConfig(smooth=False)
        base = extract_tracks(img, seeds, cfg_x)
        moved = extract_tracks(shifted_img, shifted_seeds, cfg_x)
        xs0, d0, _ = base.arrays("t0")
        xs1, d1, _ = moved.arrays("t0")
        common = np.intersect1d(xs0, xs1)
        # ignore columns near the bottom edge where the shift truncated the peak
        common = common[np.searchsorted(eps, common) > 2]
        m0 = np.isin(xs0, common)
        m1 = np.isin(xs1, common)
        assert np.allclose(d1[m1] - d0[m0], shift_pixels * step, atol=1e-6)

    def test_seed_perturbation_robustness(self):
        params, cfg, img = single_branch_image()
        eps = cfg.eps_axis.values()
        truth = branch_energies(params, [BranchLabel("triplet", 0)], eps)[0]
        results = []
        for nudge in (0.0, 0.9):  # < linewidth / 2
            seeds = SeedCurves((SeedCurve(
                "t0", np.column_stack([eps[::8], truth[::8] + nudge]),
                BranchLabel("triplet", 0)),))
            tracks = extract_tracks(img, seeds, ExtractionConfig(smooth=False))
            results.append(tracks.arrays("t0")[1])
        assert np.max(np.abs(results[0] - results[1])) < 1e-3

    def test_no_fabrication_only_converged_points(self):
        params, cfg, img = single_branch_image(noise=0.05)
        eps = cfg.eps_axis.values()
        truth = branch_energies(params, [BranchLabel("triplet", 0)], eps)[0]
        sub = np.append(np.arange(0, eps.size, 6), eps.size - 1)
        seeds = SeedCurves((SeedCurve(
            "t0", np.column_stack([eps[sub], truth[sub]]), BranchLabel("triplet", 0)),))
        tracks = extract_tracks(img, seeds, ExtractionConfig())
        xs, _, _ = tracks.arrays("t0")
        assert xs.size + tracks.omitted["t0"] == eps.size


class TestPeakTracksCsv:
    def test_round_trip(self):
        tracks = PeakTracks()
        tracks.points["a"] = [TrackPoint(0.0, 1.5, 0.01, 2.0, 1.9),
                              TrackPoint(1.0, 1.6, 0.02, 2.1, 2.0)]
        tracks.points["b"] = [TrackPoint(0.0, -3.0, 0.05, 0.5, 2.5)]
        text = tracks.to_csv()
        assert text.splitlines()[0] == "track_id,x,delta,delta_sigma,amplitude,width"
        restored = PeakTracks.from_csv(text)
        assert restored.points["a"] == tracks.points["a"]
        assert restored.points["b"] == tracks.points["b"]
