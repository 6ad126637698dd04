import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from daxs.hamiltonian import (
    COUPLING_NAMES,
    SINGLET_COUPLINGS,
    TRIPLET_COUPLINGS,
    BranchLabel,
    LevelOffsets,
    ModelParams,
    TunnelCouplings,
    branch_energies,
    branch_energy_curves,
    build_hamiltonian,
    build_singlet_block,
    build_triplet_block,
    eigen_branches,
    raw_eigenvalues,
    sign_class_representatives,
)

ZERO_COUPLING = ModelParams(TunnelCouplings(),
                            LevelOffsets(l21=10, r21=5, r31=15, r41=20))


def random_params(rng, max_coupling=20.0) -> ModelParams:
    c = TunnelCouplings(**{n: rng.uniform(0.5, max_coupling) for n in COUPLING_NAMES})
    r = np.sort(rng.uniform(0, 50, 3))
    return ModelParams(c, LevelOffsets(l21=rng.uniform(0, 50), r21=r[0], r31=r[1], r41=r[2]))


class TestBlocks:
    def test_triplet_diagonal_zero_couplings(self):
        h = build_triplet_block(ZERO_COUPLING, 0.0)
        assert np.allclose(h, np.diag([10, 10, 0, 0, 20, 20, 5, 5]))

    def test_triplet_t21_entry_positions(self):
        params = ModelParams(TunnelCouplings(t21=4),
                             LevelOffsets(l21=10, r21=5, r31=15, r41=20))
        h = build_triplet_block(params, 2 * 5.0)
        off = h - np.diag(np.diag(h))
        expected = np.zeros((8, 8))
        expected[2, 6] = expected[6, 2] = 4.0  # L1V-R2V
        expected[3, 7] = expected[7, 3] = 4.0  # L1G-R2G
        assert np.array_equal(off, expected)

    def test_singlet_diagonal_zero_couplings(self):
        h = build_singlet_block(ZERO_COUPLING, 0.0)
        assert np.allclose(h, np.diag([10, 10, 0, 0, 15, 15, 0]))

    def test_singlet_t11_only_couples_l1v_r1v(self):
        params = ModelParams(TunnelCouplings(t11=3),
                             LevelOffsets(l21=10, r21=5, r31=15, r41=20))
        h = build_singlet_block(params, 1.7)
        off = h - np.diag(np.diag(h))
        expected = np.zeros((7, 7))
        expected[2, 6] = expected[6, 2] = 3.0
        assert np.array_equal(off, expected)

    def test_singlet_l2g_row_never_couples_to_r1v(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            h = build_singlet_block(random_params(rng), rng.uniform(-30, 30))
            assert h[1, 6] == 0.0 and h[6, 1] == 0.0

    def test_blocks_are_symmetric(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            params = random_params(rng)
            eps = rng.uniform(-40, 40)
            ht = build_triplet_block(params, eps)
            hs = build_singlet_block(params, eps)
            assert np.array_equal(ht, ht.T)
            assert np.array_equal(hs, hs.T)

    def test_full_hamiltonian_is_block_diagonal(self):
        rng = np.random.default_rng(2)
        params = random_params(rng)
        h = build_hamiltonian(params, 3.0)
        assert h.shape == (15, 15)
        assert np.array_equal(h[:8, 8:], np.zeros((8, 7)))

    def test_non_finite_eps_rejected(self):
        with pytest.raises(ValueError):
            build_triplet_block(ZERO_COUPLING, float("nan"))
        with pytest.raises(ValueError):
            build_singlet_block(ZERO_COUPLING, float("inf"))


class TestEigenBranches:
    def test_zero_coupling_raw_multiset(self):
        values = raw_eigenvalues(ZERO_COUPLING, 0.0)
        expected = sorted([0] * 5 + [5] * 2 + [10] * 4 + [15] * 2 + [20] * 2)
        assert np.allclose(sorted(values), expected, atol=1e-12)

    def test_two_level_gap_at_degeneracy(self):
        # isolated crossing: gap between the anticrossing pair is exactly 2|t|
        params = ModelParams(TunnelCouplings(t21=4),
                             LevelOffsets(l21=30, r21=5, r31=30, r41=30))
        branches = dict(eigen_branches(params, 5.0))
        gap = (branches[BranchLabel("triplet", 1)]
               - branches[BranchLabel("triplet", 0)])
        assert gap == pytest.approx(8.0, abs=1e-9)

    def test_zeeman_replicates_triplets_only(self):
        params = ModelParams(ZERO_COUPLING.couplings, ZERO_COUPLING.offsets, zeeman=3.0)
        branches = dict(eigen_branches(params, 2.0))
        base = dict(eigen_branches(ZERO_COUPLING, 2.0))
        for (label, energy) in base.items():
            if label.sector == "triplet":
                for sz in (-1, 0, 1):
                    shifted = branches[BranchLabel("triplet", label.index, sz)]
                    assert shifted == pytest.approx(energy + 3.0 * sz, abs=1e-12)
            else:
                assert branches[label] == pytest.approx(energy, abs=1e-12)

    def test_branch_counts(self):
        assert len(eigen_branches(ZERO_COUPLING, 0.0)) == 8  # collapsed singlets
        rng = np.random.default_rng(3)
        params = random_params(rng)
        assert len(eigen_branches(params, 0.0)) == 11
        with_field = ModelParams(params.couplings, params.offsets, zeeman=1.0)
        assert len(eigen_branches(with_field, 0.0)) == 19

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        params = random_params(rng)
        assert eigen_branches(params, 1.23) == eigen_branches(params, 1.23)

    def test_branch_energies_matches_eigen_branches(self):
        rng = np.random.default_rng(5)
        params = random_params(rng)
        labels = [BranchLabel("triplet", 2), BranchLabel("singlet", 4)]
        curves = branch_energies(params, labels, np.array([-3.0, 7.0]))
        for j, eps in enumerate((-3.0, 7.0)):
            branches = dict(eigen_branches(params, eps))
            for i, label in enumerate(labels):
                assert curves[i, j] == pytest.approx(branches[label], abs=1e-12)

    def test_valley_duplication_even_multiplicity(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            params = random_params(rng)
            triplet = np.linalg.eigvalsh(build_triplet_block(params, rng.uniform(-20, 20)))
            # two identical valley copies: eigenvalues pair up exactly
            assert np.allclose(triplet[::2], triplet[1::2], atol=1e-9)

    def test_basis_permutation_preserves_spectrum(self):
        rng = np.random.default_rng(7)
        for builder, dim in ((build_triplet_block, 8), (build_singlet_block, 7)):
            params = random_params(rng)
            h = builder(params, rng.uniform(-20, 20))
            perm = rng.permutation(dim)
            shuffled = h[np.ix_(perm, perm)]
            assert np.allclose(np.linalg.eigvalsh(shuffled), np.linalg.eigvalsh(h),
                               atol=1e-9)


class TestSignClasses:
    def test_representatives(self):
        reps = sign_class_representatives()
        assert set(reps) == {"a", "b"}
        assert all(s == 1 for s in reps["a"].values())
        negatives = [n for n, s in reps["b"].items() if s == -1]
        assert len(negatives) == 2
        assert len(set(negatives) & set(TRIPLET_COUPLINGS)) == 1
        assert len(set(negatives) & set(SINGLET_COUPLINGS)) == 1

    def test_even_flip_preserves_spectrum(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            params = random_params(rng)
            eps = rng.uniform(-30, 30)
            base = raw_eigenvalues(params, eps)
            flipped = params.couplings.with_signs({"t21": -1, "t22": -1})
            other = raw_eigenvalues(ModelParams(flipped, params.offsets), eps)
            assert np.max(np.abs(base - other)) < 1e-9

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.data())
    def test_even_flip_property(self, seed, data):
        rng = np.random.default_rng(seed)
        params = random_params(rng)
        triplet_flips = data.draw(st.sampled_from([0, 2, 4]))
        singlet_flips = data.draw(st.sampled_from([0, 2, 4]))
        signs = {}
        signs.update({n: -1 for n in rng.choice(TRIPLET_COUPLINGS, triplet_flips,
                                                replace=False)})
        signs.update({n: -1 for n in rng.choice(SINGLET_COUPLINGS, singlet_flips,
                                                replace=False)})
        eps = rng.uniform(-40, 40)
        base = raw_eigenvalues(params, eps)
        other = raw_eigenvalues(
            ModelParams(params.couplings.with_signs(signs), params.offsets), eps)
        assert np.max(np.abs(base - other)) < 1e-9


class TestContinuityAndAsymptotics:
    def test_eigenvalue_lipschitz_bound(self):
        rng = np.random.default_rng(8)
        params = random_params(rng)
        h = 1e-4
        for eps in np.linspace(-30, 30, 13):
            a, _ = branch_energy_curves(params, np.array([eps]))
            b, _ = branch_energy_curves(params, np.array([eps + h]))
            assert np.max(np.abs(b - a)) <= (0.5 + 1e-6) * h + 1e-12

    def test_asymptotic_slopes(self):
        rng = np.random.default_rng(9)
        params = random_params(rng, max_coupling=10.0)
        scale = 100 * max(20.0, params.offsets.r41)
        for sign in (-1, 1):
            eps0 = sign * scale
            t0, s0 = branch_energy_curves(params, np.array([eps0]))
            t1, s1 = branch_energy_curves(params, np.array([eps0 + 1.0]))
            slopes = np.concatenate([(t1 - t0)[0], (s1 - s0)[0]])
            assert np.all(np.abs(np.abs(slopes) - 0.5) < 0.01 * 0.5)


class TestTypesAndSerialization:
    def test_couplings_validation(self):
        with pytest.raises(ValueError):
            TunnelCouplings(t11=float("nan"))
        with pytest.raises(ValueError):
            TunnelCouplings().with_signs({"t99": 1})
        with pytest.raises(ValueError):
            TunnelCouplings().with_signs({"t11": 0})

    def test_offsets_ordering(self):
        with pytest.raises(ValueError):
            LevelOffsets(l21=1, r21=10, r31=5, r41=20)
        with pytest.raises(ValueError):
            LevelOffsets(l21=-1)

    def test_zeeman_validation(self):
        with pytest.raises(ValueError):
            ModelParams(zeeman=-1.0)

    def test_branch_label_validation(self):
        with pytest.raises(ValueError):
            BranchLabel("sextet", 0)
        with pytest.raises(ValueError):
            BranchLabel("singlet", 0, spin_z=1)
        assert BranchLabel.from_key("triplet:2:+1") == BranchLabel("triplet", 2, 1)
        assert BranchLabel.from_key("singlet:3") == BranchLabel("singlet", 3)

    def test_model_params_json_round_trip(self):
        params = ModelParams(
            TunnelCouplings(t11=-3.25, t12=6.5, t21=4.0, t22=8.0,
                            t31=5.0, t32=12.0, t41=-2.5, t42=12.0),
            LevelOffsets(l21=30, r21=8, r31=25, r41=45), zeeman=1.5)
        restored = ModelParams.from_json(params.to_json())
        assert restored == params
        assert restored.couplings.sign("t11") == -1
        assert restored.couplings.magnitude("t11") == 3.25
