import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uiobank.errors import (
    CertificateUnavailableError,
    DimensionError,
    InvalidMatrixError,
    SynthesisInfeasibleError,
)
from uiobank.linmath import (
    Tolerances,
    common_stein_candidate,
    is_detectable,
    is_schur,
    is_stabilizable,
    lqr_gain,
    observer_gain,
    pinv,
    rank_of,
    solve_dare,
    spectral_radius,
)
from uiobank.scenario import EXAMPLE1, EXAMPLE5

matrices = st.integers(1, 8).flatmap(
    lambda r: st.integers(1, 8).flatmap(
        lambda c: arrays(np.float64, (r, c), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False, width=64))
    )
)


class TestPinv:
    def test_column_vector(self):
        np.testing.assert_allclose(pinv([[1.0], [2.0]]), [[0.2, 0.4]], atol=1e-15)

    def test_identity(self):
        np.testing.assert_allclose(pinv(np.eye(3)), np.eye(3), atol=1e-15)

    def test_example1_cb(self):
        CB = np.array(EXAMPLE1["C"]) @ np.array(EXAMPLE1["B"])
        np.testing.assert_array_equal(CB, [[7.0], [3.0], [7.0]])
        np.testing.assert_allclose(pinv(CB), np.array([[7.0, 3.0, 7.0]]) / 107.0, atol=1e-15)

    def test_matches_numpy_on_full_rank(self):
        M = np.random.default_rng(3).standard_normal((5, 3))
        np.testing.assert_allclose(pinv(M), np.linalg.pinv(M), atol=1e-12)

    def test_subnormal_treated_as_zero(self):
        np.testing.assert_array_equal(pinv([[2.2e-309, 0.0]]), np.zeros((2, 1)))
        assert rank_of([[2.2e-309]]) == 0

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidMatrixError):
            pinv([[1.0, np.nan]])

    @settings(max_examples=200, deadline=None)
    @given(matrices)
    def test_penrose_identities(self, M):
        P = pinv(M)
        m, p = max(1.0, np.abs(M).max()), max(1.0, np.abs(P).max())
        with np.errstate(over="ignore"):
            tol = 1e-10 * (m * p) ** 2
            assert np.max(np.abs(M @ P @ M - M)) <= tol * m
            assert np.max(np.abs(P @ M @ P - P)) <= tol * p
        assert np.max(np.abs((M @ P).T - M @ P)) <= tol
        assert np.max(np.abs((P @ M).T - P @ M)) <= tol


class TestRank:
    def test_example2_output_matrix(self):
        assert rank_of([[1, 2, 0], [2, 1, 3]]) == 2

    def test_zero(self):
        assert rank_of(np.zeros((3, 3))) == 0

    def test_identity(self):
        assert rank_of(np.eye(3)) == 3

    @settings(max_examples=200, deadline=None)
    @given(matrices)
    def test_transpose_invariant(self, M):
        assert rank_of(M) == rank_of(M.T)


class TestSpectral:
    def test_half_identity_is_schur(self):
        assert is_schur(0.5 * np.eye(2))

    def test_example5_a_is_not_schur(self):
        A = np.array(EXAMPLE5["A"])
        assert np.trace(A) == pytest.approx(2.5)
        assert spectral_radius(A) > 1.0
        assert not is_schur(A)

    def test_identity_is_not_schur(self):
        assert not is_schur(np.eye(2))

    def test_non_square(self):
        with pytest.raises(DimensionError):
            is_schur(np.ones((2, 3)))


class TestPBH:
    def test_schur_a_is_detectable_without_output(self):
        assert is_detectable(0.5 * np.eye(2), np.zeros((1, 2)))

    def test_unobservable_unit_eigenvalue(self):
        assert not is_detectable(np.eye(2), [[1.0, 0.0]])

    def test_example1_detectable(self):
        assert is_detectable(EXAMPLE1["A"], EXAMPLE1["C"])

    def test_full_input_authority(self):
        A = np.random.default_rng(0).standard_normal((3, 3)) * 3
        assert is_stabilizable(A, np.eye(3))

    def test_example5_first_column(self):
        assert is_stabilizable(EXAMPLE5["A"], [[1.0], [0.0], [0.0]])

    def test_unreachable_unstable_mode(self):
        assert not is_stabilizable(np.diag([2.0, 0.5]), [[0.0], [1.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            is_detectable(np.eye(2), np.ones((1, 3)))


def scalar_dare_root(f):
    # P = f^2 P / (P + 1) + 1  <=>  P^2 - f^2 P - 1 = 0, positive root
    return (f * f + np.sqrt(f**4 + 4.0)) / 2.0


class TestGains:
    @pytest.mark.parametrize("f", [0.5, 2.0])
    def test_scalar_observer_gain_matches_closed_form(self, f):
        P = scalar_dare_root(f)
        K = observer_gain([[f]], [[1.0]])
        assert K[0, 0] == pytest.approx(f * P / (P + 1.0), abs=1e-12)
        assert abs(f - K[0, 0]) < 1.0

    def test_scalar_root_closed_form(self):
        assert solve_dare([[2.0]], [[1.0]])[0, 0] == pytest.approx(2.0 + np.sqrt(5.0), abs=1e-10)

    def test_schur_f_stays_schur(self):
        F = np.array([[0.3, 0.1], [0.0, -0.2]])
        K = observer_gain(F, [[1.0, 1.0]])
        assert is_schur(F - K @ np.array([[1.0, 1.0]]))

    def test_undetectable_pair(self):
        with pytest.raises(SynthesisInfeasibleError):
            observer_gain(np.eye(2) * 1.5, [[1.0, 0.0]])

    def test_lqr_scalar(self):
        assert abs(0.0 - lqr_gain([[0.0]], [[1.0]])[0, 0]) < 1.0
        K = lqr_gain([[2.0]], [[1.0]])
        P = scalar_dare_root(2.0)
        assert K[0, 0] == pytest.approx(2.0 * P / (P + 1.0), abs=1e-12)

    def test_lqr_example5(self):
        A, B = np.array(EXAMPLE5["A"]), np.array(EXAMPLE5["B"])
        assert spectral_radius(A - B @ lqr_gain(A, B)) < 1.0

    def test_lqr_unstabilizable(self):
        with pytest.raises(SynthesisInfeasibleError):
            lqr_gain(np.diag([2.0, 0.5]), [[0.0], [1.0]])

    def test_dare_matches_scipy(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            A = rng.standard_normal((4, 4))
            B = rng.standard_normal((4, 2))
            P = solve_dare(A.T, B.T)
            ref = scipy.linalg.solve_discrete_are(A, B, np.eye(4), np.eye(2))
            np.testing.assert_allclose(P, ref, rtol=1e-8, atol=1e-8)

    def test_observer_gain_random_detectable_pairs(self):
        rng = np.random.default_rng(1)
        done = 0
        while done < 200:
            n, m = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            F = rng.standard_normal((n, n)) * rng.uniform(0.2, 2.0)
            H = rng.standard_normal((m, n))
            if not is_detectable(F, H):
                continue
            assert is_schur(F - observer_gain(F, H) @ H)
            done += 1

    def test_lqr_random_stabilizable_pairs(self):
        rng = np.random.default_rng(2)
        done = 0
        while done < 200:
            n, m = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            A = rng.standard_normal((n, n)) * rng.uniform(0.2, 2.0)
            B = rng.standard_normal((n, m))
            if not is_stabilizable(A, B):
                continue
            assert is_schur(A - B @ lqr_gain(A, B))
            done += 1

    def test_deterministic(self):
        F = np.array(EXAMPLE5["A"])
        H = np.array([[1.0, 2.0, 0.0], [2.0, 1.0, 3.0]])
        assert observer_gain(F, H).tobytes() == observer_gain(F, H).tobytes()


class TestStein:
    def test_single_scalar(self):
        assert common_stein_candidate([[[0.5]]])[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-14)

    def test_two_zero_maps(self):
        assert common_stein_candidate([[[0.0]], [[0.0]]])[0, 0] == pytest.approx(0.5, abs=1e-14)

    def test_matches_scipy_lyapunov_for_one_mode(self):
        A = np.array([[0.5, 0.3], [-0.2, 0.4]])
        P = common_stein_candidate([A])
        np.testing.assert_allclose(P, scipy.linalg.solve_discrete_lyapunov(A.T, np.eye(2)), atol=1e-12)

    def test_singular(self):
        with pytest.raises(CertificateUnavailableError):
            common_stein_candidate([np.eye(2)])


def test_tolerances_validation():
    with pytest.raises(ValueError):
        Tolerances(rank_tol=0.0)
    with pytest.raises(ValueError):
        Tolerances(schur_margin=1.0)
