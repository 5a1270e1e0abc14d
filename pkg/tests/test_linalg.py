import numpy as np
import pytest
import scipy.linalg

from entroflux.linalg import (
    SpectralDecomposition,
    ValidationError,
    commutator,
    dagger,
    expectation,
    hermitian_eig,
    inverse_density,
    log_density,
    random_density,
    random_hermitian,
    trace_distance,
    validate_density,
)
from entroflux.qubit import SIGMA_X, SIGMA_Y, SIGMA_Z, SIGMA_MINUS, SIGMA_PLUS

KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
KET1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
PLUS = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)


class TestHermitianEig:
    def test_pauli_spectrum(self):
        dec = hermitian_eig(SIGMA_Z)
        np.testing.assert_allclose(dec.eigenvalues, [1.0, -1.0])

    def test_degenerate_identity(self):
        dec = hermitian_eig(np.eye(2) / 2)
        np.testing.assert_allclose(dec.eigenvalues, [0.5, 0.5])

    def test_reconstruction_random(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = random_hermitian(4, rng)
            dec = hermitian_eig(m)
            assert np.max(np.abs(dec.reconstruct() - m)) <= 1e-12
            unit = dagger(dec.vectors) @ dec.vectors - np.eye(4)
            assert np.max(np.abs(unit)) <= 1e-10

    def test_descending_order(self):
        dec = hermitian_eig(np.diag([0.1, 0.7, 0.2]))
        assert np.all(np.diff(dec.eigenvalues) <= 0)

    def test_rejects_non_hermitian(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValidationError, match="asymmetry"):
            hermitian_eig(m)


class TestLogDensity:
    def test_maximally_mixed(self):
        out = log_density(np.eye(2) / 2)
        np.testing.assert_allclose(out, -np.log(2) * np.eye(2), atol=1e-14)

    def test_diagonal_eigenvalues(self):
        out = log_density(np.diag([0.9, 0.1]))
        np.testing.assert_allclose(out, np.diag([np.log(0.9), np.log(0.1)]), atol=1e-14)

    def test_pure_state_floor(self):
        out = log_density(KET0, floor=1e-12)
        np.testing.assert_allclose(out, np.diag([0.0, np.log(1e-12)]), atol=1e-10)

    def test_matches_scipy_logm_on_full_rank(self):
        # independent oracle for the spectral-function route
        for seed in range(10):
            rho = random_density(3, min_eig=0.05, seed=seed)
            np.testing.assert_allclose(log_density(rho), scipy.linalg.logm(rho), atol=1e-9)

    def test_commutes_with_state(self):
        for seed in range(20):
            rho = random_density(4, min_eig=0.01, seed=seed)
            comm = commutator(rho, log_density(rho))
            assert np.max(np.abs(comm)) <= 1e-10

    def test_invalid_state_rejected(self):
        with pytest.raises(ValidationError):
            log_density(np.diag([0.7, 0.7]))


class TestInverseDensity:
    def test_matches_inverse_on_full_rank(self):
        rho = random_density(3, min_eig=0.05, seed=1)
        np.testing.assert_allclose(inverse_density(rho) @ rho, np.eye(3), atol=1e-9)


class TestCommutator:
    def test_ladder_pair(self):
        np.testing.assert_allclose(commutator(SIGMA_PLUS, SIGMA_MINUS), SIGMA_Z)

    def test_self_commutation(self):
        np.testing.assert_allclose(commutator(SIGMA_Z, SIGMA_Z), np.zeros((2, 2)))

    def test_pauli_algebra(self):
        np.testing.assert_allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z)

    def test_dim_mismatch(self):
        with pytest.raises(ValidationError, match="mismatch"):
            commutator(SIGMA_X, np.eye(3))


class TestExpectation:
    def test_eigenstate(self):
        assert expectation(SIGMA_Z, KET0) == pytest.approx(1.0)

    def test_traceless_on_mixed(self):
        assert expectation(SIGMA_Z, np.eye(2) / 2) == pytest.approx(0.0, abs=1e-15)

    def test_plus_state(self):
        assert expectation(SIGMA_X, PLUS).real == pytest.approx(1.0)

    def test_real_for_hermitian(self):
        rng = np.random.default_rng(5)
        for seed in range(20):
            a = random_hermitian(3, rng)
            rho = random_density(3, seed=seed)
            assert abs(expectation(a, rho).imag) <= 1e-12


class TestRandomDensity:
    def test_deterministic(self):
        a = random_density(2, min_eig=0.05, seed=7)
        b = random_density(2, min_eig=0.05, seed=7)
        np.testing.assert_array_equal(a, b)

    def test_unit_trace(self):
        rho = random_density(3, min_eig=0.01, seed=11)
        assert abs(np.trace(rho).real - 1.0) <= 1e-12

    def test_batch_validity(self):
        for seed in range(100):
            rho = random_density(4, min_eig=0.0, seed=seed)
            validate_density(rho)

    def test_min_eig_enforced(self):
        for seed in range(20):
            rho = random_density(3, min_eig=0.1, seed=seed)
            assert np.linalg.eigvalsh(rho)[0] >= 0.1 - 1e-12

    def test_infeasible_floor(self):
        with pytest.raises(ValidationError, match="min_eig"):
            random_density(2, min_eig=0.6, seed=0)


class TestValidateDensity:
    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError, match="trace"):
            validate_density(np.diag([0.7, 0.7]))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError, match="negative eigenvalue"):
            validate_density(np.diag([1.2, -0.2]))

    def test_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.3], [0.0, 0.5]])
        with pytest.raises(ValidationError, match="asymmetry"):
            validate_density(m)


def test_trace_distance_orthogonal_pure_states():
    assert trace_distance(KET0, KET1) == pytest.approx(1.0)
    assert trace_distance(KET0, KET0) == pytest.approx(0.0, abs=1e-15)


def test_spectral_decomposition_is_frozen():
    dec = hermitian_eig(SIGMA_Z)
    assert isinstance(dec, SpectralDecomposition)
    with pytest.raises(AttributeError):
        dec.eigenvalues = None
