import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from sola.surrogate import (KernelConfig, KernelRidgeSurrogate, alpha, fit_ridge, g_hat, gram)


def dense_reference(K, Kx, Psi, lam):
    """Normal equations of the stacked qn x qn system, solved densely."""
    n, q = Psi.shape
    big = np.kron(K, np.eye(q)) + lam * np.eye(n * q)
    coef = np.linalg.solve(big, Psi.reshape(-1))
    return (np.kron(Kx, np.eye(q)) @ coef).reshape(-1, q)


class TestGram:
    def test_linear(self):
        assert gram(KernelConfig("linear"), [[1, 0], [0, 1]]).tolist() == [[1, 0], [0, 1]]

    def test_gaussian_diagonal(self, rng):
        K = gram(KernelConfig("gaussian", 0.7), rng.normal(size=(5, 3)))
        assert np.allclose(np.diag(K), 1.0)

    def test_gaussian_value(self):
        K = gram(KernelConfig("gaussian", 0.5), [[0, 0]], [[1, 1]])
        assert K[0, 0] == pytest.approx(np.exp(-1.0))

    def test_empty(self):
        with pytest.raises(ValueError):
            gram(KernelConfig(), np.zeros((0, 2)))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            gram(KernelConfig(), [[np.nan, 1.0]])

    def test_bad_config(self):
        with pytest.raises(ValueError):
            KernelConfig("gaussian", 0.0)
        with pytest.raises(ValueError):
            KernelConfig("poly")


class TestFit:
    def test_scalar_closed_form(self):
        m = fit_ridge(KernelConfig("linear"), [[1.0]], [[2.0]], lam=0.5)
        assert g_hat(m, [1.0])[0] == pytest.approx(2 / 1.5)
        assert alpha(m, [1.0])[0] == pytest.approx(1 / 1.5)

    def test_orthonormal_training_set(self):
        m = fit_ridge(KernelConfig("linear"), np.eye(3), np.arange(6.0).reshape(3, 2), lam=0.25)
        assert np.allclose(alpha(m, [0, 1, 0]), np.array([0, 1, 0]) / 1.25)

    def test_shrinkage(self, rng):
        X, Psi = rng.normal(size=(10, 3)), rng.normal(size=(10, 4))
        m = fit_ridge(KernelConfig("gaussian", 1.0), X, Psi, lam=1e9)
        assert np.abs(m.predict(X)).max() < 1e-8

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_lambda_positive(self, lam):
        with pytest.raises(ValueError):
            KernelRidgeSurrogate(lam=lam).fit([[0.0]], [[1.0]])

    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            KernelRidgeSurrogate().fit(np.zeros((3, 2)), np.zeros((2, 1)))

    def test_feature_mismatch(self, rng):
        m = KernelRidgeSurrogate().fit(rng.normal(size=(4, 2)), rng.normal(size=(4, 1)))
        with pytest.raises(ValueError):
            m.predict(np.zeros((1, 3)))

    @given(st.integers(1, 50), st.integers(1, 20), st.sampled_from(["linear", "gaussian"]),
           st.floats(1e-3, 10.0), st.integers(0, 2**32 - 1))
    def test_matches_dense_solve(self, n, q, kind, lam, seed):
        r = np.random.default_rng(seed)
        X, Psi, Xq = r.normal(size=(n, 3)), r.normal(size=(n, q)), r.normal(size=(4, 3))
        kc = KernelConfig(kind, 0.3)
        m = fit_ridge(kc, X, Psi, lam)
        ref = dense_reference(gram(kc, X), gram(kc, Xq, X), Psi, lam)
        assert np.allclose(m.predict(Xq), ref, atol=1e-8, rtol=0)

    def test_duplicate_point_pulls_closer(self, rng):
        X = np.array([[0.0], [2.0]])
        Psi = np.array([[1.0, 0.0], [0.0, 1.0]])
        kc = KernelConfig("gaussian", 1.0)
        once = fit_ridge(kc, X, Psi, 0.5)
        twice = fit_ridge(kc, np.vstack([X, X[:1]]), np.vstack([Psi, Psi[:1]]), 0.5)
        err = lambda m: np.linalg.norm(g_hat(m, X[0]) - Psi[0])
        assert err(twice) < err(once)

    def test_interpolates_with_tiny_lambda(self, rng):
        X = rng.normal(size=(15, 4)) * 3
        Psi = rng.integers(0, 2, size=(15, 6)).astype(float)
        m = fit_ridge(KernelConfig("gaussian", 0.5), X, Psi, 1e-8)
        assert np.abs(m.predict(X) - Psi).max() <= 1e-3


class TestProperties:
    def test_in_span_of_training_outputs(self, rng):
        Psi = rng.normal(size=(3, 8))
        m = KernelRidgeSurrogate(gamma=0.4, lam=0.1).fit(rng.normal(size=(3, 2)), Psi)
        G = m.predict(rng.normal(size=(5, 2)))
        coef, *_ = np.linalg.lstsq(Psi.T, G.T, rcond=None)
        assert np.abs(Psi.T @ coef - G.T).max() <= 1e-10

    def test_objective_below_zero_function(self, rng):
        Psi = rng.normal(size=(12, 3))
        m = KernelRidgeSurrogate(lam=0.3).fit(rng.normal(size=(12, 2)), Psi)
        assert m.objective() <= (Psi ** 2).sum()

    def test_permutation_invariance(self, rng):
        X, Psi, Xq = rng.normal(size=(9, 2)), rng.normal(size=(9, 3)), rng.normal(size=(4, 2))
        perm = rng.permutation(9)
        a = KernelRidgeSurrogate(lam=0.2).fit(X, Psi).predict(Xq)
        b = KernelRidgeSurrogate(lam=0.2).fit(X[perm], Psi[perm]).predict(Xq)
        assert np.abs(a - b).max() <= 1e-10

    def test_dump_round_trip(self, rng):
        X, Psi = rng.normal(size=(6, 2)), rng.normal(size=(6, 3))
        m = KernelRidgeSurrogate(gamma=0.8, lam=0.2).fit(X, Psi)
        back = KernelRidgeSurrogate.from_dict(m.to_dict())
        Xq = rng.normal(size=(3, 2))
        assert np.array_equal(back.predict(Xq), m.predict(Xq))

    def test_sklearn_params(self):
        m = KernelRidgeSurrogate(kernel="linear", lam=3.0)
        assert clone(m).get_params() == {"kernel": "linear", "gamma": 1.0, "lam": 3.0}
