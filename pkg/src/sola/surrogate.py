"""Kernel ridge regression onto output features.

With an operator-valued kernel of the form ``K(x, x') = k(x, x') I_q`` the
``qn x qn`` ridge system splits into ``q`` independent copies of the same
``n x n`` system, so one Cholesky factor of ``k(X, X) + lam I_n`` serves
every output coordinate::

    g_hat(x) = sum_i alpha_i(x) psi_i,   alpha(x) = (k(X, X) + lam I)^{-1} k(X, x)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.metrics.pairwise import linear_kernel, rbf_kernel
from sklearn.utils.validation import check_array, check_is_fitted

KERNELS = ("linear", "gaussian")


@dataclass(frozen=True)
class KernelConfig:
    kind: str = "gaussian"
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kind!r}")
        if self.kind == "gaussian" and not self.gamma > 0:
            raise ValueError("gaussian kernel needs gamma > 0")


def gram(kernel: KernelConfig, X, Y=None) -> np.ndarray:
    """Kernel matrix ``k(X_i, Y_j)``; ``Y`` defaults to ``X``."""
    X = check_array(X, ensure_min_samples=1)
    Y = X if Y is None else check_array(Y, ensure_min_samples=1)
    if kernel.kind == "linear":
        return linear_kernel(X, Y)
    return rbf_kernel(X, Y, gamma=kernel.gamma)


class KernelRidgeSurrogate(RegressorMixin, BaseEstimator):
    """Vector-valued kernel ridge regression with an identity-decomposable kernel.

    Parameters
    ----------
    kernel : {"linear", "gaussian"}, default="gaussian"
    gamma : float, default=1.0
        Bandwidth of the gaussian kernel ``exp(-gamma ||x - x'||^2)``.
    lam : float, default=1.0
        Ridge penalty; must be positive.

    Attributes
    ----------
    X_fit_ : ndarray of shape (n_samples, n_features)
    Psi_fit_ : ndarray of shape (n_samples, n_outputs)
    """

    def __init__(self, kernel="gaussian", gamma=1.0, lam=1.0):
        self.kernel = kernel
        self.gamma = gamma
        self.lam = lam

    @property
    def kernel_config(self) -> KernelConfig:
        return KernelConfig(self.kernel, self.gamma)

    def fit(self, X, Psi):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        X = check_array(X, ensure_min_samples=1)
        Psi = check_array(Psi, ensure_2d=False)
        if Psi.ndim == 1:
            Psi = Psi[:, None]
        if len(Psi) != len(X):
            raise ValueError(f"X has {len(X)} rows but Psi has {len(Psi)}")
        K = gram(self.kernel_config, X)
        try:
            self.factor_ = cho_factor(K + self.lam * np.eye(len(X)), lower=True)
        except LinAlgError as exc:
            raise ValueError("kernel system is not positive definite; check the inputs") from exc
        self.X_fit_ = X
        self.Psi_fit_ = Psi
        self.n_features_in_ = X.shape[1]
        return self

    def alpha(self, X) -> np.ndarray:
        """Weights ``alpha(x)`` over training points, one row per query."""
        check_is_fitted(self, "factor_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        Kx = gram(self.kernel_config, self.X_fit_, X)
        return cho_solve(self.factor_, Kx).T

    def predict(self, X) -> np.ndarray:
        return self.alpha(X) @ self.Psi_fit_

    def objective(self) -> float:
        """Ridge objective ``sum ||g(x_i) - psi_i||^2 + lam ||g||_H^2`` at the fit."""
        check_is_fitted(self, "factor_")
        A = cho_solve(self.factor_, self.Psi_fit_)
        K = gram(self.kernel_config, self.X_fit_)
        resid = K @ A - self.Psi_fit_
        return float((resid ** 2).sum() + self.lam * np.trace(A.T @ K @ A))

    def to_dict(self) -> dict:
        check_is_fitted(self, "factor_")
        return {
            "kernel": {"kind": self.kernel, "gamma": self.gamma},
            "lambda": self.lam,
            "X_train": self.X_fit_.tolist(),
            "Psi_train": self.Psi_fit_.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "KernelRidgeSurrogate":
        k = obj["kernel"]
        model = cls(kernel=k["kind"], gamma=k.get("gamma", 1.0), lam=obj["lambda"])
        return model.fit(np.asarray(obj["X_train"], dtype=float),
                         np.asarray(obj["Psi_train"], dtype=float))


TrainedSurrogate = KernelRidgeSurrogate


def fit_ridge(kernel: KernelConfig, X, Psi, lam: float) -> KernelRidgeSurrogate:
    return KernelRidgeSurrogate(kernel.kind, kernel.gamma, lam).fit(X, Psi)


def alpha(model: KernelRidgeSurrogate, x) -> np.ndarray:
    return model.alpha(np.atleast_2d(x))[0]


def g_hat(model: KernelRidgeSurrogate, x) -> np.ndarray:
    return model.predict(np.atleast_2d(x))[0]
