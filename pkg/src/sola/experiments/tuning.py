"""Hyperparameter selection for the surrogate regressor."""
from __future__ import annotations

from sklearn.model_selection import GridSearchCV, KFold

from ..estimator import check_labels
from ..losses import psi_wa_batch
from ..surrogate import KernelRidgeSurrogate

DEFAULT_GRID = {"lam": [1e-3, 1e-2, 1e-1, 1.0], "gamma": [0.1, 0.5, 1.0, 2.0]}


def tune_surrogate(spec, X, Y, param_grid=None, cv: int = 3, kernel: str = "gaussian",
                   seed: int = 0) -> GridSearchCV:
    """Pick ``lam`` and ``gamma`` by cross-validated squared error in the output feature space.

    Scoring the surrogate rather than the decoded loss keeps the search cheap;
    the excess-risk bound ties the two together.
    """
    Y = check_labels(spec.graph, Y)
    search = GridSearchCV(KernelRidgeSurrogate(kernel=kernel), param_grid or DEFAULT_GRID,
                          scoring="neg_mean_squared_error",
                          cv=KFold(cv, shuffle=True, random_state=seed))
    return search.fit(X, psi_wa_batch(spec, Y))
