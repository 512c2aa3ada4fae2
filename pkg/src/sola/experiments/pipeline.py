"""Review-level star rating from averaged sentence representations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import Ridge

from .synthetic import Reviews

RATING_VALUES = np.array([-1.0, 0.0, 1.0])


def round_ratings(pred) -> np.ndarray:
    """Nearest value in {-1, 0, 1}."""
    return np.clip(np.rint(np.asarray(pred, dtype=float)), -1.0, 1.0)


def average_by_review(reviews: Reviews, reps: np.ndarray):
    """Component-wise mean of sentence representations per review, in sorted review order."""
    reps = np.asarray(reps, dtype=float)
    if len(reps) != len(reviews.review_ids):
        raise ValueError("one representation per sentence is required")
    ids, rows = [], []
    for rid, idx in reviews.groups():
        if len(idx) == 0:
            raise ValueError(f"review {rid} has no sentences")
        ids.append(rid)
        rows.append(reps[idx].mean(axis=0))
    if not rows:
        raise ValueError("no reviews")
    return ids, np.vstack(rows)


def _targets(reviews: Reviews, ids) -> np.ndarray:
    missing = [rid for rid in ids if rid not in reviews.ratings]
    if missing:
        raise ValueError(f"reviews without ratings: {missing[:5]}")
    return np.vstack([reviews.ratings[rid] for rid in ids])


@dataclass(frozen=True)
class PipelineResult:
    """Per-aspect and macro-averaged MAE of each representation fed at test time."""

    mae: dict
    macro: dict

    def to_dict(self) -> dict:
        return {"mae": {k: list(map(float, v)) for k, v in self.mae.items()},
                "macro": {k: float(v) for k, v in self.macro.items()}}


def fit_rating_models(reviews: Reviews, alpha: float = 1.0) -> list:
    """One ridge regressor per overall aspect, trained on averaged true labels."""
    ids, feats = average_by_review(reviews, reviews.Y)
    T = _targets(reviews, ids)
    return [Ridge(alpha=alpha).fit(feats, T[:, k]) for k in range(T.shape[1])]


def rating_mae(models: list, reviews: Reviews, reps) -> np.ndarray:
    ids, feats = average_by_review(reviews, reps)
    T = _targets(reviews, ids)
    pred = np.column_stack([round_ratings(m.predict(feats)) for m in models])
    return np.abs(pred - T).mean(axis=0)


def star_pipeline(train: Reviews, test: Reviews, predictor, aspects=None,
                  alpha: float = 1.0) -> PipelineResult:
    """Fit rating regressors on true sentence labels and score three test-time inputs.

    * ``oracle``: true sentence labels,
    * ``predicted``: decoded ``h`` with abstentions ignored,
    * ``abstention``: ``h - (1 - r)``.

    ``predictor`` is a fitted :class:`~sola.AbstentionStructuredPredictor`.
    ``aspects`` selects rating columns (0-based); default is all of them.
    """
    models = fit_rating_models(train, alpha)
    cols = list(range(len(models))) if aspects is None else list(aspects)
    H, R = predictor.predict_hr(test.X)
    reps = {
        "oracle": test.Y.astype(float),
        "predicted": H.astype(float),
        "abstention": H.astype(float) - (1.0 - R),
    }
    mae = {k: rating_mae(models, test, v)[cols] for k, v in reps.items()}
    macro = {k: float(v.mean()) for k, v in mae.items()}
    return PipelineResult(mae, macro)
