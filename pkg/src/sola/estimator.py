"""Structured predictor with abstention, as a scikit-learn estimator."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .decode import decode_features
from .hexgraph import HexGraph, is_legal
from .losses import LossSpec, loss_direct, make_spec, psi_wa_batch
from .surrogate import KernelRidgeSurrogate

ABSTAIN_CODE = -1
MODEL_FORMAT = "sola-model/1"


def check_labels(graph: HexGraph, Y) -> np.ndarray:
    """Validate a label matrix: binary rows of length ``d`` that are legal in ``graph``."""
    Y = check_array(Y, dtype=None)
    if Y.shape[1] != graph.d:
        raise ValueError(f"labels must have {graph.d} columns, got {Y.shape[1]}")
    if not np.isin(Y, (0, 1)).all():
        raise ValueError("labels must be binary")
    Y = Y.astype(np.int8)
    for k, y in enumerate(Y):
        if not is_legal(graph, y):
            raise ValueError(f"label row {k} is not a legal assignment")
    return Y


class AbstentionStructuredPredictor(TransformerMixin, BaseEstimator):
    """Learn ``g(x) ~ E[psi_wa(y) | x]`` by kernel ridge, then decode with abstention.

    Parameters
    ----------
    graph : HexGraph
        Output structure; must be a rooted tree for the hierarchical losses.
    loss : {"ha_loss", "h_loss", "hamming", "binary_abstention"}, default="ha_loss"
    K_A, K_Ac : float
        Abstention cost and regret multipliers of the Ha-loss.
    c : array-like or None
        Node weights; ``None`` uses the sibling-splitting scheme.
    c_reject : float
        Rejection cost of the binary loss.
    consecutive : {"purpose", "literal"}
        Which consecutive-abstention rule the prediction space uses.
    strict : bool
        Force ``h[child] <= h[parent]`` even under an abstained parent.
    abstain_nodes : sequence of int or None
        Nodes that may abstain; ``None`` allows all.
    kernel, gamma, lam :
        Surrogate regressor settings, see :class:`KernelRidgeSurrogate`.
    warm_start : bool
        Seed branch-and-bound with the abstention-free decoding.

    ``predict`` returns the composed labeling with ``-1`` marking abstention;
    ``transform`` returns ``h - (1 - r)``, the representation used to feed
    downstream regressors.
    """

    def __init__(self, graph=None, loss="ha_loss", K_A=0.0, K_Ac=0.0, c=None, c_reject=0.25,
                 consecutive="purpose", strict=False, abstain_nodes=None,
                 kernel="gaussian", gamma=1.0, lam=1.0, warm_start=True):
        self.graph = graph
        self.loss = loss
        self.K_A = K_A
        self.K_Ac = K_Ac
        self.c = c
        self.c_reject = c_reject
        self.consecutive = consecutive
        self.strict = strict
        self.abstain_nodes = abstain_nodes
        self.kernel = kernel
        self.gamma = gamma
        self.lam = lam
        self.warm_start = warm_start

    def _make_spec(self):
        if self.graph is None:
            raise ValueError("graph must be set")
        return make_spec(self.loss, self.graph, c=self.c, K_A=self.K_A, K_Ac=self.K_Ac,
                         c_reject=self.c_reject, consecutive=self.consecutive)

    def fit(self, X, Y):
        spec = self._make_spec()
        X = check_array(X)
        Y = check_labels(self.graph, Y)
        if len(X) != len(Y):
            raise ValueError(f"X has {len(X)} rows but Y has {len(Y)}")
        self.spec_ = spec
        self.space_ = spec.prediction_space(strict=self.strict, abstain_nodes=self.abstain_nodes)
        self.surrogate_ = KernelRidgeSurrogate(self.kernel, self.gamma, self.lam).fit(
            X, psi_wa_batch(spec, Y))
        self.n_features_in_ = X.shape[1]
        return self

    def g_hat(self, X) -> np.ndarray:
        check_is_fitted(self, "surrogate_")
        return self.surrogate_.predict(X)

    def decode(self, X) -> list:
        """Branch-and-bound reports, one per row of ``X``."""
        spec = self._make_spec()
        space = spec.prediction_space(strict=self.strict, abstain_nodes=self.abstain_nodes)
        return [decode_features(spec, space, psi, self.warm_start) for psi in self.g_hat(X)]

    def predict_hr(self, X):
        reports = self.decode(X)
        H = np.array([rep.optimum.y_h for rep in reports], dtype=np.int8).reshape(len(reports), -1)
        R = np.array([rep.optimum.y_r for rep in reports], dtype=np.int8).reshape(len(reports), -1)
        return H, R

    def predict(self, X) -> np.ndarray:
        H, R = self.predict_hr(X)
        return np.where(R == 1, H, ABSTAIN_CODE).astype(np.int8)

    def transform(self, X) -> np.ndarray:
        H, R = self.predict_hr(X)
        return H.astype(float) - (1.0 - R)

    def score(self, X, Y) -> float:
        """Negative mean loss of the configured spec (higher is better)."""
        spec = self._make_spec()
        Y = check_labels(self.graph, Y)
        H, R = self.predict_hr(X)
        return -float(np.mean([loss_direct(spec, h, r, y) for h, r, y in zip(H, R, Y)]))

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        """JSON-ready dump: settings, graph, loss spec and training data of the surrogate."""
        check_is_fitted(self, "surrogate_")
        params = self.get_params()
        params.pop("graph")
        for key in ("c", "abstain_nodes"):
            if params[key] is not None:
                params[key] = [v.item() if hasattr(v, "item") else v for v in params[key]]
        return {
            "format": MODEL_FORMAT,
            "params": params,
            "graph": self.graph.to_dict(),
            "spec": self.spec_.to_dict(),
            "surrogate": self.surrogate_.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AbstentionStructuredPredictor":
        """Rebuild a fitted predictor; raises ``ValueError`` on inconsistent dumps."""
        if obj.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a model dump (format {obj.get('format')!r})")
        model = cls(graph=HexGraph.from_dict(obj["graph"]), **obj["params"])
        spec = LossSpec.from_dict(obj["spec"])
        if spec.q != len(obj["surrogate"]["Psi_train"][0]):
            raise ValueError("surrogate outputs do not match the loss spec dimension")
        model.spec_ = spec
        model.space_ = spec.prediction_space(strict=model.strict,
                                             abstain_nodes=model.abstain_nodes)
        model.surrogate_ = KernelRidgeSurrogate.from_dict(obj["surrogate"])
        model.n_features_in_ = model.surrogate_.n_features_in_
        return model
