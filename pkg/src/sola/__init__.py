"""Structured output learning with abstention over HEX-graph label structures."""
from .decode import branch_and_bound, brute_force_decode, build_ilp, decode, decode_features
from .estimator import AbstentionStructuredPredictor
from .exceptions import (CapExceeded, CycleError, GraphError, InfeasibleError, NotATree,
                         SelfLoopError, SolaError, UnboundedError)
from .hexgraph import (AbstainedPrediction, HexGraph, PredictionSpace, compose_prediction,
                       enumerate_prediction_space, enumerate_state_space, is_legal, load_graph,
                       validate_graph)
from .losses import (LossSpec, binary_abstention_spec, haloss_spec, hamming_spec, hloss_spec,
                     loss_direct, loss_innerproduct, make_spec, psi_a, psi_wa, sibling_weights,
                     weight_scheme)
from .surrogate import KernelConfig, KernelRidgeSurrogate, fit_ridge

__version__ = "0.1.0"

__all__ = [
    "AbstainedPrediction", "AbstentionStructuredPredictor", "CapExceeded", "CycleError",
    "GraphError", "HexGraph", "InfeasibleError", "KernelConfig", "KernelRidgeSurrogate",
    "LossSpec", "NotATree", "PredictionSpace", "SelfLoopError", "SolaError", "UnboundedError",
    "binary_abstention_spec", "branch_and_bound", "brute_force_decode", "build_ilp",
    "compose_prediction", "decode", "decode_features", "enumerate_prediction_space",
    "enumerate_state_space", "fit_ridge", "haloss_spec", "hamming_spec", "hloss_spec",
    "is_legal", "load_graph", "loss_direct", "loss_innerproduct", "make_spec", "psi_a",
    "psi_wa", "sibling_weights", "validate_graph", "weight_scheme",
]
