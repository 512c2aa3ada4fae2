"""Synthetic data, metrics, abstention sweeps, the rating pipeline and the risk-bound check."""
from .metrics import abstention_representation, hamming, hamming_excluding_abstained, micro_f1
from .pipeline import PipelineResult, star_pipeline
from .risk import BoundCheck, FiniteWorld, random_world, risk_bound_check
from .sweep import CURVE_HEADER, SweepCell, SweepResult, abstention_coefficient, sweep_abstention
from .synthetic import (Reviews, SyntheticConfig, opinion_tree, sample_labels, synth_dataset,
                        synth_reviews)
from .tuning import tune_surrogate

__all__ = [
    "BoundCheck", "CURVE_HEADER", "FiniteWorld", "PipelineResult", "Reviews", "SweepCell",
    "SweepResult", "SyntheticConfig", "abstention_coefficient", "abstention_representation",
    "hamming", "hamming_excluding_abstained", "micro_f1", "opinion_tree", "random_world",
    "risk_bound_check", "sample_labels", "star_pipeline", "sweep_abstention", "synth_dataset",
    "synth_reviews", "tune_surrogate",
]
