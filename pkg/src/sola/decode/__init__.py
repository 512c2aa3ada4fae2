"""Pre-image decoding: ILP construction, simplex, branch-and-bound, brute force."""
from .bnb import BnbReport, branch_and_bound, decode, decode_features, solve_lp_relaxation
from .ilp import IlpInstance, brute_force_decode, build_ilp
from .simplex import LPResult, solve_lp

__all__ = [
    "BnbReport",
    "IlpInstance",
    "LPResult",
    "branch_and_bound",
    "brute_force_decode",
    "build_ilp",
    "decode",
    "decode_features",
    "solve_lp",
    "solve_lp_relaxation",
]
