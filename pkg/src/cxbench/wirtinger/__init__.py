"""Reverse-mode autodiff on real coordinates with conjugate-Wirtinger bookkeeping."""
from .calculus import (
    FlaggedSampleError,
    WirtingerPair,
    finite_diff_check,
    max_relative_error,
    numeric_gradient,
    wirtinger_from_jacobian,
    wirtinger_pair,
)
from .tape import CVar, ContractError, ParamEntry, ParamStore, Tape, Var, backward, conj_wirtinger

__all__ = [
    "CVar",
    "ContractError",
    "FlaggedSampleError",
    "ParamEntry",
    "ParamStore",
    "Tape",
    "Var",
    "WirtingerPair",
    "backward",
    "conj_wirtinger",
    "finite_diff_check",
    "max_relative_error",
    "numeric_gradient",
    "wirtinger_from_jacobian",
    "wirtinger_pair",
]
