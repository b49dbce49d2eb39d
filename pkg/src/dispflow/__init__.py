"""Spectral lab for third-order dispersive flows of closed curves into almost Hermitian manifolds."""

from .covariant import (
    AmbientCurve,
    FlowParams,
    ResolutionError,
    commute_t_x_check,
    covariant_stack,
    energy,
    flow_rhs,
    sobolev_norm,
)
from .grid import Grid, Multiplier, make_grid, spectral_derivative
from .manifolds import FLATC, S2, S6, Target, get_target

__version__ = "0.1.0"

__all__ = [
    "AmbientCurve",
    "FlowParams",
    "Grid",
    "Multiplier",
    "ResolutionError",
    "Target",
    "S2",
    "S6",
    "FLATC",
    "commute_t_x_check",
    "covariant_stack",
    "energy",
    "flow_rhs",
    "get_target",
    "make_grid",
    "sobolev_norm",
    "spectral_derivative",
]
