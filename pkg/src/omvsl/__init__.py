"""Orthogonal multi-view subspace learning with matrix-free eigensolvers."""
from .eigsolve import (
    DeflationExhaustedError,
    EigResult,
    NumericalError,
    Pencil,
    SolverConfig,
    estimate_norm,
    gev_topk,
    loecg,
    solve_projected,
)
from .estimator import OrthogonalMultiViewSubspace, fit_projections
from .models import ModelSpec, MultiViewDataset, instantiate
from .osave import ProjectionSet, ViewDegeneracyError, osave

__version__ = "0.1.0"

__all__ = [
    "Pencil",
    "SolverConfig",
    "EigResult",
    "NumericalError",
    "DeflationExhaustedError",
    "ViewDegeneracyError",
    "estimate_norm",
    "solve_projected",
    "loecg",
    "gev_topk",
    "osave",
    "ProjectionSet",
    "ModelSpec",
    "MultiViewDataset",
    "instantiate",
    "fit_projections",
    "OrthogonalMultiViewSubspace",
]
