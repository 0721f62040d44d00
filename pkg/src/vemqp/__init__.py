"""Vertex exchange and Newton-type solvers for QPs over the generalized simplex."""
from .core import (
    DenseSymmetricMatrix,
    GeneralizedSimplex,
    KktCertificate,
    QpProblem,
    SolveReport,
    Termination,
    active_sets,
    kkt_residual,
    preprocess,
)
from .lp_oracle import lp_maximize, lp_minimize
from .proj import SsnConfig, proj_box, proj_generalized_simplex, ssn_solve
from .vem import AutoProject, VemConfig, vem_solve

__version__ = "0.1.0"

__all__ = [
    "AutoProject",
    "DenseSymmetricMatrix",
    "GeneralizedSimplex",
    "KktCertificate",
    "QpProblem",
    "SolveReport",
    "SsnConfig",
    "Termination",
    "VemConfig",
    "active_sets",
    "kkt_residual",
    "lp_maximize",
    "lp_minimize",
    "preprocess",
    "proj_box",
    "proj_generalized_simplex",
    "ssn_solve",
    "vem_solve",
]
