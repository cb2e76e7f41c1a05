"""Exact verification engine for graded lattice field models.

Truncated formal power series over Gaussian rationals, graded functional
calculus, causal Green functions, classical and quantum master-equation
checks, and local S-matrix group relations, all in exact arithmetic: every
identity is verified to be *identically* zero at the working truncation
order.
"""

from .series import FormalSeries, Gaussian, I, ONE, ZERO, rat
from .graded import (
    Generator,
    GradedPolynomial,
    Kind,
    antibracket,
    bv_laplacian,
)
from .model import (
    ModelSpec,
    PropagatorSet,
    build_propagators,
    consistency_check,
    load_model,
    model_a,
    model_b,
    model_b_ungauged,
    save_model,
)
from .classical import (
    ExtendedAction,
    HomologyReport,
    MollerSeries,
    TheoremReport,
    classical_bv,
    cme_check,
    euler_lagrange,
    extended_action,
    gauge_fix,
    koszul_homology,
    moller_forward,
    moller_inverse,
    moller_inverse_map,
    peierls_bracket,
    verify_moller_theorem,
)

__all__ = [
    "FormalSeries", "Gaussian", "I", "ONE", "ZERO", "rat",
    "Generator", "GradedPolynomial", "Kind", "antibracket", "bv_laplacian",
    "ModelSpec", "PropagatorSet", "build_propagators", "consistency_check",
    "load_model", "model_a", "model_b", "model_b_ungauged", "save_model",
    "ExtendedAction", "HomologyReport", "MollerSeries", "TheoremReport",
    "classical_bv", "cme_check", "euler_lagrange", "extended_action",
    "gauge_fix", "koszul_homology", "moller_forward", "moller_inverse",
    "moller_inverse_map", "peierls_bracket", "verify_moller_theorem",
]

__version__ = "0.1.0"
