"""Symmetry reduction, closed-form solutions and finite differences for the
semi-linear bond-pricing equation."""
from . import expr, model, transforms, solutions, verify, fdsolver
from .kernels import BACKEND as KERNEL_BACKEND
from .model import CaseTag, EquationKind, Params, PdeProblem, classify, residual
from .solutions import CASE_IDS, get_case

__all__ = ["expr", "model", "transforms", "solutions", "verify", "fdsolver", "CaseTag",
           "EquationKind", "Params", "PdeProblem", "classify", "residual", "CASE_IDS",
           "get_case", "KERNEL_BACKEND"]
__version__ = "0.1.0"
