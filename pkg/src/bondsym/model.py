"""The semi-linear bond-pricing class and its residual operator.

    u_t + 1/2 rho^2 x^(2 gamma) u_xx + (alpha + beta x - lambda rho x^delta) u_x - f(x, u) = 0

on the half-line x > 0.  The rescaled ("tilde") equation obtained by the
trivial time change is the same class with rho = sqrt(2), so every
intermediate equation of the reduction chain is represented by a
:class:`Params` value plus a source expression.  The final heat equation
with source, ``phi_tau - phi_xx - f(x, phi) = 0``, is tagged separately.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import expr as ex
from .expr import Expr

PARAM_NAMES = ("alpha", "beta", "gamma", "delta", "lambda", "rho")
SQRT2 = math.sqrt(2.0)


class ParamsError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.5
    lam: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta", "lam", "rho"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParamsError(f"{name} must be finite, got {value!r}")
        if self.rho == 0.0:
            raise ParamsError("rho must be non-zero")

    def validate(self, strict: bool = False) -> "Params":
        """Check the class constraints; ``strict`` also forbids delta in {0, 1}."""
        if strict and self.delta in (0.0, 1.0):
            raise ParamsError(f"delta={self.delta} excluded by the class constraint (strict mode)")
        return self

    def as_dict(self) -> dict[str, float]:
        """Values keyed by the names used inside expressions."""
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "delta": self.delta, "lambda": self.lam, "rho": self.rho}

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "Params":
        keys = {"lambda": "lam"}
        kwargs = {keys.get(k, k): float(v) for k, v in values.items()}
        unknown = set(kwargs) - {"alpha", "beta", "gamma", "delta", "lam", "rho"}
        if unknown:
            raise ParamsError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return cls(**kwargs)

    def with_(self, **changes) -> "Params":
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        return replace(self, **changes)

    def close_to(self, other: "Params", tol: float = 1e-12) -> bool:
        a, b = self.as_dict(), other.as_dict()
        return all(abs(a[k] - b[k]) <= tol * max(1.0, abs(a[k]), abs(b[k])) for k in a)


class CaseTag(str, enum.Enum):
    GENERIC = "Generic"
    GAMMA_ONE = "GammaOne"
    GAMMA_HALF = "GammaHalf"
    DELTA_CHAIN = "DeltaChain"


def classify(p: Params, tol: float = 1e-12) -> CaseTag:
    """Case split with precedence GammaOne > GammaHalf > DeltaChain > Generic."""
    if abs(p.gamma - 1.0) <= tol:
        return CaseTag.GAMMA_ONE
    if abs(p.gamma - 0.5) <= tol:
        return CaseTag.GAMMA_HALF
    if abs(p.delta - (2.0 * p.gamma - 1.0)) <= tol:
        return CaseTag.DELTA_CHAIN
    return CaseTag.GENERIC


class EquationKind(str, enum.Enum):
    BOND = "bond"   # the semi-linear class (any rho; rho = sqrt(2) after rescaling)
    HEAT = "heat"   # phi_tau - phi_xx - f(x, phi) = 0


@dataclass(frozen=True)
class PdeProblem:
    params: Params
    source: Expr
    kind: EquationKind = EquationKind.BOND

    def __post_init__(self):
        if "t" in ex.free_names(self.source):
            raise ParamsError("the source term must not depend on t")

    @classmethod
    def from_text(cls, params: Params, source: str, constants: Mapping[str, float] | None = None,
                  kind: EquationKind = EquationKind.BOND) -> "PdeProblem":
        constants = dict(constants or {})
        names = set(PARAM_NAMES) | set(constants)
        f = ex.parse(source, names)
        f = ex.bind(f, {**params.as_dict(), **constants})
        return cls(params, f, kind)


def drift(p: Params) -> Expr:
    """alpha + beta x - lambda rho x^delta as an expression in x."""
    x = ex.var("x")
    return ex.const(p.alpha) + ex.const(p.beta) * x - ex.const(p.lam * p.rho) * x ** ex.const(p.delta)


def diffusion(p: Params) -> Expr:
    """1/2 rho^2 x^(2 gamma)."""
    return ex.const(0.5 * p.rho ** 2) * ex.var("x") ** ex.const(2.0 * p.gamma)


def residual_expr(prob: PdeProblem, u: Expr) -> Expr:
    """Symbolic left-hand side of the equation with ``u(x, t)`` substituted."""
    if "u" in ex.free_names(u):
        raise ParamsError("candidate solution must be an expression in x and t only")
    ut = ex.differentiate(u, "t")
    ux = ex.differentiate(u, "x")
    uxx = ex.differentiate(ux, "x")
    f = ex.substitute(prob.source, {"u": u})
    if prob.kind is EquationKind.HEAT:
        return ut - uxx - f
    p = prob.params
    return ut + diffusion(p) * uxx + drift(p) * ux - f


def residual(prob: PdeProblem, u: Expr, at: tuple[float, float] | None = None, *,
             x=None, t=None):
    """Residual at a point, or at arrays of points via ``x=..., t=...``."""
    if at is not None:
        x, t = at
    if x is None or t is None:
        raise TypeError("give the evaluation point as at=(x, t) or x=..., t=...")
    if np.any(np.asarray(x) <= 0) and prob.kind is EquationKind.BOND:
        raise ex.ExprDomainError("the bond-pricing equation lives on x > 0", {"x": float(np.min(x))})
    return ex.evaluate(residual_expr(prob, u), {"x": x, "t": t})


@dataclass(frozen=True)
class ClassicalModel:
    """Parameter constraints of a named model; unset entries stay free."""
    name: str
    fixed: Mapping[str, float]
    source_text: str
    notes: str = ""
    nonzero: tuple[str, ...] = field(default=())

    def instantiate(self, **free: float) -> PdeProblem:
        values = {"alpha": 0.0, "beta": 0.0, "gamma": 0.0, "delta": 0.5, "lambda": 0.0, "rho": 1.0}
        for k, v in free.items():
            key = "lambda" if k == "lam" else k
            if key in self.fixed and not math.isclose(self.fixed[key], v):
                raise ParamsError(f"{self.name} fixes {key}={self.fixed[key]}")
            values[key] = v
        values.update(self.fixed)
        for k in self.nonzero:
            if values[k] == 0.0:
                raise ParamsError(f"{self.name} requires {k} != 0")
        p = Params.from_mapping(values)
        return PdeProblem.from_text(p, self.source_text)


_CLASSICAL = {
    "BSM": ClassicalModel("BSM", {"gamma": 1.0, "alpha": 0.0, "lambda": 0.0}, "beta*u"),
    "Vasicek": ClassicalModel("Vasicek", {"gamma": 0.0, "delta": 0.0}, "x*u", nonzero=("beta",)),
    "CIR": ClassicalModel("CIR", {"gamma": 0.5, "delta": 0.5, "lambda": 0.0}, "x*u"),
    "Longstaff": ClassicalModel("Longstaff", {"gamma": 0.5, "delta": 0.5}, "x*u",
                                notes="alpha = rho^2/4"),
}


def classical_reduction(name: str) -> ClassicalModel:
    """Template of a classical model contained in the class."""
    try:
        model = _CLASSICAL[name]
    except KeyError:
        raise ParamsError(f"unknown model {name!r}; expected one of {sorted(_CLASSICAL)}") from None
    if name == "Longstaff":
        return _Longstaff(model.name, model.fixed, model.source_text, model.notes)
    return model


class _Longstaff(ClassicalModel):
    def instantiate(self, **free: float) -> PdeProblem:
        rho = free.get("rho", 1.0)
        if "alpha" in free and not math.isclose(free["alpha"], rho ** 2 / 4):
            raise ParamsError("Longstaff fixes alpha = rho^2/4")
        free = {**free, "alpha": rho ** 2 / 4}
        return ClassicalModel.instantiate(self, **free)
