"""Catalog of the eight closed-form similarity solutions.

Four cases satisfy the terminal condition u(x, T) = 1 and four carry a
moving barrier ``H(t) = b K exp(c (t - T))``.  Every formula is stored as
the text it is printed with and parsed on demand, so a transcription can be
compared against the source by eye.

Generator spans are kept verbatim in the chart they are printed in.  Inside
a generator ``x``, ``t`` and ``u`` stand for the chart's own variables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import expr as ex
from .expr import Expr
from .model import PARAM_NAMES, Params, PdeProblem

__all__ = [
    "CASE_IDS", "TERMINAL_IDS", "BARRIER_IDS", "CatalogError", "Generator", "GeneratorSet",
    "TerminalSpec", "BarrierSpec", "Region", "ClosedFormCase", "get_case", "all_cases",
    "barrier_H", "induced_R", "validate_constraints", "default_params", "default_constants",
]

TERMINAL_IDS = ("T-Generic", "T-GammaOne", "T-GammaHalf", "T-DeltaChain")
BARRIER_IDS = ("B-Generic", "B-GammaOne", "B-GammaHalf", "B-DeltaChain")
CASE_IDS = TERMINAL_IDS + BARRIER_IDS

ORIGINAL = "original"
TRANSFORMED = "transformed"
AMBIGUOUS = "printed-ambiguous"


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    """xi1 d/dx + xi2 d/dt + eta d/du in the chart named by ``frame``."""
    xi1: Expr
    xi2: Expr
    eta: Expr
    frame: str = ORIGINAL
    label: str = ""

    @classmethod
    def from_text(cls, xi1: str, xi2: str, eta: str, frame: str = ORIGINAL,
                  constants: Mapping[str, float] | None = None, label: str = "") -> "Generator":
        constants = dict(constants or {})
        parts = [ex.bind(ex.parse(s, constants), constants) for s in (xi1, xi2, eta)]
        return cls(*parts, frame=frame, label=label or f"{xi1} | {xi2} | {eta}")

    def coefficients(self, x, t, u):
        b = {"x": x, "t": t, "u": u}
        return tuple(ex.evaluate(c, b) for c in (self.xi1, self.xi2, self.eta))


@dataclass(frozen=True)
class GeneratorSet:
    algebra: str
    generators: tuple[Generator, ...]
    frame: str
    note: str = ""


@dataclass(frozen=True)
class TerminalSpec:
    T: float
    value: Expr = field(default_factory=lambda: ex.const(1.0))


@dataclass(frozen=True)
class BarrierSpec:
    H: Expr
    R: Expr
    a: float
    b: float
    K: float
    T: float

    def shifted(self, dH: float = 0.0, dR: float = 0.0) -> "BarrierSpec":
        return BarrierSpec(self.H + ex.const(dH), self.R + ex.const(dR), self.a, self.b, self.K, self.T)


@dataclass(frozen=True)
class Region:
    x: tuple[float, float]
    t: tuple[float, float]
    excluded: str = "none"
    # Returns a boolean mask of points that must not be sampled.
    exclude: Callable | None = field(default=None, compare=False)

    def allowed(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        ok = (x > 0) & (x >= self.x[0]) & (x <= self.x[1]) & (t >= self.t[0]) & (t <= self.t[1])
        if self.exclude is not None:
            ok &= ~np.asarray(self.exclude(x, t), dtype=bool)
        return ok


@dataclass(frozen=True)
class ClosedFormCase:
    id: str
    solution: Expr
    source: Expr
    params: Params
    constants: Mapping[str, float]
    boundary: TerminalSpec | BarrierSpec
    generators: GeneratorSet
    region: Region
    solution_text: str
    source_text: str
    status: str = "as-printed"
    notes: str = ""

    @property
    def problem(self) -> PdeProblem:
        return PdeProblem(self.params, self.source)

    @property
    def is_barrier(self) -> bool:
        return isinstance(self.boundary, BarrierSpec)

    @property
    def T(self) -> float:
        return self.boundary.T

    def violations(self) -> list[str]:
        return validate_constraints(self.id, self.params, self.constants)


# ---------------------------------------------------------------------------
# printed formulas
# ---------------------------------------------------------------------------

_CAL_A = ("exp((1/8)*x^(1-2*gamma)*(4*((2*alpha)/(1-2*gamma) - (2*lambda*rho*x^delta)/(-2*gamma+delta+1)"
          " - beta*x/(gamma-1))/rho^2 + x))")
_E_HALF = "exp(lambda*x^delta/(delta*rho) - beta*x/rho^2 - Gamma*x/2)"
_E_CHAIN = "exp(a*(gamma-1)*(t-T))"

_SOLUTION = {
    "T-Generic": (
        "exp((rho^2*(beta^2*B^2*rho^6*w^2 - 2*B^2*rho^6*(exp(beta*w)-1) + 2*beta*B^2*rho^6*w"
        " - 4*beta^3*(exp(beta*w) + B*rho^2*x*w - 1)) - 4*alpha^2*beta^2*(exp(beta*w)-1)"
        " - 4*alpha*beta*B*rho^4*(beta*w - exp(beta*w) + 1))/(8*beta^3*rho^2))"),
    "T-GammaOne": "exp(log(x)^2/(2*rho^2*(t-T)))",
    "T-GammaHalf": "exp(-2*x*(t-T)/(rho^2*T*t))",
    "T-DeltaChain": (
        "exp(B/A^3*(B*exp(A*(gamma-1)^2*rho^2*(T-t)) - A^2*x^(1-gamma)"
        " + A*x^(-gamma)*exp((1/2)*A*(gamma-1)^2*rho^2*(T-t))*(A*x + B*(gamma-1)^2*rho^2*(t-T)*x^gamma)"
        " - B))"),
    "B-Generic": (
        "sqrt(x)/calA*log(abs(x^(8*(gamma-1))*exp(-2*(gamma-1)^2*rho^2*t)/(256*c)"
        " + c*x^(8*(1-gamma))*exp(2*(gamma-1)^2*rho^2*t)))"),
    "B-GammaOne": (
        "x^((a-beta)/rho^2 + 1/2)*(a^4*t^2 + a^2*(log(x) - 2*a*t)*log(x) + 12*rho^4)"
        "*exp((alpha + lambda*rho*x^delta/(delta-1))/(rho^2*x))/(2*rho^4*(log(x) - a*t)^2)"),
    "B-GammaHalf": (
        "x^(1/4 - alpha/rho^2)*exp((lambda*rho*x^delta - beta*delta*x)/(delta*rho^2))"
        "*(x^((1/8)*(4*a*t - c*rho^2/a + 2))*exp((1/64)*(c^2*rho^4/a^2 + 16*a^2*t^2 - 64*a*x/rho^2"
        " - 16*Gamma - 8*c*rho^2*t + 16*log(x)^2 + 28)) - x^(1/4)*Delta*exp(-Gamma*x/2))"),
    "B-DeltaChain": (
        "x^(gamma/2 + lambda/rho)*exp((B^2*(gamma-1)^3*rho^8/a^3 + 4*B*(gamma-1)*rho^4*x^(1-gamma)/a"
        " - 4*B*(gamma-1)^2*rho^4*b^(1-gamma)*K^(1-gamma)*t*E1"
        " + 4*x^(1-2*gamma)*(2*alpha/(2*gamma-1) + beta*x/(gamma-1))"
        " + 4*a*b^(1-2*gamma)*K^(1-2*gamma)*x^(-gamma)*E1*(2*x*b^gamma*K^gamma - b*K*x^gamma*E1)/(gamma-1))"
        "/(8*rho^2))"),
}

_SOURCE = {
    "T-Generic": "-(1/(2*rho^2))*u*(alpha^2 + beta*rho^2 + B*rho^4*x - 2*beta*rho^2*log(abs(u)))",
    "T-GammaOne": "rho^2*u*log(abs(u))/log(x)^2",
    "T-GammaHalf": "rho^2*u*log(abs(u))/(4*x) - 2*x*u/(rho^2*T^2)",
    "T-DeltaChain": "-(1/2)*(gamma-1)^2*rho^2*u*(A*log(abs(u)) + B*x^(1-gamma))",
    "B-Generic": (
        "x^(-2*gamma-5/2)/(32*rho^2)*(16*(gamma-1)^2*rho^4*x^(4*gamma+1)/calA*exp(-2*calA*u/sqrt(x))"
        " + u*(32*alpha*gamma*rho^2*x^(2*gamma+3/2) + 32*alpha*lambda*rho*x^(delta+5/2)"
        " - 16*alpha^2*x^(5/2) - 32*alpha*beta*x^(7/2) + 32*beta*lambda*rho*x^(delta+7/2)"
        " + x^(9/2)*((gamma-1)^2*rho^4 - 16*beta^2)"
        " - 8*rho^2*x^(2*gamma+5/2)*(beta*(2-4*gamma) + (gamma-1)^2*rho^2)"
        " - 16*lambda*rho^3*(2*gamma-delta)*x^(2*gamma+delta+3/2) - 4*rho^4*x^(4*gamma+1/2)"
        " - 16*lambda^2*rho^2*x^(2*delta+5/2)))"),
    "B-GammaOne": (
        "(1/8)*(a^4*x^(a/rho^2 - beta/rho^2 + 1/2)*exp((alpha*(delta-1) + lambda*rho*x^delta)/((delta-1)*rho^2*x))"
        "/rho^6 + 4*rho^2*u^2*x^(-a/rho^2 + beta/rho^2 - 1/2)"
        "*exp((-alpha*delta + alpha - lambda*rho*x^delta)/((delta-1)*rho^2*x))"
        " - u/(rho^2*x^2)*(4*alpha^2 - 4*lambda*rho*x^(delta+1)*(2*beta + (delta-2)*rho^2)"
        " + 4*lambda^2*rho^2*x^(2*delta) - 8*alpha*(lambda*rho*x^delta + x*(rho^2-beta))"
        " + x^2*(rho^2 - 2*beta)^2))"),
    "B-GammaHalf": (
        "(16*a^2*(u*x + Delta*x^(3/2 - alpha/rho^2)*E) - 32*alpha*beta*u - 8*Gamma*rho^4*u"
        " + 32*alpha*lambda*rho*u*x^(delta-1) - 16*lambda^2*rho^2*u*x^(2*delta-1)"
        " - 16*lambda*rho^3*u*x^(delta-1) + 16*delta*lambda*rho^3*u*x^(delta-1) + 32*beta*lambda*rho*u*x^delta"
        " + 16*rho^4*(u/x + Delta*x^(-alpha/rho^2 - 1/2)*E)"
        "*log(abs(x^(alpha/rho^2 - 1/2)*exp(-lambda*x^delta/(delta*rho) + beta*x/rho^2 + Gamma*x/2)*u + Delta))"
        " - 16*alpha^2*u/x + 16*alpha*rho^2*u/x - 16*beta^2*u*x + 4*Gamma*rho^4*u/x - 3*rho^4*u/x"
        " + 4*Gamma*rho^4*Delta*x^(-alpha/rho^2 - 1/2)*E - 4*Gamma^2*rho^4*Delta*x^(3/2 - alpha/rho^2)*E"
        " + rho^4*Delta*x^(-alpha/rho^2 - 1/2)*E)/(32*rho^2)"),
    # The printed prefactor x^{-2(gamma+1)u} is read as x^{-2(gamma+1)} * u.
    "B-DeltaChain": (
        "x^(-2*(gamma+1))*u/(8*(2*gamma-1)*rho^2)*(4*a*x^3*(2*alpha - 2*gamma*(alpha + beta*x) + beta*x)"
        " - 4*a*(gamma-1)*(2*gamma-1)*rho*x^(2*gamma+2)*((gamma*rho + 2*lambda)*log(x) - 2*rho*log(abs(u)))"
        " + (2*gamma-1)*(4*rho*x^(2*gamma+1)*(2*alpha*(gamma*rho + lambda) + beta*x*((2*gamma-1)*rho + 2*lambda))"
        " - 4*B*(gamma-1)^2*rho^4*x^(gamma+3) + rho^2*x^(4*gamma)*((gamma-2)*gamma*rho^2 - 4*lambda^2 - 4*lambda*rho)"
        " - 4*x^2*(alpha + beta*x)^2))"),
}

_PIECES = {
    "T-Generic": {"w": "t-T"},
    "B-Generic": {"calA": _CAL_A},
    "B-GammaHalf": {"E": _E_HALF},
    "B-DeltaChain": {"E1": _E_CHAIN},
}

_BARRIER = {
    "B-Generic": "b*K*exp((1/4)*(gamma-1)*rho^2*(t-T))",
    "B-GammaOne": "b*K*exp(a*(t-T))",
    "B-GammaHalf": "b*K*exp(-a*(t-T))",
    "B-DeltaChain": "b*K*exp(-a*(t-T))",
}

_ALGEBRA = {
    "T-Generic": ("A^4_4", TRANSFORMED, [
        ("0", "1", "0"),
        ("0", "0", "exp(-2*beta/rho^2*t)*u"),
        ("2*beta/rho^2", "0", "B*u"),
        ("2*exp(-2*beta/rho^2*t)", "0", "exp(-2*beta/rho^2*t)*(2*beta/rho^2*x + 2*B*t)*u"),
    ]),
    "T-GammaOne": ("A^3_3,8", TRANSFORMED, [
        ("0", "1", "0"),
        ("2*x", "4*t", "0"),
        ("4*x*t", "4*t^2", "-(x^2)*u"),
    ]),
    "T-GammaHalf": ("A^3_3,8", AMBIGUOUS, [
        ("0", "1", "0"),
        ("2*x", "4*t", "(4*alpha-rho^2)*u/rho^2"),
        ("4*x*t", "4*t^2", "-(x^2 + 2*(rho^2-4*alpha)*t/rho^2)*u"),
    ]),
    "T-DeltaChain": ("A^4_4", TRANSFORMED, [
        ("0", "1", "0"),
        ("0", "0", "exp(A*t)*u"),
        ("A", "0", "-B*u"),
        ("2*exp(A*t)", "0", "exp(A*t)*(2*B*t - A*x)*u"),
    ]),
    "B-Generic": ("A^1_2,2", AMBIGUOUS, [
        ("0", "1", "0"),
        ("exp(t)*x", "2*exp(t)", "-(exp(t)/4)*(x^2-2)*u"),
    ]),
    "B-GammaOne": ("A^9_3,5", TRANSFORMED, [
        ("0", "1", "0"),
        ("1", "0", "a/rho^2*u"),
        ("x - 2*a/rho^2*t", "2*t", "-((2 - a/rho^2*x + 2*a^2/rho^4*t)*u - a^2/rho^4*exp(-B*x))"),
    ]),
    "B-GammaHalf": ("A^2_3,8", AMBIGUOUS, [
        ("0", "1", "0"),
        ("4*a/rho^2*exp(-8*a/rho^2*t)*x", "-exp(-8*a/rho^2*t)",
         "2*a/rho^2*exp(-8*a/rho^2*t)*(2*(2*a/rho^2 + Gamma)*Delta*exp(-(1/2)*Gamma*x^2)*x^(5/2)"
         " + (4*a/rho^2*x^2 + 1)*u)"),
        ("4*a/rho^2*exp(8*a/rho^2*t)*x", "exp(8*a/rho^2*t)",
         "-(2*a/rho^2*exp(8*a/rho^2*t)*(2*(2*a/rho^2 - Gamma)*Delta*exp(-(1/2)*Gamma*x^2)*x^(5/2)"
         " + (4*a/rho^2*x^2 - 1)*u))"),
    ]),
    "B-DeltaChain": ("A^4_4", AMBIGUOUS, [
        ("0", "1", "0"),
        ("0", "0", "exp(A*t)*u"),
        ("A", "0", "-B*u"),
        ("2*exp(A*t)", "0", "-(exp(A*t)*(A*x - 2*B*t)*u)"),
    ]),
}

_FRAME_NOTES = {
    "B-GammaOne": "printed with d/dx next to d/dtau; read in (log x, -rho^2 t/2, phi) where the "
                  "barrier conditions hold",
}

# ---------------------------------------------------------------------------
# defaults, constraints, regions
# ---------------------------------------------------------------------------


def default_params(case_id: str) -> Params:
    _check_id(case_id)
    T = 1.0
    if case_id == "T-Generic":
        return Params(alpha=0.3, beta=0.5, gamma=0.0, delta=0.5, lam=0.0, rho=0.7)
    if case_id == "T-GammaOne":
        rho, lam = 1.0, 0.3
        return Params(alpha=lam * rho, beta=rho ** 2 / 2, gamma=1.0, delta=0.0, lam=lam, rho=rho)
    if case_id == "T-GammaHalf":
        rho = 3.0
        return Params(alpha=rho ** 2 / 4, beta=2.0 / T, gamma=0.5, delta=0.5, lam=0.0, rho=rho)
    if case_id == "T-DeltaChain":
        g, rho = 0.3, 1.0
        return Params(alpha=0.0, beta=0.0, gamma=g, delta=2 * g - 1, lam=-g * rho / 2, rho=rho)
    if case_id == "B-Generic":
        return Params(alpha=0.2, beta=0.1, gamma=0.3, delta=0.4, lam=0.1, rho=1.0)
    if case_id == "B-GammaOne":
        return Params(alpha=0.2, beta=0.1, gamma=1.0, delta=0.5, lam=0.3, rho=1.0)
    if case_id == "B-GammaHalf":
        return Params(alpha=0.2, beta=0.1, gamma=0.5, delta=0.5, lam=0.3, rho=1.0)
    g = 0.3
    return Params(alpha=0.2, beta=0.1, gamma=g, delta=2 * g - 1, lam=0.3, rho=0.7)


def default_constants(case_id: str, p: Params | None = None) -> dict[str, float]:
    """Free constants (defaults 1, b = 1/2) plus the algebra constants tied to them."""
    p = p or default_params(case_id)
    k: dict[str, float] = {"T": 1.0}
    if case_id == "T-Generic":
        k.update(B=1.0, A=-2 * p.beta / p.rho ** 2)
    elif case_id == "T-GammaOne":
        k.update(A=0.5, Gamma=0.0)
    elif case_id == "T-GammaHalf":
        k.update(A=2 * p.alpha / p.rho ** 2, B=0.0, Gamma=0.0)
    elif case_id == "T-DeltaChain":
        k.update(A=1.0, B=1.0)
    elif case_id == "B-Generic":
        k.update(c=1.0, A=-0.5, b=0.5, K=1.0, a=-0.25 * (p.gamma - 1) * p.rho ** 2)
    elif case_id == "B-GammaOne":
        k.update(a=-1.0, b=0.5, K=1.0)
        k["B"] = -k["a"] / p.rho ** 2
    elif case_id == "B-GammaHalf":
        k.update(a=1.0, c=1.0, Gamma=1.0, Delta=1.0, b=0.5, K=1.0, A=1.0)
        k["B"] = -16 * k["a"] ** 2 / p.rho ** 4
    elif case_id == "B-DeltaChain":
        k.update(a=1.0, B=1.0, b=0.5, K=1.0)
        k["A"] = 2 * k["a"] / ((1 - p.gamma) * p.rho ** 2)
    return k


def _close(a: float, b: float, tol: float = 1e-12) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _eq(label, lhs, rhs):
    return (label, lambda p, k: _close(lhs(p, k), rhs(p, k)), lhs, rhs)


def _cond(label, pred):
    return (label, lambda p, k: bool(pred(p, k)), None, None)


_GENERIC_SPLIT = [
    _cond("gamma != 1", lambda p, k: not _close(p.gamma, 1.0)),
    _cond("gamma != 1/2", lambda p, k: not _close(p.gamma, 0.5)),
    _cond("delta != 2*gamma - 1", lambda p, k: not _close(p.delta, 2 * p.gamma - 1)),
]

_CONSTRAINTS = {
    "T-Generic": [
        _eq("gamma = 0", lambda p, k: p.gamma, lambda p, k: 0.0),
        _eq("lambda = 0", lambda p, k: p.lam, lambda p, k: 0.0),
        _cond("beta != 0", lambda p, k: p.beta != 0.0),
        _eq("A = -2*beta/rho^2", lambda p, k: k["A"], lambda p, k: -2 * p.beta / p.rho ** 2),
    ],
    "T-GammaOne": [
        _eq("gamma = 1", lambda p, k: p.gamma, lambda p, k: 1.0),
        _eq("alpha = lambda*rho", lambda p, k: p.alpha, lambda p, k: p.lam * p.rho),
        _eq("beta = rho^2/2", lambda p, k: p.beta, lambda p, k: p.rho ** 2 / 2),
        _eq("delta = 0", lambda p, k: p.delta, lambda p, k: 0.0),
        _eq("A = 1/2", lambda p, k: k["A"], lambda p, k: 0.5),
        _eq("Gamma = 0", lambda p, k: k["Gamma"], lambda p, k: 0.0),
    ],
    "T-GammaHalf": [
        _eq("gamma = 1/2", lambda p, k: p.gamma, lambda p, k: 0.5),
        _eq("alpha = rho^2/4", lambda p, k: p.alpha, lambda p, k: p.rho ** 2 / 4),
        _eq("beta = 2/T", lambda p, k: p.beta, lambda p, k: 2 / k["T"]),
        _eq("lambda = 0", lambda p, k: p.lam, lambda p, k: 0.0),
        _eq("A = 2*alpha/rho^2", lambda p, k: k["A"], lambda p, k: 2 * p.alpha / p.rho ** 2),
        _eq("B = 0", lambda p, k: k["B"], lambda p, k: 0.0),
        _eq("Gamma = 0", lambda p, k: k["Gamma"], lambda p, k: 0.0),
    ],
    "T-DeltaChain": [
        _eq("delta = 2*gamma - 1", lambda p, k: p.delta, lambda p, k: 2 * p.gamma - 1),
        _cond("gamma != 1", lambda p, k: not _close(p.gamma, 1.0)),
        _cond("gamma != 1/2", lambda p, k: not _close(p.gamma, 0.5)),
        _eq("alpha = 0", lambda p, k: p.alpha, lambda p, k: 0.0),
        _eq("beta = 0", lambda p, k: p.beta, lambda p, k: 0.0),
        _eq("lambda = -gamma*rho/2", lambda p, k: p.lam, lambda p, k: -p.gamma * p.rho / 2),
        _cond("A != 0", lambda p, k: k["A"] != 0.0),
    ],
    "B-Generic": _GENERIC_SPLIT + [
        _cond("c != 0", lambda p, k: k["c"] != 0.0),
        _eq("A = -1/2", lambda p, k: k["A"], lambda p, k: -0.5),
    ],
    "B-GammaOne": [
        _eq("gamma = 1", lambda p, k: p.gamma, lambda p, k: 1.0),
        _cond("delta != 1", lambda p, k: not _close(p.delta, 1.0)),
        _cond("a < 0", lambda p, k: k["a"] < 0),
        _eq("B = -a/rho^2", lambda p, k: k["B"], lambda p, k: -k["a"] / p.rho ** 2),
    ],
    "B-GammaHalf": [
        _eq("gamma = 1/2", lambda p, k: p.gamma, lambda p, k: 0.5),
        _cond("delta != 0", lambda p, k: not _close(p.delta, 0.0)),
        _cond("a > 0", lambda p, k: k["a"] > 0),
        _eq("A = 1", lambda p, k: k["A"], lambda p, k: 1.0),
        _eq("B = -16*a^2/rho^4", lambda p, k: k["B"], lambda p, k: -16 * k["a"] ** 2 / p.rho ** 4),
    ],
    "B-DeltaChain": [
        _eq("delta = 2*gamma - 1", lambda p, k: p.delta, lambda p, k: 2 * p.gamma - 1),
        _cond("gamma != 1", lambda p, k: not _close(p.gamma, 1.0)),
        _cond("gamma != 1/2", lambda p, k: not _close(p.gamma, 0.5)),
        _cond("a > 0", lambda p, k: k["a"] > 0),
        _eq("A = 2*a/((1-gamma)*rho^2)", lambda p, k: k["A"],
            lambda p, k: 2 * k["a"] / ((1 - p.gamma) * p.rho ** 2)),
    ],
}

_BARRIER_FAMILY = [
    _cond("b in [0, 1]", lambda p, k: 0.0 <= k["b"] <= 1.0),
    _cond("K > 0", lambda p, k: k["K"] > 0),
]


def _region(case_id: str) -> Region:
    if case_id == "T-GammaOne":
        return Region((1.2, 3.0), (0.1, 0.9), "x = 1 (log(x)^2 = 0) and t = T",
                      lambda x, t: (np.abs(np.log(x)) < 1e-3) | (np.abs(t - 1.0) < 1e-3))
    if case_id == "T-GammaHalf":
        return Region((0.5, 2.0), (0.5, 0.99), "t near 0 (1/t singularity)",
                      lambda x, t: t < 1e-3)
    if case_id == "B-GammaOne":
        return Region((1.5, 3.0), (0.1, 0.9), "log(x) = a t (double pole)",
                      lambda x, t: np.abs(np.log(x) + t) < 1e-3)
    if case_id in ("B-Generic", "B-GammaHalf", "B-DeltaChain"):
        return Region((0.8, 2.5), (0.1, 0.9), "none on the sampled box")
    return Region((0.5, 2.0), (0.5, 0.99), "none on the sampled box")


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _check_id(case_id: str):
    if case_id not in CASE_IDS:
        raise CatalogError(f"unknown case id {case_id!r}; expected one of {', '.join(CASE_IDS)}")


def _names(k: Mapping[str, float]) -> set[str]:
    return set(PARAM_NAMES) | set(k) | {"A", "B", "T", "calA", "E", "E1", "w"}


def _build(case_id: str, text: str, p: Params, k: Mapping[str, float]) -> Expr:
    names = _names(k)
    e = ex.parse(text, names)
    pieces = {name: ex.parse(src, names) for name, src in _PIECES.get(case_id, {}).items()}
    if pieces:
        e = ex.substitute(e, pieces)
    return ex.bind(e, {**p.as_dict(), **k})


def barrier_H(case_id: str, a: float, b: float, K: float, T: float, p: Params) -> Expr:
    """Printed barrier function of a barrier case, as an expression in t."""
    _check_id(case_id)
    if case_id not in BARRIER_IDS:
        raise CatalogError(f"{case_id} is a terminal-condition case and has no barrier")
    e = ex.parse(_BARRIER[case_id], set(PARAM_NAMES) | {"a", "b", "K", "T"})
    return ex.bind(e, {**p.as_dict(), "a": a, "b": b, "K": K, "T": T})


def induced_R(case: ClosedFormCase) -> Expr:
    """R(t) = u(H(t), t)."""
    if not isinstance(case.boundary, BarrierSpec):
        raise CatalogError(f"{case.id} is a terminal-condition case and has no barrier")
    return ex.substitute(case.solution, {"x": case.boundary.H})


def validate_constraints(case_id: str, p: Params, constants: Mapping[str, float] | None = None) -> list[str]:
    """Printed constraints that ``p`` and ``constants`` violate (empty when all hold)."""
    _check_id(case_id)
    k = default_constants(case_id, p)
    k.update(constants or {})
    rules = list(_CONSTRAINTS[case_id])
    if case_id in BARRIER_IDS:
        rules += _BARRIER_FAMILY
    out = []
    for label, ok, lhs, rhs in rules:
        try:
            good = ok(p, k)
        except (KeyError, ZeroDivisionError) as err:
            out.append(f"{label}: cannot evaluate ({err})")
            continue
        if not good:
            if lhs is not None:
                out.append(f"{label} violated ({lhs(p, k):.6g} vs {rhs(p, k):.6g})")
            else:
                out.append(f"{label} violated")
    return out


def get_case(case_id: str, params: Params | None = None, **constants: float) -> ClosedFormCase:
    """A catalog case with defaults, optionally overriding parameters and free constants."""
    _check_id(case_id)
    p = params or default_params(case_id)
    k = default_constants(case_id, p)
    k.update(constants)
    solution = _build(case_id, _SOLUTION[case_id], p, k)
    source = _build(case_id, _SOURCE[case_id], p, k)
    if case_id in BARRIER_IDS:
        H = barrier_H(case_id, k["a"], k["b"], k["K"], k["T"], p)
        R = ex.substitute(solution, {"x": H})
        boundary: TerminalSpec | BarrierSpec = BarrierSpec(H, R, k["a"], k["b"], k["K"], k["T"])
    else:
        boundary = TerminalSpec(k["T"])
    algebra, frame, rows = _ALGEBRA[case_id]
    bindings = {**p.as_dict(), **k}
    gens = tuple(Generator.from_text(*row, frame=frame, constants=bindings) for row in rows)
    return ClosedFormCase(
        id=case_id, solution=solution, source=source, params=p, constants=k, boundary=boundary,
        generators=GeneratorSet(algebra, gens, frame, _FRAME_NOTES.get(case_id, "")),
        region=_region(case_id), solution_text=_SOLUTION[case_id], source_text=_SOURCE[case_id],
        notes=_FRAME_NOTES.get(case_id, ""),
    )


def all_cases() -> list[ClosedFormCase]:
    return [get_case(i) for i in CASE_IDS]


def constraint_summary(case_id: str) -> str:
    _check_id(case_id)
    return "; ".join(label for label, *_ in _CONSTRAINTS[case_id])
