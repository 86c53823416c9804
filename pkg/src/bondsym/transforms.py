"""Equivalence transformations reducing the bond-pricing class to a heat equation.

The chain is ``trivial -> zeroing -> gamma_zero``:

* ``trivial`` rescales time by rho^2/2 (the image is the class with rho = sqrt(2));
* ``zeroing`` multiplies u by a case-dependent factor that removes the
  drift parameters alpha, beta, lambda;
* ``gamma_zero`` changes x and t so the image is
  ``phi_tau - phi_xx - f(x, phi) = 0``.  The discrete flip t -> -t,
  f -> -f is folded into these maps.

Every stage stores its point maps and inverse as expressions and its source
rule as an expression template in the source coordinates with the
placeholder ``_f`` for the incoming source.  All printed rules are affine
in ``_f``, which is what :meth:`Stage.inverse` relies on.

Inside stored expressions the target chart reuses the names ``x``, ``t``
and ``u`` for (x_bar, tau, phi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import Expr
from .model import SQRT2, CaseTag, EquationKind, Params, classify

__all__ = [
    "TransformError", "CompositionError", "Stage", "Transform",
    "EquivalenceGroupElement", "trivial", "zeroing", "gamma_zero",
    "group_element", "compose", "reduction_chain", "push_point", "pull_point",
    "pull_solution", "push_solution", "transform_source", "identity",
]

PLACEHOLDER = "_f"
_NAMES = ("alpha", "beta", "gamma", "delta", "lambda", "A", "f", "F", "Fpp",
          "z0", "z1", "z2")


class TransformError(ValueError):
    pass


class CompositionError(TransformError):
    pass


@lru_cache(maxsize=None)
def _template(text: str) -> Expr:
    e = ex.parse(text, _NAMES)
    return ex.substitute(e, {"f": ex.var(PLACEHOLDER)})


def _printed(text: str, values: dict[str, float], **exprs: Expr) -> Expr:
    """Parse a printed formula, bind numeric constants and splice in sub-expressions."""
    e = ex.bind(_template(text), values)
    return ex.substitute(e, exprs) if exprs else e


@dataclass(frozen=True)
class Stage:
    name: str
    x_map: Expr
    t_map: Expr
    u_map: Expr
    x_inv: Expr
    t_inv: Expr
    u_inv: Expr
    source_rule: Expr
    params_in: Params
    params_out: Params
    kind_in: EquationKind = EquationKind.BOND
    kind_out: EquationKind = EquationKind.BOND
    domain: str = "x > 0"
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def apply_source(self, f: Expr) -> Expr:
        g = ex.substitute(self.source_rule, {PLACEHOLDER: f})
        return ex.substitute(g, {"x": self.x_inv, "u": self.u_inv})

    def multiplier(self) -> Expr:
        """M(x) in phi = M(x) u + S(x)."""
        return ex.differentiate(self.u_map, "u")

    def shift(self) -> Expr:
        return ex.substitute(self.u_map, {"u": 0.0})

    def inverse(self) -> "Stage":
        hit = self._memo.get("inverse")
        if hit is not None:
            return hit
        slope = ex.differentiate(self.source_rule, PLACEHOLDER)
        if PLACEHOLDER in ex.free_names(slope):
            raise TransformError(f"source rule of {self.name} is not affine in f")
        offset = ex.substitute(self.source_rule, {PLACEHOLDER: 0.0})
        to_target = {"x": self.x_inv, "u": self.u_inv}
        slope_t = ex.substitute(slope, to_target)
        offset_t = ex.substitute(offset, to_target)
        rule = (ex.var(PLACEHOLDER) - offset_t) / slope_t
        inv = Stage(
            name=f"{self.name}^-1",
            x_map=self.x_inv, t_map=self.t_inv, u_map=self.u_inv,
            x_inv=self.x_map, t_inv=self.t_map, u_inv=self.u_map,
            source_rule=rule,
            params_in=self.params_out, params_out=self.params_in,
            kind_in=self.kind_out, kind_out=self.kind_in,
            domain=self.domain,
        )
        self._memo["inverse"] = inv
        return inv

    def push(self, x, t, u):
        b = {"x": x, "t": t, "u": u}
        return (ex.evaluate(self.x_map, b), ex.evaluate(self.t_map, b), ex.evaluate(self.u_map, b))

    def pull(self, xb, tau, phi):
        b = {"x": xb, "t": tau, "u": phi}
        return (ex.evaluate(self.x_inv, b), ex.evaluate(self.t_inv, b), ex.evaluate(self.u_inv, b))


@dataclass(frozen=True)
class Transform:
    """A composable chain of stages.  Parameter maps are composed eagerly."""
    stages: tuple[Stage, ...]
    params_in: Params
    params_out: Params
    kind_in: EquationKind
    kind_out: EquationKind
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def of(cls, stage: Stage) -> "Transform":
        return cls((stage,), stage.params_in, stage.params_out, stage.kind_in, stage.kind_out)

    @property
    def name(self) -> str:
        return " -> ".join(s.name for s in self.stages) or "identity"

    def param_map(self, p: Params | None = None) -> Params:
        if p is not None and not p.close_to(self.params_in):
            raise TransformError("transform was built for different parameters")
        return self.params_out

    def forward_exprs(self) -> tuple[Expr, Expr, Expr]:
        """Composed (x_bar(x), tau(t), phi(x, u))."""
        hit = self._memo.get("fwd")
        if hit is None:
            X, Tt, U = ex.var("x"), ex.var("t"), ex.var("u")
            for s in self.stages:
                U = ex.substitute(s.u_map, {"x": X, "u": U})
                X = ex.substitute(s.x_map, {"x": X})
                Tt = ex.substitute(s.t_map, {"t": Tt})
            hit = self._memo["fwd"] = (X, Tt, U)
        return hit

    def inverse_exprs(self) -> tuple[Expr, Expr, Expr]:
        return self.inverse().forward_exprs()

    def inverse(self) -> "Transform":
        hit = self._memo.get("inv")
        if hit is None:
            stages = tuple(s.inverse() for s in reversed(self.stages))
            hit = self._memo["inv"] = Transform(stages, self.params_out, self.params_in,
                                                self.kind_out, self.kind_in)
        return hit

    def push_point(self, x, t, u):
        for s in self.stages:
            x, t, u = s.push(x, t, u)
        return x, t, u

    def pull_point(self, xb, tau, phi):
        for s in reversed(self.stages):
            xb, tau, phi = s.pull(xb, tau, phi)
        return xb, tau, phi

    def transform_source(self, f: Expr) -> Expr:
        for s in self.stages:
            f = s.apply_source(f)
        return f

    def push_solution(self, u: Expr) -> Expr:
        """phi(x_bar, tau) for a solution u(x, t) of the source equation."""
        for s in self.stages:
            g = ex.substitute(s.u_map, {"u": u})
            u = ex.substitute(g, {"x": s.x_inv, "t": s.t_inv})
        return u

    def pull_solution(self, phi: Expr) -> Expr:
        """u(x, t) for a solution phi(x_bar, tau) of the target equation."""
        for s in reversed(self.stages):
            g = ex.substitute(s.u_inv, {"u": phi})
            phi = ex.substitute(g, {"x": s.x_map, "t": s.t_map})
        return phi

    def describe(self) -> str:
        X, Tt, U = self.forward_exprs()
        lines = [f"chain: {self.name}",
                 f"  x_bar = {ex.render(X)}",
                 f"  tau   = {ex.render(Tt)}",
                 f"  phi   = {ex.render(U)}",
                 f"  params: {_fmt(self.params_in)} -> {_fmt(self.params_out)}",
                 f"  equation: {self.kind_in.value} -> {self.kind_out.value}"]
        return "\n".join(lines)


def _fmt(p: Params) -> str:
    return ", ".join(f"{k}={v:.6g}" for k, v in p.as_dict().items())


def identity(p: Params, kind: EquationKind = EquationKind.BOND) -> Transform:
    x, t, u = ex.var("x"), ex.var("t"), ex.var("u")
    st = Stage("identity", x, t, u, x, t, u, ex.var(PLACEHOLDER), p, p, kind, kind)
    return Transform.of(st)


# ---------------------------------------------------------------------------
# stage constructors
# ---------------------------------------------------------------------------

def trivial(p: Params) -> tuple[Transform, Params]:
    """Time rescaling t_tilde = rho^2 t / 2 onto the rho = sqrt(2) form."""
    k = p.rho ** 2 / 2.0
    x, t, u = ex.var("x"), ex.var("t"), ex.var("u")
    out = Params(alpha=2 * p.alpha / p.rho ** 2, beta=2 * p.beta / p.rho ** 2, gamma=p.gamma,
                 delta=p.delta, lam=SQRT2 * p.lam / p.rho, rho=SQRT2)
    st = Stage("trivial", x, ex.const(k) * t, u, x, t / ex.const(k), u,
               ex.const(2.0 / p.rho ** 2) * ex.var(PLACEHOLDER), p, out)
    return Transform.of(st), out


_MULTIPLIER = {
    CaseTag.GENERIC: "exp((1/4)*x^(1-2*gamma)*((2*alpha)/(1-2*gamma)"
                     " - (2*sqrt(2)*lambda)/(delta-2*gamma+1)*x^delta - beta/(gamma-1)*x))",
    CaseTag.GAMMA_ONE: "x^(beta/2)*exp(-(alpha + sqrt(2)*lambda/(delta-1)*x^delta)/(2*x))",
    CaseTag.GAMMA_HALF: "x^(alpha/2)*exp(beta/2*x - lambda/(sqrt(2)*delta)*x^delta)",
    CaseTag.DELTA_CHAIN: "x^(-lambda/sqrt(2))*exp(-(1/4)*x^(1-2*gamma)"
                         "*(2*alpha/(2*gamma-1) + beta*x/(gamma-1)))",
}

_ZEROING_SOURCE = {
    CaseTag.GENERIC: (
        "(1/4)*x^(-2*gamma-1)*A*(4*x^(2*gamma+1)*f + (2*beta*x^(2*gamma+1)"
        " - 4*alpha*gamma*x^(2*gamma) - 4*beta*gamma*x^(2*gamma+1) + 2*lambda^2*x^(2*delta+1)"
        " + beta^2*x^3 + 2*alpha*beta*x^2"
        " - 2*sqrt(2)*lambda*x^delta*((delta-2*gamma)*x^(2*gamma) + x*(alpha+beta*x))"
        " + alpha^2*x)*u)"),
    CaseTag.GAMMA_ONE: (
        "A/(4*x^2)*(4*x^2*f + (alpha^2 + 2*lambda^2*x^(2*delta)"
        " - 2*sqrt(2)*lambda*x^delta*(alpha + (beta+delta-2)*x) + beta^2*x^2"
        " - 2*beta*x^2 + 2*alpha*beta*x - 4*alpha*x)*u)"),
    CaseTag.GAMMA_HALF: (
        "A/(4*x)*(4*x*f + (alpha-2)*alpha*u + u*(2*lambda^2*x^(2*delta)"
        " - 2*sqrt(2)*lambda*x^delta*(alpha+delta-1+beta*x) + beta*x*(2*alpha+beta*x)))"),
    CaseTag.DELTA_CHAIN: (
        "(1/4)*x^(-2*gamma-2)*A*(4*x^(2*gamma+2)*f + (2*lambda*(lambda+sqrt(2))*x^(4*gamma)"
        " + x^2*(alpha+beta*x)^2 - 2*x^(2*gamma+1)*(alpha*(2*gamma+sqrt(2)*lambda)"
        " + beta*(2*gamma+sqrt(2)*lambda-1)*x))*u)"),
}


def _require_tilde(p: Params, what: str):
    if abs(p.rho - SQRT2) > 1e-12:
        raise TransformError(f"{what} expects rescaled parameters (rho = sqrt(2)); apply trivial() first")


def _tilde_values(p: Params) -> dict[str, float]:
    return {"alpha": p.alpha, "beta": p.beta, "gamma": p.gamma, "delta": p.delta, "lambda": p.lam}


def zeroing(p_tilde: Params, case: CaseTag | str | None = None) -> tuple[Transform, Params]:
    """u_hat = A_k(x) u removing alpha, beta and lambda (k picked by ``case``)."""
    _require_tilde(p_tilde, "zeroing")
    actual = classify(p_tilde)
    case = actual if case is None else CaseTag(case)
    if case is not actual:
        raise TransformError(f"case mismatch: parameters classify as {actual.value}, not {case.value}")
    vals = _tilde_values(p_tilde)
    A = _printed(_MULTIPLIER[case], vals)
    x, t, u = ex.var("x"), ex.var("t"), ex.var("u")
    rule = _printed(_ZEROING_SOURCE[case], vals, A=A)
    out = p_tilde.with_(alpha=0.0, beta=0.0, lam=0.0)
    st = Stage(f"zeroing[{case.value}]", x, t, A * u, x, t, u / A, rule, p_tilde, out)
    return Transform.of(st), out


_GAMMA_ZERO_SOURCE = {
    "power": "-1/(4*(gamma-1)^2)*x^(-(gamma+4)/2)*(gamma*(2-gamma)*x^(2*gamma)*u + 4*x^2*f)",
    CaseTag.GAMMA_ONE: "-1/sqrt(x)*(1/4*u + f)",
    CaseTag.GAMMA_HALF: "-(x^(-5/4))*(3/4*u + 4*x*f)",
}


def gamma_zero(p_hat: Params, case: CaseTag | str | None = None) -> tuple[Transform, Params]:
    """Map the drift-free equation onto phi_tau - phi_xx - f = 0."""
    _require_tilde(p_hat, "gamma_zero")
    if max(abs(p_hat.alpha), abs(p_hat.beta), abs(p_hat.lam)) > 1e-12:
        raise TransformError("gamma_zero expects alpha = beta = lambda = 0; apply zeroing() first")
    case = classify(p_hat) if case is None else CaseTag(case)
    g = p_hat.gamma
    x, t, u = ex.var("x"), ex.var("t"), ex.var("u")
    c = ex.const
    if case is CaseTag.GAMMA_ONE:
        if abs(g - 1.0) > 1e-12:
            raise TransformError("GammaOne map requires gamma = 1")
        fwd = (ex.log(x), -t, x ** c(-0.5) * u)
        inv = (ex.exp(x), -t, ex.exp(x / c(2.0)) * u)
        rule = _printed(_GAMMA_ZERO_SOURCE[CaseTag.GAMMA_ONE], {})
    elif case is CaseTag.GAMMA_HALF:
        if abs(g - 0.5) > 1e-12:
            raise TransformError("GammaHalf map requires gamma = 1/2")
        fwd = (ex.sqrt(x), -t / c(4.0), x ** c(-0.25) * u)
        inv = (x ** c(2.0), c(-4.0) * t, x ** c(0.5) * u)
        rule = _printed(_GAMMA_ZERO_SOURCE[CaseTag.GAMMA_HALF], {})
    else:
        if abs(g - 1.0) <= 1e-12:
            raise TransformError("the power map is singular at gamma = 1; use the GammaOne map")
        k = (g - 1.0) ** 2
        fwd = (x ** c(1.0 - g), c(-k) * t, x ** c(-g / 2.0) * u)
        inv = (x ** c(1.0 / (1.0 - g)), t / c(-k), x ** c(g / (2.0 * (1.0 - g))) * u)
        rule = _printed(_GAMMA_ZERO_SOURCE["power"], {"gamma": g})
    out = p_hat.with_(gamma=0.0)
    st = Stage(f"gamma_zero[{case.value}]", *fwd, *inv, rule, p_hat, out,
               EquationKind.BOND, EquationKind.HEAT)
    return Transform.of(st), out


@dataclass(frozen=True)
class EquivalenceGroupElement:
    zeta0: float = 0.0
    zeta1: float = 1.0
    zeta2: float = 1.0
    F: Expr = field(default_factory=lambda: ex.const(0.0))

    def __post_init__(self):
        if self.zeta1 == 0.0 or self.zeta2 == 0.0:
            raise TransformError("group element requires zeta1 * zeta2 != 0")
        if ex.free_names(self.F) - {"x"}:
            raise TransformError("F must be an expression in x only")


_GROUP_SOURCE = ("(1/4)*x^((1/z2^2-5)/2)*((z2^4-1)*x^(2*gamma)*(z1*u + F)"
                 " + 4*z2^4*x^2*(z1*f + x^(2*gamma)*Fpp))")


def group_element(e: EquivalenceGroupElement, p_hat: Params) -> Transform:
    """Element of the continuous equivalence group of the drift-free equation."""
    _require_tilde(p_hat, "group_element")
    if max(abs(p_hat.alpha), abs(p_hat.beta), abs(p_hat.lam)) > 1e-12:
        raise TransformError("group_element acts on the drift-free equation (alpha = beta = lambda = 0)")
    z0, z1, z2 = e.zeta0, e.zeta1, e.zeta2
    x, t, u = ex.var("x"), ex.var("t"), ex.var("u")
    c = ex.const
    m = 0.5 * (1.0 / z2 ** 2 - 1.0)
    F = e.F
    Fpp = ex.differentiate(ex.differentiate(F, "x"), "x")
    fwd = (x ** c(1.0 / z2 ** 2), c(z0) + t / c(z2 ** 4), x ** c(m) * (c(z1) * u + F))
    x_back = x ** c(z2 ** 2)
    u_back = (u * x_back ** c(-m) - ex.substitute(F, {"x": x_back})) / c(z1)
    inv = (x_back, (t - c(z0)) * c(z2 ** 4), u_back)
    rule = _printed(_GROUP_SOURCE, {"z1": z1, "z2": z2, "gamma": p_hat.gamma}, F=F, Fpp=Fpp)
    out = p_hat.with_(gamma=1.0 + z2 ** 2 * (p_hat.gamma - 1.0))
    st = Stage(f"group[{z0:g},{z1:g},{z2:g}]", *fwd, *inv, rule, p_hat, out)
    return Transform.of(st)


def compose(chain: Sequence[Transform]) -> Transform:
    """Left-to-right composition; junctions must agree on equation and parameters."""
    if not chain:
        raise CompositionError("cannot compose an empty chain")
    stages: list[Stage] = []
    for k, T in enumerate(chain):
        if stages:
            prev = stages[-1]
            head = T.stages[0]
            junction = f"junction {k} ({prev.name} -> {head.name})"
            if prev.kind_out is not head.kind_in:
                raise CompositionError(f"{junction}: equation kinds differ "
                                       f"({prev.kind_out.value} vs {head.kind_in.value})")
            if not prev.params_out.close_to(head.params_in, 1e-10):
                raise CompositionError(f"{junction}: parameters differ "
                                       f"({_fmt(prev.params_out)} vs {_fmt(head.params_in)})")
        stages.extend(T.stages)
    return Transform(tuple(stages), stages[0].params_in, stages[-1].params_out,
                     stages[0].kind_in, stages[-1].kind_out)


def reduction_chain(p: Params, case: CaseTag | str | None = None) -> Transform:
    """compose([trivial, zeroing, gamma_zero]) for the given parameters."""
    T1, pt = trivial(p)
    T2, ph = zeroing(pt, case)
    T3, _ = gamma_zero(ph, classify(ph) if case is None else case)
    return compose([T1, T2, T3])


def push_point(T: Transform, x, t, u):
    return T.push_point(x, t, u)


def pull_point(T: Transform, xb, tau, phi):
    return T.pull_point(xb, tau, phi)


def pull_solution(T: Transform, phi: Expr) -> Expr:
    return T.pull_solution(phi)


def push_solution(T: Transform, u: Expr) -> Expr:
    return T.push_solution(u)


def transform_source(T: Transform, f: Expr, p: Params | None = None) -> Expr:
    if p is not None:
        T.param_map(p)
    return T.transform_source(f)


def target_problem(T: Transform, f: Expr):
    """The image problem (parameters, source, kind) of ``T``."""
    from .model import PdeProblem
    return PdeProblem(T.params_out, T.transform_source(f), T.kind_out)
