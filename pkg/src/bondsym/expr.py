"""Small expression language: parse, evaluate, substitute and differentiate.

Expressions are immutable trees built from :class:`Const`, :class:`Var`,
the binary nodes :class:`Add`, :class:`Sub`, :class:`Mul`, :class:`Div`,
:class:`Pow`, the unary :class:`Neg` and :class:`Func` (``exp``, ``log``,
``sqrt``, ``abs`` and the internal ``sign`` produced by differentiating
``abs``).

Trees produced by :func:`differentiate` and :func:`substitute` share
subtrees, so all traversals are memoised on node identity and evaluation
goes through straight-line code generated once per root node.  The same
compiled function evaluates scalars and numpy arrays.

Grammar accepted by :func:`parse` (loosest to tightest)::

    sum     := product (('+' | '-') product)*
    product := power (('*' | '/') power)*
    power   := unary ('^' power)?          # right associative
    unary   := '-' unary | '+' unary | primary
    primary := NUMBER | NAME | NAME '(' sum ')' | '(' sum ')'

Unary minus binds tighter than ``^``, so ``-x^2`` is ``(-x)^2``; write
``-(x^2)`` for the other reading.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Add", "Sub", "Mul", "Div", "Pow", "Neg", "Func",
    "ExprError", "ExprSyntaxError", "UndeclaredIdentifierError",
    "UnboundVariableError", "ExprDomainError",
    "FUNCTIONS", "CORE_VARIABLES",
    "parse", "evaluate", "differentiate", "substitute", "bind", "render",
    "free_names", "node_count", "compile_expr", "as_expr", "const", "var",
]

FUNCTIONS = ("exp", "log", "sqrt", "abs", "sign")
CORE_VARIABLES = ("x", "t", "u")


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UndeclaredIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"undeclared identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class ExprDomainError(ExprError, ArithmeticError):
    """Raised when an operation is evaluated outside its real domain."""

    def __init__(self, message: str, point: Mapping[str, float] | None = None):
        self.point = dict(point) if point else None
        if self.point:
            where = ", ".join(f"{k}={v!r}" for k, v in sorted(self.point.items()))
            message = f"{message} at {where}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------

class Expr:
    """Base node.  Arithmetic operators build simplified trees."""

    __slots__ = ()

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return render(self)

    def __call__(self, **bindings):
        return evaluate(self, bindings)


@dataclass(frozen=True, eq=True, repr=False)
class Const(Expr):
    value: float
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expr):
    name: str
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=True, repr=False)
class _Binary(Expr):
    left: Expr
    right: Expr
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(_Binary):
    pass


class Sub(_Binary):
    pass


class Mul(_Binary):
    pass


class Div(_Binary):
    pass


class Pow(_Binary):
    @property
    def base(self) -> Expr:
        return self.left

    @property
    def exponent(self) -> Expr:
        return self.right


@dataclass(frozen=True, eq=True, repr=False)
class Neg(Expr):
    operand: Expr
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def children(self):
        return (self.operand,)

    def __repr__(self):
        return f"Neg({self.operand!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ExprError(f"unknown function {self.name!r}")

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


def const(value: float) -> Const:
    return Const(value)


def var(name: str) -> Var:
    return Var(name)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


# ---------------------------------------------------------------------------
# simplifying constructors: constant folding and 0/1 identities only
# ---------------------------------------------------------------------------

def _is(e: Expr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def _fold(fn, *args):
    try:
        with np.errstate(all="raise"):
            out = fn(*args)
    except (ArithmeticError, ValueError, FloatingPointError, ExprDomainError):
        return None
    if isinstance(out, complex) or not math.isfinite(out):
        return None
    return Const(out)


def add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda p, q: p + q, a.value, b.value) or Add(a, b)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda p, q: p - q, a.value, b.value) or Sub(a, b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(lambda p, q: p * q, a.value, b.value) or Mul(a, b)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return _fold(lambda p, q: p / q, a.value, b.value) or Div(a, b)
    return Div(a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return ONE
    if _is(b, 1.0):
        return a
    if _is(a, 1.0):
        return ONE
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(_scalar_pow, a.value, b.value) or Pow(a, b)
    return Pow(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def func(name: str, a: Expr) -> Expr:
    if isinstance(a, Const):
        folded = _fold(_SCALAR_FUNCS[name], a.value)
        if folded is not None:
            return folded
    return Func(name, a)


def exp(a) -> Expr:
    return func("exp", as_expr(a))


def log(a) -> Expr:
    return func("log", as_expr(a))


def sqrt(a) -> Expr:
    return func("sqrt", as_expr(a))


def abs_(a) -> Expr:
    return func("abs", as_expr(a))


def _scalar_pow(a: float, b: float) -> float:
    if a < 0.0 and b != math.floor(b):
        raise ExprDomainError("negative base with non-integer exponent")
    if a == 0.0 and b < 0.0:
        raise ExprDomainError("zero to a negative power")
    return a ** b


def _scalar_log(a):
    if a <= 0.0:
        raise ExprDomainError("log of non-positive argument")
    return math.log(a)


def _scalar_sqrt(a):
    if a < 0.0:
        raise ExprDomainError("sqrt of negative argument")
    return math.sqrt(a)


def _scalar_sign(a):
    if a == 0.0:
        raise ExprDomainError("sign (derivative of abs) at zero")
    return 1.0 if a > 0 else -1.0


_SCALAR_FUNCS = {
    "exp": math.exp,
    "log": _scalar_log,
    "sqrt": _scalar_sqrt,
    "abs": abs,
    "sign": _scalar_sign,
}

_REBUILD = {Add: add, Sub: sub, Mul: mul, Div: div, Pow: power}


# ---------------------------------------------------------------------------
# traversal helpers
# ---------------------------------------------------------------------------

def _postorder(root: Expr) -> list[Expr]:
    """Unique nodes of the DAG in children-first order."""
    seen: set[int] = set()
    order: list[Expr] = []
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in reversed(node.children()):
            if id(child) not in seen:
                stack.append((child, False))
    return order


def node_count(e: Expr) -> int:
    """Number of distinct nodes in the (shared) tree."""
    return len(_postorder(e))


def free_names(e: Expr) -> frozenset[str]:
    """All variable names occurring in ``e``."""
    cached = e._memo.get("free")
    if cached is not None:
        return cached
    names: dict[int, frozenset[str]] = {}
    for node in _postorder(e):
        hit = node._memo.get("free")
        if hit is None:
            if isinstance(node, Var):
                hit = frozenset((node.name,))
            elif isinstance(node, Const):
                hit = frozenset()
            else:
                hit = frozenset().union(*(names[id(c)] for c in node.children()))
            node._memo["free"] = hit
        names[id(node)] = hit
    return names[id(e)]


def _rebuild(node: Expr, kids: list[Expr]) -> Expr:
    if isinstance(node, _Binary):
        return _REBUILD[type(node)](kids[0], kids[1])
    if isinstance(node, Neg):
        return neg(kids[0])
    if isinstance(node, Func):
        return func(node.name, kids[0])
    return node


def substitute(e: Expr, mapping: Mapping[str, Expr | float]) -> Expr:
    """Simultaneously replace variables by expressions (or numbers)."""
    repl = {k: as_expr(v) for k, v in mapping.items()}
    if not repl or not (free_names(e) & repl.keys()):
        return e
    out: dict[int, Expr] = {}
    for node in _postorder(e):
        if isinstance(node, Var):
            out[id(node)] = repl.get(node.name, node)
        elif isinstance(node, Const):
            out[id(node)] = node
        elif not (free_names(node) & repl.keys()):
            out[id(node)] = node
        else:
            out[id(node)] = _rebuild(node, [out[id(c)] for c in node.children()])
    return out[id(e)]


def bind(e: Expr, values: Mapping[str, float]) -> Expr:
    """Substitute numeric values for named constants, folding what folds."""
    return substitute(e, {k: Const(float(v)) for k, v in values.items()})


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expr, var_name: str) -> Expr:
    """Symbolic partial derivative with light simplification.

    ``abs(w)`` differentiates to ``sign(w) * w'``; evaluating ``sign`` at
    zero raises :class:`ExprDomainError`.
    """
    if not isinstance(var_name, str) or not var_name:
        raise ExprError("differentiation variable must be a non-empty name")
    key = ("d", var_name)
    if key in e._memo:
        return e._memo[key]
    d: dict[int, Expr] = {}
    for node in _postorder(e):
        hit = node._memo.get(key)
        if hit is None:
            hit = _diff_node(node, var_name, d)
            node._memo[key] = hit
        d[id(node)] = hit
    return d[id(e)]


def _diff_node(node: Expr, v: str, d: dict[int, Expr]) -> Expr:
    if v not in free_names(node):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Add):
        return add(d[id(node.left)], d[id(node.right)])
    if isinstance(node, Sub):
        return sub(d[id(node.left)], d[id(node.right)])
    if isinstance(node, Neg):
        return neg(d[id(node.operand)])
    if isinstance(node, Mul):
        a, b = node.left, node.right
        return add(mul(d[id(a)], b), mul(a, d[id(b)]))
    if isinstance(node, Div):
        a, b = node.left, node.right
        da, db = d[id(a)], d[id(b)]
        if _is(db, 0.0):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    if isinstance(node, Pow):
        b, p = node.left, node.right
        db, dp = d[id(b)], d[id(p)]
        if v not in free_names(p):
            return mul(mul(p, power(b, sub(p, ONE))), db)
        if v not in free_names(b):
            return mul(mul(node, func("log", b)), dp)
        return mul(node, add(mul(dp, func("log", b)), div(mul(p, db), b)))
    if isinstance(node, Func):
        a = node.arg
        da = d[id(a)]
        if node.name == "exp":
            return mul(node, da)
        if node.name == "log":
            return div(da, a)
        if node.name == "sqrt":
            return div(da, mul(Const(2.0), node))
        if node.name == "abs":
            return mul(func("sign", a), da)
        if node.name == "sign":
            return ZERO
    raise ExprError(f"cannot differentiate node {node!r}")


# ---------------------------------------------------------------------------
# evaluation via generated straight-line code
# ---------------------------------------------------------------------------

class _Ops:
    """Array-aware primitive operations with real-domain checks."""

    @staticmethod
    def div(a, b):
        if np.any(np.asarray(b) == 0.0):
            raise _Violation("division by zero", np.asarray(b) == 0.0)
        return a / b

    @staticmethod
    def pow(a, b):
        a_arr = np.asarray(a)
        b_arr = np.asarray(b)
        bad = (a_arr < 0.0) & (b_arr != np.floor(b_arr))
        if np.any(bad):
            raise _Violation("negative base with non-integer exponent", bad)
        bad = (a_arr == 0.0) & (b_arr < 0.0)
        if np.any(bad):
            raise _Violation("zero to a negative power", bad)
        with np.errstate(over="ignore"):
            return np.power(a, b) if (a_arr.ndim or b_arr.ndim) else float(a) ** float(b)

    @staticmethod
    def exp(a):
        with np.errstate(over="ignore"):
            return np.exp(a)

    @staticmethod
    def log(a):
        bad = np.asarray(a) <= 0.0
        if np.any(bad):
            raise _Violation("log of non-positive argument", bad)
        return np.log(a)

    @staticmethod
    def sqrt(a):
        bad = np.asarray(a) < 0.0
        if np.any(bad):
            raise _Violation("sqrt of negative argument", bad)
        return np.sqrt(a)

    @staticmethod
    def abs(a):
        return np.abs(a)

    @staticmethod
    def sign(a):
        bad = np.asarray(a) == 0.0
        if np.any(bad):
            raise _Violation("sign (derivative of abs) at zero", bad)
        return np.sign(a)


class _Violation(Exception):
    def __init__(self, message, mask):
        super().__init__(message)
        self.message = message
        self.mask = np.asarray(mask)


_BINOP = {Add: "+", Sub: "-", Mul: "*"}


def compile_expr(e: Expr) -> Callable[[Mapping[str, object]], object]:
    """Return ``fn(bindings)`` evaluating ``e``; cached on the node."""
    fn = e._memo.get("fn")
    if fn is not None:
        return fn
    order = _postorder(e)
    names = {}
    lines = ["def _fn(b, O):"]
    for k, node in enumerate(order):
        ref = f"v{k}"
        names[id(node)] = ref
        if isinstance(node, Const):
            rhs = repr(node.value)
            if node.value != node.value or node.value in (float("inf"), float("-inf")):
                rhs = f"float({str(node.value)!r})"
        elif isinstance(node, Var):
            rhs = f"b[{node.name!r}]"
        elif isinstance(node, Neg):
            rhs = f"-{names[id(node.operand)]}"
        elif isinstance(node, Func):
            rhs = f"O.{node.name}({names[id(node.arg)]})"
        elif isinstance(node, Div):
            rhs = f"O.div({names[id(node.left)]}, {names[id(node.right)]})"
        elif isinstance(node, Pow):
            rhs = f"O.pow({names[id(node.left)]}, {names[id(node.right)]})"
        else:
            rhs = f"{names[id(node.left)]} {_BINOP[type(node)]} {names[id(node.right)]}"
        lines.append(f"    {ref} = {rhs}")
    lines.append(f"    return {names[id(e)]}")
    namespace: dict = {}
    exec(compile("\n".join(lines), "<bondsym.expr>", "exec"), namespace)
    fn = namespace["_fn"]
    e._memo["fn"] = fn
    return fn


def evaluate(e: Expr, bindings: Mapping[str, object]):
    """Evaluate ``e`` in IEEE double precision.

    Bindings may be floats or numpy arrays (broadcast together).  Scalar
    inputs give a Python float.  Real-domain violations raise
    :class:`ExprDomainError` naming the first offending point.
    """
    missing = free_names(e) - bindings.keys()
    if missing:
        raise UnboundVariableError(sorted(missing)[0])
    fn = compile_expr(e)
    arrays = any(isinstance(v, np.ndarray) and v.ndim for v in bindings.values())
    try:
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            out = fn(bindings, _Ops)
    except _Violation as exc:
        raise ExprDomainError(exc.message, _offending_point(bindings, exc.mask)) from None
    except ZeroDivisionError:
        raise ExprDomainError("division by zero", _offending_point(bindings, None)) from None
    except OverflowError:
        return math.inf
    if arrays:
        shape = np.broadcast_shapes(*(np.shape(v) for v in bindings.values()))
        return np.broadcast_to(np.asarray(out, dtype=float), shape)
    return float(out)


def _offending_point(bindings, mask):
    point = {}
    idx = None
    if mask is not None and mask.ndim:
        idx = tuple(int(i) for i in np.argwhere(mask)[0])
    for k, v in bindings.items():
        arr = np.asarray(v)
        if arr.ndim == 0:
            point[k] = float(arr)
        elif idx is not None:
            try:
                point[k] = float(np.broadcast_to(arr, mask.shape)[idx])
            except ValueError:
                continue
    return point


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Pow: 3, Neg: 4}
_SYMBOL = {Add: " + ", Sub: " - ", Mul: "*", Div: "/", Pow: "^"}


def render(e: Expr) -> str:
    """Unambiguous infix text that :func:`parse` reads back."""
    text: dict[int, tuple[str, int]] = {}
    for node in _postorder(e):
        if isinstance(node, Const):
            s = repr(node.value)
            if node.value < 0 or s.startswith("-"):
                text[id(node)] = (f"({s})", 9)
            elif "inf" in s or "nan" in s:
                raise ExprError(f"cannot render non-finite constant {s}")
            else:
                text[id(node)] = (s, 9)
        elif isinstance(node, Var):
            text[id(node)] = (node.name, 9)
        elif isinstance(node, Func):
            text[id(node)] = (f"{node.name}({text[id(node.arg)][0]})", 9)
        elif isinstance(node, Neg):
            inner, p = text[id(node.operand)]
            text[id(node)] = (f"-{inner}" if p == 9 else f"-({inner})", 4)
        else:
            prec = _PREC[type(node)]
            ls, lp = text[id(node.left)]
            rs, rp = text[id(node.right)]
            if isinstance(node, Pow):
                ls = ls if lp == 9 else f"({ls})"
                rs = rs if rp == 9 else f"({rs})"
            else:
                ls = ls if lp >= prec and lp != 4 else f"({ls})"
                # Parsing is left-associative, so an equal-precedence right
                # operand keeps its parentheses to reproduce the same tree.
                rs = rs if rp > prec and rp != 4 else f"({rs})"
            text[id(node)] = (f"{ls}{_SYMBOL[type(node)]}{rs}", prec)
    return text[id(e)][0]


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str, declared: Iterable[str]):
        self.text = text
        self.declared = set(CORE_VARIABLES) | set(declared)
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        raw = text.encode("utf-8")
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                offset = len(text[:pos].encode("utf-8"))
                offset += len(text[pos:]) - len(text[pos:].lstrip())
                raise ExprSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}", offset)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), len(text[:start].encode("utf-8"))))
            pos = m.end()
        self.end = len(raw)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", "", self.end)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value:
            what = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off)

    def parse(self) -> Expr:
        e = self.sum()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", off)
        return e

    def sum(self):
        e = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.product()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def product(self):
        e = self.power()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.power()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def power(self):
        base = self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.power())
        return base

    def unary(self):
        kind, text, off = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise UndeclaredIdentifierError(text, off)
                self.take()
                arg = self.sum()
                self.expect(")")
                return Func(text, arg)
            if text not in self.declared:
                raise UndeclaredIdentifierError(text, off)
            return Var(text)
        if kind == "op" and text == "(":
            e = self.sum()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", off)


def parse(text: str, declared_constants: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into an unsimplified tree.

    Identifiers must be ``x``, ``t``, ``u`` or one of ``declared_constants``.
    Syntax errors carry the byte offset of the offending token.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, declared_constants).parse()
