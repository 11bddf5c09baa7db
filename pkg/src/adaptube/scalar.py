"""Forward-mode numeric tower: plain floats, first-order and second-order duals.

``Dual`` carries a value and a dense gradient, ``Dual2`` additionally a dense
Hessian.  The elementary functions at module level (``sin``, ``exp``, ...)
dispatch on the argument type, so the same composed function can be evaluated
on floats, numpy arrays (batched, value only) or either dual type.

Values are computed with exactly the same float operations as the plain path,
so ``f(x)`` and ``f(Dual(x, ...)).val`` agree bit for bit.  A ``Dual`` may also
carry an array of values with gradients of shape (d, k); ``jet_batch`` uses
this to differentiate many points in one pass.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Dual",
    "Dual2",
    "EvaluationError",
    "DomainError",
    "evaluate_with_derivatives",
    "seed",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "tanh",
    "ipow",
    "value_of",
    "jet",
    "jet_batch",
]


class EvaluationError(ArithmeticError):
    """Raised when a composed function produces a non-finite or undefined value."""


class DomainError(EvaluationError):
    """Argument outside the domain of an elementary function (log, sqrt)."""


_REAL = (int, float, np.floating, np.integer)


class Dual:
    """First-order dual number ``val + grad . eps``."""

    __slots__ = ("val", "grad")
    __array_ufunc__ = None  # make numpy scalars defer to our reflected ops

    def __init__(self, val: float, grad: np.ndarray):
        self.val = val
        self.grad = grad

    def _lift(self, c) -> "Dual":
        return Dual(c, np.zeros_like(self.grad))

    def _unary(self, f0: float, f1: float) -> "Dual":
        return Dual(f0, f1 * self.grad)

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val + o.val, self.grad + o.grad)
        if isinstance(o, _REAL):
            return Dual(self.val + o, self.grad.copy())
        return NotImplemented

    def __radd__(self, o):
        if isinstance(o, _REAL):
            return Dual(o + self.val, self.grad.copy())
        return NotImplemented

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val - o.val, self.grad - o.grad)
        if isinstance(o, _REAL):
            return Dual(self.val - o, self.grad.copy())
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, _REAL):
            return Dual(o - self.val, -self.grad)
        return NotImplemented

    def __neg__(self):
        return Dual(-self.val, -self.grad)

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.val * o.val, o.val * self.grad + self.val * o.grad)
        if isinstance(o, _REAL):
            return Dual(self.val * o, o * self.grad)
        return NotImplemented

    def __rmul__(self, o):
        if isinstance(o, _REAL):
            return Dual(o * self.val, o * self.grad)
        return NotImplemented

    def __truediv__(self, o):
        if isinstance(o, Dual):
            if np.any(o.val == 0):
                raise EvaluationError("division by zero")
            q = self.val / o.val
            return Dual(q, (self.grad - q * o.grad) / o.val)
        if isinstance(o, _REAL):
            if o == 0:
                raise EvaluationError("division by zero")
            return Dual(self.val / o, self.grad / o)
        return NotImplemented

    def __rtruediv__(self, o):
        if isinstance(o, _REAL):
            return self._lift(float(o)) / self
        return NotImplemented

    def __pow__(self, k):
        return ipow(self, k)

    def __repr__(self):
        return f"Dual({self.val!r}, {self.grad!r})"


class Dual2:
    """Second-order dual: value, gradient and symmetric Hessian."""

    __slots__ = ("val", "grad", "hess")
    __array_ufunc__ = None

    def __init__(self, val: float, grad: np.ndarray, hess: np.ndarray):
        self.val = val
        self.grad = grad
        self.hess = hess

    def _lift(self, c) -> "Dual2":
        return Dual2(c, np.zeros_like(self.grad), np.zeros_like(self.hess))

    def _unary(self, f0: float, f1: float, f2: float) -> "Dual2":
        g = self.grad
        return Dual2(f0, f1 * g, f1 * self.hess + f2 * np.outer(g, g))

    def __add__(self, o):
        if isinstance(o, Dual2):
            return Dual2(self.val + o.val, self.grad + o.grad, self.hess + o.hess)
        if isinstance(o, _REAL):
            return Dual2(self.val + o, self.grad.copy(), self.hess.copy())
        return NotImplemented

    def __radd__(self, o):
        if isinstance(o, _REAL):
            return Dual2(o + self.val, self.grad.copy(), self.hess.copy())
        return NotImplemented

    def __sub__(self, o):
        if isinstance(o, Dual2):
            return Dual2(self.val - o.val, self.grad - o.grad, self.hess - o.hess)
        if isinstance(o, _REAL):
            return Dual2(self.val - o, self.grad.copy(), self.hess.copy())
        return NotImplemented

    def __rsub__(self, o):
        if isinstance(o, _REAL):
            return Dual2(o - self.val, -self.grad, -self.hess)
        return NotImplemented

    def __neg__(self):
        return Dual2(-self.val, -self.grad, -self.hess)

    def __mul__(self, o):
        if isinstance(o, Dual2):
            cross = np.outer(self.grad, o.grad)
            return Dual2(
                self.val * o.val,
                o.val * self.grad + self.val * o.grad,
                o.val * self.hess + self.val * o.hess + cross + cross.T,
            )
        if isinstance(o, _REAL):
            return Dual2(self.val * o, o * self.grad, o * self.hess)
        return NotImplemented

    def __rmul__(self, o):
        if isinstance(o, _REAL):
            return Dual2(o * self.val, o * self.grad, o * self.hess)
        return NotImplemented

    def __truediv__(self, o):
        if isinstance(o, Dual2):
            if o.val == 0:
                raise EvaluationError("division by zero")
            q = self.val / o.val
            gq = (self.grad - q * o.grad) / o.val
            cross = np.outer(o.grad, gq)
            hq = (self.hess - q * o.hess - cross - cross.T) / o.val
            return Dual2(q, gq, hq)
        if isinstance(o, _REAL):
            if o == 0:
                raise EvaluationError("division by zero")
            return Dual2(self.val / o, self.grad / o, self.hess / o)
        return NotImplemented

    def __rtruediv__(self, o):
        if isinstance(o, _REAL):
            return self._lift(float(o)) / self
        return NotImplemented

    def __pow__(self, k):
        return ipow(self, k)

    def __repr__(self):
        return f"Dual2({self.val!r}, {self.grad!r}, {self.hess!r})"


def _guard(fn: Callable[[float], float], x: float) -> float:
    if isinstance(x, np.ndarray):
        with np.errstate(all="ignore"):
            out = getattr(np, fn.__name__)(x)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite value in {fn.__name__}")
        return out
    try:
        return fn(x)
    except OverflowError as exc:
        raise EvaluationError(f"overflow in {fn.__name__}({x!r})") from exc
    except ValueError as exc:
        raise DomainError(f"{fn.__name__}({x!r}) undefined") from exc


def _apply(x, fn, d1, d2):
    """Chain rule for a scalar function with derivative callbacks d1, d2."""
    if isinstance(x, Dual2):
        v = x.val
        return x._unary(_guard(fn, v), d1(v), d2(v))
    if isinstance(x, Dual):
        v = x.val
        return x._unary(_guard(fn, v), d1(v))
    if isinstance(x, np.ndarray):
        return getattr(np, fn.__name__)(x)
    return _guard(fn, x)


def sin(x):
    return _apply(x, math.sin, cos, lambda v: -sin(v))


def cos(x):
    return _apply(x, math.cos, lambda v: -sin(v), lambda v: -cos(v))


def exp(x):
    return _apply(x, math.exp, exp, exp)


def tanh(x):
    def d1(v):
        t = tanh(v)
        return 1.0 - t * t

    def d2(v):
        t = tanh(v)
        return -2.0 * t * (1.0 - t * t)

    return _apply(x, math.tanh, d1, d2)


def log(x):
    v = value_of(x)
    if not isinstance(v, np.ndarray) and v <= 0:
        raise DomainError(f"log of non-positive argument {v!r}")
    return _apply(x, math.log, lambda v: 1.0 / v, lambda v: -1.0 / (v * v))


def sqrt(x):
    v = value_of(x)
    if not isinstance(v, np.ndarray):
        if v < 0:
            raise DomainError(f"sqrt of negative argument {v!r}")
        if v == 0 and isinstance(x, (Dual, Dual2)):
            raise DomainError("sqrt is not differentiable at 0")
    return _apply(
        x,
        math.sqrt,
        lambda v: 0.5 / sqrt(v),
        lambda v: -0.25 / (v * sqrt(v)),
    )


def ipow(x, k: int):
    """Integer power; the exponent must be a Python int."""
    if not isinstance(k, (int, np.integer)):
        raise TypeError("only integer exponents are supported")
    k = int(k)
    if isinstance(x, (Dual, Dual2)):
        v = x.val
        if k < 0 and np.any(v == 0):
            raise EvaluationError("zero raised to a negative power")
        f0 = v**k
        f1 = k * v ** (k - 1) if k != 0 else 0.0
        f2 = k * (k - 1) * v ** (k - 2) if k not in (0, 1) else 0.0
        if isinstance(x, Dual2):
            return x._unary(f0, f1, f2)
        return x._unary(f0, f1)
    if isinstance(x, np.ndarray):
        return x**k
    try:
        return x**k
    except ZeroDivisionError as exc:
        raise EvaluationError("zero raised to a negative power") from exc


def value_of(x):
    return x.val if isinstance(x, (Dual, Dual2)) else x


def seed(x: Sequence[float], order: int = 1) -> list:
    """Independent variables for dense seeding in every coordinate direction."""
    x = [float(v) for v in x]
    m = len(x)
    eye = np.eye(m)
    if order == 1:
        return [Dual(v, eye[i].copy()) for i, v in enumerate(x)]
    if order == 2:
        return [Dual2(v, eye[i].copy(), np.zeros((m, m))) for i, v in enumerate(x)]
    raise ValueError("order must be 1 or 2")


def evaluate_with_derivatives(f: Callable, x: Sequence[float], order: int = 2):
    """Evaluate ``f(*x)`` with exact derivatives up to ``order``.

    Returns ``(value, gradient, hessian)``; entries not requested are ``None``.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    m = len(x)
    if order == 0:
        out = f(*[float(v) for v in x])
        val, grad, hess = float(out), None, None
    else:
        out = f(*seed(x, order))
        if isinstance(out, _REAL):  # constant function
            val, grad = float(out), np.zeros(m)
            hess = np.zeros((m, m)) if order == 2 else None
        else:
            val, grad = float(out.val), out.grad
            hess = out.hess if order == 2 else None
    for part in (val, grad, hess):
        if part is not None and not np.all(np.isfinite(part)):
            raise EvaluationError("non-finite value or derivative")
    return val, grad, hess


def jet(fn: Callable, x: Sequence[float], order: int = 1):
    """Values and derivatives of a vector-valued ``fn(*x) -> sequence``.

    Returns ``(values, jac)`` with ``jac[c, j] = d_j f_c`` or, for order 2,
    ``(values, jac, hess)`` with ``hess[c, j, k]``.
    """
    xs = seed(x, order)
    outs = list(fn(*xs))
    m = len(xs)
    vals = np.zeros(len(outs))
    jac = np.zeros((len(outs), m))
    hess = np.zeros((len(outs), m, m)) if order == 2 else None
    for c, o in enumerate(outs):
        if isinstance(o, (Dual, Dual2)):
            vals[c] = o.val
            jac[c] = o.grad
            if order == 2:
                hess[c] = o.hess
        else:
            vals[c] = o
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(jac))):
        raise EvaluationError("non-finite value or derivative")
    if order == 2 and not np.all(np.isfinite(hess)):
        raise EvaluationError("non-finite second derivative")
    return (vals, jac) if order == 1 else (vals, jac, hess)


def jet_batch(fn: Callable, X: np.ndarray):
    """First-order jets of ``fn`` at every row of X (k, d) in one evaluation.

    Returns ``(values, jac)`` of shapes (k, c) and (k, c, d).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k, d = X.shape
    xs = [Dual(X[:, j].copy(), np.outer(np.eye(d)[j], np.ones(k))) for j in range(d)]
    outs = list(fn(*xs))
    vals = np.zeros((k, len(outs)))
    jac = np.zeros((k, len(outs), d))
    for c, o in enumerate(outs):
        if isinstance(o, Dual):
            vals[:, c] = o.val
            jac[:, c, :] = np.asarray(o.grad).T
        else:
            vals[:, c] = o
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(jac))):
        raise EvaluationError("non-finite value or derivative")
    return vals, jac
