"""Pointwise exterior algebra and field-level operators over chart coordinates.

Conventions
-----------
* An ``AltForm`` of degree k on R^m stores one coefficient per strictly
  increasing multi-index I, so ``a = sum_I a_I dx^I`` and
  ``dx^I(e_I) = 1``.
* ``eval_form`` is the determinant expansion ``a(v_1..v_k) = sum_I a_I det(V_I)``.
* Interior products contract the FIRST slot: ``(v _| a)(w..) = a(v, w..)``.
* ``d`` places the new differential in front: ``d(f dx^I) = sum_j df/dx_j dx^j ^ dx^I``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb, fsum
from typing import Callable, Sequence

import numpy as np

from . import scalar

__all__ = [
    "AltForm",
    "FormField",
    "VectorField",
    "multi_indices",
    "wedge",
    "wedge_power",
    "eval_form",
    "interior_product",
    "pullback",
    "exterior_derivative",
    "exterior_derivative_fd",
    "d_field",
    "lie_bracket",
]


@lru_cache(maxsize=None)
def multi_indices(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(dim), degree))


@lru_cache(maxsize=None)
def _position(dim: int, degree: int) -> dict[tuple[int, ...], int]:
    return {I: n for n, I in enumerate(multi_indices(dim, degree))}


def _merge_sign(I: Sequence[int], J: Sequence[int]) -> int:
    inversions = sum(1 for i in I for j in J if i > j)
    return -1 if inversions % 2 else 1


@dataclass(frozen=True, eq=False)
class AltForm:
    dim: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.degree <= self.dim:
            raise ValueError(f"degree {self.degree} outside [0, {self.dim}]")
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if c.shape != (comb(self.dim, self.degree),):
            raise ValueError("coefficient count does not match C(dim, degree)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def indices(self):
        return multi_indices(self.dim, self.degree)

    @classmethod
    def zero(cls, dim: int, degree: int) -> "AltForm":
        return cls(dim, degree, np.zeros(comb(dim, degree)))

    @classmethod
    def basis(cls, dim: int, index: Sequence[int], coeff: float = 1.0) -> "AltForm":
        """``coeff * dx^{i1} ^ ... ^ dx^{ik}`` for any (not necessarily sorted) index."""
        index = tuple(index)
        if len(set(index)) < len(index):
            return cls.zero(dim, len(index))
        order = sorted(range(len(index)), key=lambda r: index[r])
        sign = _perm_sign(order)
        out = np.zeros(comb(dim, len(index)))
        out[_position(dim, len(index))[tuple(sorted(index))]] = sign * coeff
        return cls(dim, len(index), out)

    @classmethod
    def from_covector(cls, row: Sequence[float]) -> "AltForm":
        row = np.asarray(row, dtype=float)
        return cls(row.size, 1, row)

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "AltForm":
        """2-form with ``a(v, w) = v^T mat w``; mat must be antisymmetric."""
        mat = np.asarray(mat, dtype=float)
        m = mat.shape[0]
        return cls(m, 2, [mat[i, j] for i, j in multi_indices(m, 2)])

    def to_matrix(self) -> np.ndarray:
        if self.degree != 2:
            raise ValueError("to_matrix needs a 2-form")
        mat = np.zeros((self.dim, self.dim))
        for c, (i, j) in zip(self.coeffs, self.indices):
            mat[i, j] = c
            mat[j, i] = -c
        return mat

    def top(self) -> float:
        """The single coefficient of a top-degree form."""
        if self.degree != self.dim:
            raise ValueError("not a top-degree form")
        return float(self.coeffs[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "AltForm") -> "AltForm":
        _same_shape(self, other)
        return AltForm(self.dim, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: "AltForm") -> "AltForm":
        _same_shape(self, other)
        return AltForm(self.dim, self.degree, self.coeffs - other.coeffs)

    def __neg__(self) -> "AltForm":
        return AltForm(self.dim, self.degree, -self.coeffs)

    def __mul__(self, c: float) -> "AltForm":
        return AltForm(self.dim, self.degree, c * self.coeffs)

    __rmul__ = __mul__

    def __xor__(self, other: "AltForm") -> "AltForm":
        return wedge(self, other)

    def __repr__(self):
        terms = [
            f"{c:+.6g} d{''.join(map(str, I))}"
            for c, I in zip(self.coeffs, self.indices)
            if c != 0
        ]
        return f"AltForm(dim={self.dim}, degree={self.degree}: {' '.join(terms) or '0'})"


def _perm_sign(order: Sequence[int]) -> int:
    order = list(order)
    sign = 1
    for i in range(len(order)):
        while order[i] != i:
            j = order[i]
            order[i], order[j] = order[j], order[i]
            sign = -sign
    return sign


def _same_shape(a: AltForm, b: AltForm):
    if a.dim != b.dim or a.degree != b.degree:
        raise ValueError("forms of different dimension or degree")


def wedge(a: AltForm, b: AltForm) -> AltForm:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    k = a.degree + b.degree
    if k > a.dim:
        raise ValueError("wedge degree exceeds dimension")
    pos = _position(a.dim, k)
    terms: list[list[float]] = [[] for _ in range(comb(a.dim, k))]
    for ca, I in zip(a.coeffs, a.indices):
        if ca == 0:
            continue
        sI = set(I)
        for cb, J in zip(b.coeffs, b.indices):
            if cb == 0 or sI.intersection(J):
                continue
            terms[pos[tuple(sorted(I + J))]].append(_merge_sign(I, J) * (ca * cb))
    # fsum is correctly rounded, so the result does not depend on term order
    return AltForm(a.dim, k, [fsum(t) for t in terms])


def wedge_power(a: AltForm, k: int) -> AltForm:
    out = AltForm(a.dim, 0, [1.0])
    for _ in range(k):
        out = wedge(out, a)
    return out


def eval_form(a: AltForm, *vectors) -> float:
    if len(vectors) != a.degree:
        raise ValueError(f"{a.degree}-form applied to {len(vectors)} vectors")
    if a.degree == 0:
        return float(a.coeffs[0])
    V = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    if V.shape[0] != a.dim:
        raise ValueError("vector length does not match form dimension")
    return float(
        sum(c * np.linalg.det(V[list(I), :]) for c, I in zip(a.coeffs, a.indices) if c)
    )


def interior_product(v, a: AltForm) -> AltForm:
    if a.degree == 0:
        raise ValueError("interior product of a 0-form")
    v = np.asarray(v, dtype=float)
    pos = _position(a.dim, a.degree - 1)
    out = np.zeros(comb(a.dim, a.degree - 1))
    for c, I in zip(a.coeffs, a.indices):
        for r, i in enumerate(I):
            out[pos[I[:r] + I[r + 1 :]]] += (-1) ** r * c * v[i]
    return AltForm(a.dim, a.degree - 1, out)


def pullback(a: AltForm, L) -> AltForm:
    """``(L^* a)(v..) = a(L v..)`` for a linear map ``L`` of shape (a.dim, src)."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != a.dim:
        raise ValueError("linear map does not land in the form's space")
    src = L.shape[1]
    k = a.degree
    if k > src:
        raise ValueError(f"cannot pull a {k}-form back to dimension {src}")
    if k == 0:
        return AltForm(src, 0, a.coeffs.copy())
    out = np.zeros(comb(src, k))
    for n, J in enumerate(multi_indices(src, k)):
        cols = L[:, list(J)]
        out[n] = sum(c * np.linalg.det(cols[list(I), :]) for c, I in zip(a.coeffs, a.indices) if c)
    return AltForm(src, k, out)


# fields ---------------------------------------------------------------------


class _Field:
    """Common machinery: components evaluated over the numeric tower.

    ``components(*xs)`` returns a sequence of scalars; ``jet_fn`` (optional)
    returns (values, jacobian) directly for fields that are cheaper to
    differentiate by hand.
    """

    size: int

    def __init__(self, dim: int, components: Callable | None = None, jet_fn: Callable | None = None):
        if components is None and jet_fn is None:
            raise ValueError("need components or jet_fn")
        self.dim = dim
        self.components = components
        self.jet_fn = jet_fn

    def __call__(self, x) -> np.ndarray:
        if self.components is None:
            return self.jet_fn(np.asarray(x, dtype=float))[0]
        return np.array([float(c) for c in self.components(*[float(v) for v in x])])

    def jet(self, x, order: int = 1):
        """Values and derivatives: (values, jac[c, j]) or (values, jac, hess[c, j, k])."""
        x = np.asarray(x, dtype=float)
        if order == 1 and self.jet_fn is not None:
            return self.jet_fn(x)
        if self.components is None:
            raise ValueError("second-order jet needs generic components")
        return scalar.jet(self.components, x, order)


class FormField(_Field):
    def __init__(self, dim: int, degree: int, components=None, jet_fn=None):
        super().__init__(dim, components, jet_fn)
        self.degree = degree
        self.size = comb(dim, degree)

    @classmethod
    def from_exprs(cls, exprs, degree: int = 1) -> "FormField":
        exprs = list(exprs)
        dim = len(exprs[0].coords)
        return cls(dim, degree, lambda *xs: [e(*xs) for e in exprs])

    def at(self, x) -> AltForm:
        return AltForm(self.dim, self.degree, self(x))


class VectorField(_Field):
    def __init__(self, dim: int, components=None, jet_fn=None):
        super().__init__(dim, components, jet_fn)
        self.size = dim

    @classmethod
    def from_exprs(cls, exprs) -> "VectorField":
        exprs = list(exprs)
        return cls(len(exprs), lambda *xs: [e(*xs) for e in exprs])


def _d_from_jet(dim: int, degree: int, jac: np.ndarray) -> np.ndarray:
    pos = _position(dim, degree + 1)
    out = np.zeros(comb(dim, degree + 1))
    for c, I in enumerate(multi_indices(dim, degree)):
        for j in range(dim):
            if j in I:
                continue
            sign = -1 if sum(1 for i in I if i < j) % 2 else 1
            out[pos[tuple(sorted(I + (j,)))]] += sign * jac[c, j]
    return out


def exterior_derivative(w: FormField, x) -> AltForm:
    _, jac = w.jet(x)
    return AltForm(w.dim, w.degree + 1, _d_from_jet(w.dim, w.degree, jac))


def d_field(w: FormField) -> FormField:
    """The field ``dw``, differentiable once more (uses second-order jets of w)."""
    dim, k = w.dim, w.degree

    def jet_fn(x):
        _, jac, hess = w.jet(x, order=2)
        vals = _d_from_jet(dim, k, jac)
        djac = np.column_stack([_d_from_jet(dim, k, hess[:, :, j]) for j in range(dim)])
        return vals, djac

    return FormField(dim, k + 1, jet_fn=jet_fn)


def exterior_derivative_fd(form_at: Callable[[np.ndarray], AltForm], x, h: float = 1e-5) -> AltForm:
    """``d`` of a form-valued function by central differences of its coefficients."""
    x = np.asarray(x, dtype=float)
    base = form_at(x)
    jac = np.zeros((base.coeffs.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        jac[:, j] = (form_at(x + e).coeffs - form_at(x - e).coeffs) / (2 * h)
    return AltForm(base.dim, base.degree + 1, _d_from_jet(base.dim, base.degree, jac))


def lie_bracket(X: VectorField, Y: VectorField, x) -> np.ndarray:
    """``[X, Y]^k = X^j d_j Y^k - Y^j d_j X^k``."""
    xv, dx = X.jet(x)
    yv, dy = Y.jet(x)
    return dy @ xv - dx @ yv
