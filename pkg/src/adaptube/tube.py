"""Adapted complex tubes on (p, sigma) coordinates and the identities they satisfy.

A tube is a map gamma(p, sigma) into C^N; its complex structure on tube
coordinates is the pullback J = (D gamma)^{-1} J_amb (D gamma).  The twisted
differential is d^c f(v) = -df(Jv).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import scalar
from .contact import ManifoldSpec, cr_structure, levi_distribution, reeb_field
from .exterior import (
    AltForm,
    FormField,
    VectorField,
    exterior_derivative,
    exterior_derivative_fd,
    interior_product,
    lie_bracket,
    wedge,
    wedge_power,
)
from .flows import DEFAULT_CONFIG, FD_STEP, IntegratorConfig, holomorphy_grid, sigma_flow, sigma_flow_tangent
from .registry import get_example, inner_box
from .sampling import halton_box
from .sympl import SympPoint, x_theta, xi_theta

__all__ = [
    "TubeModel",
    "ClosedFormTube",
    "FlowTube",
    "RotatedTube",
    "HolomorphyFailure",
    "CheckReport",
    "MongeAmpere",
    "build_tube_closed_form",
    "build_tube_by_flow",
    "dc",
    "ddc",
    "ma_residual",
    "monge_ampere",
    "nondegeneracy_value",
    "boundary_trace_residual",
    "lemma21_residual",
    "lie_derivative_residual",
    "nijenhuis_residual",
    "check_cr_restriction",
    "j_squared_residual",
    "compare_tubes",
    "ddc_closedness",
]

HOLOMORPHY_LIMIT = 1e-5
DEGENERATE_NORM = 1e-12


class HolomorphyFailure(RuntimeError):
    """The sigma flow of the supplied extension is not holomorphic in t + i sigma."""


@dataclass
class CheckReport:
    name: str
    samples: int
    max_residual: Optional[float]
    tolerance: float
    worst_point: Optional[list] = None
    error: Optional[str] = None
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.error is None and self.max_residual is not None and bool(self.max_residual < self.tolerance)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "worst_point": self.worst_point,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.notes:
            out["notes"] = self.notes
        return out


# tube models ------------------------------------------------------------------


class TubeModel:
    """Tube map, its Jacobian and the pulled-back complex structure."""

    kind = "abstract"

    def __init__(self, base: ManifoldSpec, sigma_max: float):
        self.base = base
        self.sigma_max = float(sigma_max)
        self.dim = base.m + 1
        self.domain = np.vstack([base.chart_box, [[-self.sigma_max, self.sigma_max]]])

    def gamma(self, x) -> np.ndarray:
        return self.gamma_batch(np.atleast_2d(x))[0]

    def jacobian(self, x) -> np.ndarray:
        return self.jacobian_batch(np.atleast_2d(x))[0]

    def j_field(self, x) -> np.ndarray:
        return _conjugate(self.jacobian(x), self.base.ambient_J)

    def j_field_batch(self, X) -> np.ndarray:
        J0 = self.base.ambient_J
        return np.array([_conjugate(A, J0) for A in self.jacobian_batch(X)])

    def gamma_batch(self, X) -> np.ndarray:
        raise NotImplementedError

    def jacobian_batch(self, X) -> np.ndarray:
        raise NotImplementedError

    def j_jet(self, x):
        """(J, dJ) with dJ[i, j, k] = d_k J[i, j]."""
        raise NotImplementedError

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        return halton_box(count, self.domain, seed)


def _conjugate(A: np.ndarray, J0: np.ndarray) -> np.ndarray:
    return np.linalg.solve(A, J0 @ A)


class ClosedFormTube(TubeModel):
    """gamma given as a composed function; derivatives from the dual tower."""

    kind = "closed-form"

    def __init__(self, base: ManifoldSpec, gamma_fn: Callable, sigma_max: float):
        super().__init__(base, sigma_max)
        self.gamma_fn = gamma_fn

    def gamma_batch(self, X):
        X = np.atleast_2d(X)
        return np.array([[float(v) for v in self.gamma_fn(*[float(c) for c in x])] for x in X])

    def jacobian_batch(self, X):
        return np.array([scalar.jet(self.gamma_fn, x)[1] for x in np.atleast_2d(X)])

    def j_jet(self, x):
        _, A, H = scalar.jet(self.gamma_fn, x, order=2)
        J0 = self.base.ambient_J
        J = _conjugate(A, J0)
        dJ = np.empty((self.dim, self.dim, self.dim))
        for k in range(self.dim):
            dA = H[:, :, k]
            # d(A^-1 J0 A) = A^-1 (J0 dA - dA J)
            dJ[:, :, k] = np.linalg.solve(A, J0 @ dA - dA @ J)
        return J, dJ


class FlowTube(TubeModel):
    """gamma(p, sigma) = sigma_flow(j(p), sigma), differentiated numerically.

    The p-columns of D gamma come from the tangent equation of the flow
    (``jacobian="tangent"``) or from central differences of step ``h``
    (``jacobian="fd"``); either way all rows of an evaluation share one step
    sequence.  The sigma column is the flow's own velocity J xi(gamma).  dJ is
    always a central difference of J with step ``jet_step``.
    """

    kind = "flow"

    def __init__(
        self,
        base: ManifoldSpec,
        sigma_max: float,
        cfg: IntegratorConfig = DEFAULT_CONFIG,
        h: float = FD_STEP,
        jet_step: float = FD_STEP,
        jacobian: str = "tangent",
    ):
        super().__init__(base, sigma_max)
        if jacobian not in ("tangent", "fd"):
            raise ValueError(f"unknown jacobian method {jacobian!r}")
        self.cfg = cfg
        self.h = h
        self.jet_step = jet_step
        self.jacobian_method = jacobian
        self.holomorphy_max: Optional[float] = None
        self._jet_cache = lru_cache(maxsize=4096)(self._j_jet_uncached)

    def gamma_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = self.base.m
        return np.atleast_2d(sigma_flow(self.base, self.base.embed_batch(X[:, :m]), X[:, m], self.cfg))

    def jacobian_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.jacobian_method == "fd":
            return self._jacobian_fd(X)
        m = self.base.m
        P = X[:, :m]
        G, dp = sigma_flow_tangent(
            self.base, self.base.embed_batch(P), self.base.embed_jacobian_batch(P), X[:, m], self.cfg
        )
        dsigma = self.base.sigma_field_batch(G)
        return np.concatenate([dp, dsigma[:, :, None]], axis=2)

    def _jacobian_fd(self, X):
        m, h = self.base.m, self.h
        k = X.shape[0]
        P = X[:, :m]
        shifts = np.vstack([np.zeros(m), h * np.eye(m), -h * np.eye(m)])  # 2m + 1 rows
        rows = (P[:, None, :] + shifts[None, :, :]).reshape(-1, m)
        sig = np.repeat(X[:, m], shifts.shape[0])
        G = sigma_flow(self.base, self.base.embed_batch(rows), sig, self.cfg)
        G = np.atleast_2d(G).reshape(k, 2 * m + 1, -1)
        center = G[:, 0]
        dp = (G[:, 1 : m + 1] - G[:, m + 1 :]) / (2 * h)  # (k, m, 2N)
        dsigma = self.base.sigma_field_batch(center)  # (k, 2N)
        return np.concatenate([dp, dsigma[:, None, :]], axis=1).transpose(0, 2, 1)

    def _j_jet_uncached(self, key):
        x = np.array(key)
        d, h = self.dim, self.jet_step
        pts = np.vstack([x, x + h * np.eye(d), x - h * np.eye(d)])
        Js = self.j_field_batch(pts)
        dJ = np.stack([(Js[1 + k] - Js[1 + d + k]) / (2 * h) for k in range(d)], axis=-1)
        return Js[0], dJ

    def j_jet(self, x):
        return self._jet_cache(tuple(float(v) for v in x))


class RotatedTube(TubeModel):
    """A deliberately non-integrable almost complex structure: J conjugated by a
    rotation whose angle grows with sigma (a negative control)."""

    kind = "rotated-control"

    def __init__(self, tube: TubeModel, rate: float = 1.0, plane=(0, 1)):
        super().__init__(tube.base, tube.sigma_max)
        self.tube = tube
        self.rate = rate
        self.plane = plane

    def _rotation(self, x):
        d = self.dim
        a = self.rate * x[-1]
        i, j = self.plane
        R = np.eye(d)
        dR = np.zeros((d, d))
        c, s = np.cos(a), np.sin(a)
        R[i, i], R[i, j], R[j, i], R[j, j] = c, -s, s, c
        dR[i, i], dR[i, j], dR[j, i], dR[j, j] = -s, -c, c, -s
        return R, self.rate * dR

    def gamma_batch(self, X):
        return self.tube.gamma_batch(X)

    def jacobian_batch(self, X):
        return self.tube.jacobian_batch(X)

    def j_field(self, x):
        return self.j_jet(x)[0]

    def j_field_batch(self, X):
        return np.array([self.j_field(x) for x in np.atleast_2d(X)])

    def j_jet(self, x):
        J, dJ = self.tube.j_jet(x)
        R, dRs = self._rotation(x)
        Jr = R.T @ J @ R
        dJr = np.empty_like(dJ)
        for k in range(self.dim):
            dR = dRs if k == self.dim - 1 else np.zeros_like(R)
            dJr[:, :, k] = dR.T @ J @ R + R.T @ dJ[:, :, k] @ R + R.T @ J @ dR
        return Jr, dJr


def build_tube_closed_form(name: str, n: int = 1, sigma_max: Optional[float] = None) -> ClosedFormTube:
    ex = get_example(name)
    M = ex.spec(n)
    return ClosedFormTube(M, ex.tube_map(M), ex.sigma_max if sigma_max is None else sigma_max)


def default_flow_grid(M: ManifoldSpec, sigma_max: float, fraction: float = 0.5, bases: int = 4):
    return (
        halton_box(bases, inner_box(M.chart_box, fraction), seed=0),
        np.linspace(-0.5, 0.5, 5),
        np.linspace(-sigma_max, sigma_max, 5),
    )


def build_tube_by_flow(
    M: ManifoldSpec,
    sigma_max: float,
    grid=None,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    h: float = FD_STEP,
    jet_step: float = FD_STEP,
    jacobian: str = "tangent",
) -> FlowTube:
    """Tube from the sigma flow of the Reeb extension, certified holomorphic on ``grid``.

    ``grid`` is (base points, t values, sigma values) for the Cauchy-Riemann
    residual; raises ``HolomorphyFailure`` if it exceeds 1e-5 anywhere.
    """
    tube = FlowTube(M, sigma_max, cfg, h, jet_step, jacobian)
    if grid is None:
        grid = default_flow_grid(M, sigma_max)
    res = holomorphy_grid(M, *grid, cfg=cfg, h=h)
    tube.holomorphy_max = float(res.max())
    if not tube.holomorphy_max <= HOLOMORPHY_LIMIT:
        raise HolomorphyFailure(
            f"Cauchy-Riemann residual {tube.holomorphy_max:.3e} exceeds {HOLOMORPHY_LIMIT:g}: "
            "the extension does not generate a holomorphic flow"
        )
    return tube


# d^c and friends -----------------------------------------------------------


def _potential_jet(f, x):
    """Gradient and Hessian of the potential in tube coordinates (None = energy)."""
    d = len(x)
    if f is None:
        g = np.zeros(d)
        g[-1] = 1.0
        return g, np.zeros((d, d))
    _, g, H = scalar.evaluate_with_derivatives(f, x, order=2)
    return g, H


def _as_coords(alpha) -> np.ndarray:
    return alpha.coords if isinstance(alpha, SympPoint) else np.asarray(alpha, dtype=float)


def dc(f, T: TubeModel, alpha) -> AltForm:
    """(d^c f)(v) = -df(J v); f is a function of tube coordinates or None for E."""
    x = _as_coords(alpha)
    g, _ = _potential_jet(f, x)
    return AltForm.from_covector(-(g @ T.j_field(x)))


def dc_field(f, T: TubeModel) -> FormField:
    def jet_fn(x):
        g, H = _potential_jet(f, x)
        J, dJ = T.j_jet(x)
        vals = -(g @ J)
        # d_j beta_k = -sum_i (H_ij J_ik + g_i d_j J_ik)
        jac = -(J.T @ H) - np.einsum("i,ikj->kj", g, dJ)
        return vals, jac

    return FormField(T.dim, 1, jet_fn=jet_fn)


def ddc(f, T: TubeModel, alpha) -> AltForm:
    return exterior_derivative(dc_field(f, T), _as_coords(alpha))


def ddc_closedness(f, T: TubeModel, alpha, h: float = FD_STEP) -> float:
    """Max coefficient of d(dd^c f), by central differences of dd^c f."""
    return float(np.max(np.abs(exterior_derivative_fd(lambda y: ddc(f, T, y), _as_coords(alpha), h).coeffs)))


class MongeAmpere(NamedTuple):
    residual: float
    top: float
    norm: float
    degenerate: bool


def monge_ampere(T: TubeModel, alpha, f=None) -> MongeAmpere:
    """Normalised top coefficient of (dd^c f)^{n+1}."""
    w = ddc(f, T, alpha)
    norm = w.norm()
    top = wedge_power(w, T.base.n + 1).top()
    if norm < DEGENERATE_NORM:
        return MongeAmpere(0.0, top, norm, True)
    return MongeAmpere(abs(top) / (norm ** (T.base.n + 1) + 1e-30), top, norm, False)


def ma_residual(T: TubeModel, alpha, f=None) -> float:
    return monge_ampere(T, alpha, f).residual


def nondegeneracy_value(T: TubeModel, alpha) -> float:
    """Top coefficient of dE ^ d^cE ^ (dd^cE)^n."""
    x = _as_coords(alpha)
    dE = AltForm.from_covector(x_theta(SympPoint.from_coords(x)))
    return wedge(wedge(dE, dc(None, T, x)), wedge_power(ddc(None, T, x), T.base.n)).top()


def boundary_trace_residual(T: TubeModel, p) -> float:
    """max |d^cE(v) + theta(v)| over a Levi basis and the Reeb vector, at sigma = 0."""
    M = T.base
    p = np.asarray(p, dtype=float)
    beta = dc(None, T, np.append(p, 0.0)).coeffs[: M.m]
    th = M.theta_at(p)
    vecs = np.vstack([levi_distribution(M, p), reeb_field(M, p)])
    return float(np.max(np.abs(vecs @ (beta + th))))


def lemma21_residual(T: TubeModel, alpha) -> float:
    """||J xi^theta - X^theta||."""
    x = _as_coords(alpha)
    a = SympPoint.from_coords(x)
    return float(np.linalg.norm(T.j_field(x) @ xi_theta(T.base, a) - x_theta(a)))


def lie_derivative_residual(T: TubeModel, alpha) -> float:
    """||xi^theta _| dd^cE||."""
    x = _as_coords(alpha)
    xi = xi_theta(T.base, SympPoint.from_coords(x))
    return interior_product(xi, ddc(None, T, x)).norm()


def _column_fields(T: TubeModel, x):
    J, dJ = T.j_jet(x)
    d = T.dim
    cols = [VectorField(d, jet_fn=lambda y, i=i: (J[:, i], dJ[:, i, :])) for i in range(d)]
    eye = np.eye(d)
    units = [VectorField(d, jet_fn=lambda y, i=i: (eye[i], np.zeros((d, d)))) for i in range(d)]
    return J, cols, units


def nijenhuis_residual(T: TubeModel, alpha) -> float:
    """max_{i<j} ||N(e_i, e_j)||, N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]."""
    x = _as_coords(alpha)
    J, cols, units = _column_fields(T, x)
    worst = 0.0
    for i in range(T.dim):
        for j in range(i + 1, T.dim):
            N = (
                lie_bracket(cols[i], cols[j], x)
                - J @ lie_bracket(cols[i], units[j], x)
                - J @ lie_bracket(units[i], cols[j], x)
                - lie_bracket(units[i], units[j], x)
            )
            worst = max(worst, float(np.linalg.norm(N)))
    return worst


def check_cr_restriction(T: TubeModel, p) -> float:
    """Agreement of the tube structure with the induced CR structure on the Levi
    distribution at sigma = 0, plus invariance of that distribution."""
    M = T.base
    p = np.asarray(p, dtype=float)
    J = T.j_field(np.append(p, 0.0))
    th = M.theta_at(p)
    worst = 0.0
    for v in levi_distribution(M, p):
        Jv = J @ np.append(v, 0.0)
        expected = np.append(cr_structure(M, p, v), 0.0)
        worst = max(worst, float(np.linalg.norm(Jv - expected)), abs(float(th @ Jv[: M.m])), abs(Jv[-1]))
    return worst


def j_squared_residual(T: TubeModel, alpha) -> float:
    J = T.j_field(_as_coords(alpha))
    return float(np.max(np.abs(J @ J + np.eye(T.dim))))


def compare_tubes(T1: TubeModel, T2: TubeModel, samples=None, seed: int = 0) -> tuple[float, float]:
    """Max deviation of gamma and of J between two tubes on their common domain.

    ``samples`` is a point array or a count of Halton points in the overlap.
    """
    lo = np.maximum(T1.domain[:, 0], T2.domain[:, 0])
    hi = np.minimum(T1.domain[:, 1], T2.domain[:, 1])
    if T1.dim != T2.dim or np.any(lo >= hi):
        raise ValueError("tube domains are disjoint")
    if samples is None or np.isscalar(samples):
        X = halton_box(int(samples or 200), np.column_stack([lo, hi]), seed)
    else:
        X = np.atleast_2d(np.asarray(samples, dtype=float))
    dg = np.max(np.linalg.norm(T1.gamma_batch(X) - T2.gamma_batch(X), axis=1))
    dJ = np.max(np.abs(T1.j_field_batch(X) - T2.j_field_batch(X)))
    return float(dg), float(dJ)
