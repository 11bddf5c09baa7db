"""The line bundle of covectors proportional to theta, trivialised as M x R.

A point (p, sigma) stands for the covector sigma * theta_p.  In these
coordinates (p_1..p_m, sigma) the energy is sigma itself, the vertical field
is d/dsigma and the lifted Reeb field is (xi_0(p), 0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import ManifoldSpec, reeb_field, reeb_jet
from .exterior import AltForm, FormField, VectorField, d_field, exterior_derivative, lie_bracket
from .flows import DEFAULT_CONFIG, IntegratorConfig, reeb_flow

__all__ = [
    "SympPoint",
    "CotangentCoords",
    "energy",
    "to_cotangent",
    "energy_from_cotangent",
    "x_theta",
    "x_theta_cotangent",
    "xi_theta",
    "h_flow",
    "g_flow",
    "foliation_point",
    "x_theta_field",
    "xi_theta_field",
    "energy_gradient",
    "check_structure_identities",
    "canonical_two_form",
    "canonical_two_form_field",
]


@dataclass(frozen=True)
class SympPoint:
    p: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def coords(self) -> np.ndarray:
        """Tube coordinates (p_1, ..., p_m, sigma)."""
        return np.append(self.p, self.sigma)

    @classmethod
    def from_coords(cls, x) -> "SympPoint":
        x = np.asarray(x, dtype=float)
        return cls(x[:-1], x[-1])


@dataclass(frozen=True)
class CotangentCoords:
    x: np.ndarray
    pvec: np.ndarray


def energy(alpha: SympPoint) -> float:
    return alpha.sigma


def to_cotangent(M: ManifoldSpec, alpha: SympPoint) -> CotangentCoords:
    return CotangentCoords(alpha.p.copy(), alpha.sigma * M.theta_at(alpha.p))


def energy_from_cotangent(M: ManifoldSpec, c: CotangentCoords, v=None) -> float:
    """Recover E from pvec = E * theta(x) using any v with theta(v) != 0."""
    th = M.theta_at(c.x)
    if v is None:
        v = th
    return float(c.pvec @ v / (th @ v))


def x_theta(alpha: SympPoint) -> np.ndarray:
    out = np.zeros(alpha.p.size + 1)
    out[-1] = 1.0
    return out


def x_theta_cotangent(M: ManifoldSpec, alpha: SympPoint) -> np.ndarray:
    """Pushforward of X^theta under (p, sigma) -> (x, sigma theta(x)): (0, theta)."""
    m = alpha.p.size
    D = np.zeros((2 * m, m + 1))
    D[:m, :m] = np.eye(m)
    # d(sigma theta(x)) = sigma Dtheta dx + theta dsigma
    _, Th = M.theta_field.jet(alpha.p)
    D[m:, :m] = alpha.sigma * Th
    D[m:, m] = M.theta_at(alpha.p)
    return D @ x_theta(alpha)


def xi_theta(M: ManifoldSpec, alpha: SympPoint) -> np.ndarray:
    return np.append(reeb_field(M, alpha.p), 0.0)


def h_flow(alpha: SympPoint, t: float) -> SympPoint:
    return SympPoint(alpha.p, alpha.sigma + t)


def g_flow(M: ManifoldSpec, alpha: SympPoint, t: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> SympPoint:
    return SympPoint(reeb_flow(M, alpha.p, t, cfg), alpha.sigma)


def foliation_point(M: ManifoldSpec, p, t: float, sigma: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> SympPoint:
    """The leaf chart through p evaluated at t + i sigma: (g_t(p), sigma)."""
    return SympPoint(reeb_flow(M, p, t, cfg), sigma)


# fields in (p, sigma) coordinates -------------------------------------------


def x_theta_field(M: ManifoldSpec) -> VectorField:
    d = M.m + 1

    def jet_fn(x):
        v = np.zeros(d)
        v[-1] = 1.0
        return v, np.zeros((d, d))

    return VectorField(d, jet_fn=jet_fn)


def xi_theta_field(M: ManifoldSpec) -> VectorField:
    m, d = M.m, M.m + 1

    def jet_fn(x):
        xi, D = reeb_jet(M, x[:m])
        jac = np.zeros((d, d))
        jac[:m, :m] = D
        return np.append(xi, 0.0), jac

    return VectorField(d, jet_fn=jet_fn)


def energy_gradient(alpha: SympPoint) -> np.ndarray:
    """dE in (p, sigma) coordinates."""
    return x_theta(alpha)


def check_structure_identities(M: ManifoldSpec, alpha: SympPoint) -> tuple[float, float, float]:
    """Residuals of xi(E) = 0, X(E) = 1 and [xi, X] = 0 at alpha."""
    dE = energy_gradient(alpha)
    xi = xi_theta(M, alpha)
    X = x_theta(alpha)
    bracket = lie_bracket(xi_theta_field(M), x_theta_field(M), alpha.coords)
    return abs(float(dE @ xi)), abs(float(dE @ X) - 1.0), float(np.linalg.norm(bracket))


def canonical_two_form_field(M: ManifoldSpec) -> FormField:
    """d(sigma * pi^* theta) as a differentiable 2-form field on (p, sigma)."""
    m = M.m
    theta = M.theta

    def lam(*xs):
        p, s = xs[:m], xs[m]
        return [s * e(*p) for e in theta] + [0.0]

    return d_field(FormField(m + 1, 1, lam))


def canonical_two_form(M: ManifoldSpec, alpha: SympPoint) -> AltForm:
    """dsigma ^ theta + sigma dtheta at alpha."""
    w = canonical_two_form_field(M)
    return AltForm(w.dim, 2, w(alpha.coords))


def canonical_closedness(M: ManifoldSpec, alpha: SympPoint) -> float:
    return exterior_derivative(canonical_two_form_field(M), alpha.coords).norm()
