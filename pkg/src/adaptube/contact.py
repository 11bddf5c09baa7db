"""Pseudo-Hermitian manifold specifications and contact/CR checks.

Ambient space R^{2N} is ordered (Re z_1, Im z_1, ..., Re z_N, Im z_N); the
standard complex structure sends e_{2k-1} to e_{2k} (multiplication by i).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import scalar
from .dsl import ScalarExpr, parse
from .exterior import AltForm, FormField, exterior_derivative, wedge, wedge_power
from .sampling import halton_box

__all__ = [
    "ManifoldSpec",
    "SingularContact",
    "DegenerateContact",
    "ValidationReport",
    "standard_j",
    "ambient_names",
    "reeb_field",
    "reeb_jet",
    "contact_volume",
    "levi_distribution",
    "cr_structure",
    "validate_spec",
]

RANK_TOL = 1e-10
VOLUME_TOL = 1e-10


class SingularContact(ArithmeticError):
    """The Reeb system [theta; d theta] is rank deficient: theta is not contact."""


class DegenerateContact(ArithmeticError):
    """theta ^ (d theta)^n vanishes at a point."""


def standard_j(N: int) -> np.ndarray:
    J = np.zeros((2 * N, 2 * N))
    for k in range(N):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0
    return J


def ambient_names(N: int) -> tuple[str, ...]:
    return tuple(f"u{k + 1}" for k in range(2 * N))


@dataclass(frozen=True, eq=False)
class ManifoldSpec:
    """A (2n+1)-dimensional CR manifold on one chart, with its contact form,
    an embedding into C^N and a holomorphic extension of its Reeb field.
    """

    name: str
    n: int
    coords: tuple[str, ...]
    theta: tuple[ScalarExpr, ...]
    chart_box: np.ndarray
    embedding: tuple[ScalarExpr, ...]
    ambient_J: np.ndarray
    reeb_extension: tuple[ScalarExpr, ...]
    reeb: Optional[tuple[ScalarExpr, ...]] = None
    theta_field: FormField = field(init=False, repr=False)

    def __post_init__(self):
        m = 2 * self.n + 1
        if len(self.coords) != m:
            raise ValueError(f"expected {m} coordinates, got {len(self.coords)}")
        if len(self.theta) != m:
            raise ValueError("theta needs one component per coordinate")
        box = np.asarray(self.chart_box, dtype=float)
        if box.shape != (m, 2) or np.any(box[:, 0] >= box[:, 1]):
            raise ValueError("chart_box must be m rows of [lo, hi] with lo < hi")
        object.__setattr__(self, "chart_box", box)
        d = len(self.embedding)
        if d % 2 or d < m + 1:
            raise ValueError("embedding must have an even number (>= m+1) of components")
        J = np.asarray(self.ambient_J, dtype=float)
        if J.shape != (d, d):
            raise ValueError("ambient_J must be a square matrix matching the embedding")
        object.__setattr__(self, "ambient_J", J)
        if len(self.reeb_extension) != d:
            raise ValueError("reeb_extension needs one component per ambient coordinate")
        if self.reeb is not None and len(self.reeb) != m:
            raise ValueError("reeb needs one component per coordinate")
        object.__setattr__(self, "theta_field", FormField.from_exprs(self.theta))

    @property
    def m(self) -> int:
        return 2 * self.n + 1

    @property
    def ambient_dim(self) -> int:
        return len(self.embedding)

    @classmethod
    def from_strings(
        cls,
        name: str,
        n: int,
        coords: Sequence[str],
        theta: Sequence[str],
        chart_box,
        embedding: Sequence[str],
        reeb_extension: Sequence[str],
        ambient_J=None,
        reeb: Optional[Sequence[str]] = None,
    ) -> "ManifoldSpec":
        coords = tuple(coords)
        amb = ambient_names(len(embedding) // 2)
        if ambient_J is None:
            ambient_J = standard_j(len(embedding) // 2)
        return cls(
            name=name,
            n=n,
            coords=coords,
            theta=tuple(parse(s, coords) for s in theta),
            chart_box=chart_box,
            embedding=tuple(parse(s, coords) for s in embedding),
            ambient_J=ambient_J,
            reeb_extension=tuple(parse(s, amb) for s in reeb_extension),
            reeb=None if reeb is None else tuple(parse(s, coords) for s in reeb),
        )

    # evaluation helpers ----------------------------------------------------

    def theta_at(self, p) -> np.ndarray:
        return self.theta_field(p)

    def embed(self, p) -> np.ndarray:
        p = [float(v) for v in p]
        return np.array([float(e(*p)) for e in self.embedding])

    def embed_batch(self, P: np.ndarray) -> np.ndarray:
        return _eval_batch(self.embedding, P)

    def embed_jacobian(self, p) -> np.ndarray:
        return scalar.jet(lambda *xs: [e(*xs) for e in self.embedding], p)[1]

    def extension(self, q) -> np.ndarray:
        q = [float(v) for v in q]
        return np.array([float(e(*q)) for e in self.reeb_extension])

    def extension_batch(self, Q: np.ndarray) -> np.ndarray:
        return _eval_batch(self.reeb_extension, Q)

    def embed_jacobian_batch(self, P: np.ndarray) -> np.ndarray:
        """(k, 2N, m) Jacobians of the embedding at the rows of P."""
        return scalar.jet_batch(lambda *xs: [e(*xs) for e in self.embedding], P)[1]

    def extension_jacobian_batch(self, Q: np.ndarray) -> np.ndarray:
        """(k, 2N, 2N) Jacobians of the Reeb extension at the rows of Q."""
        return scalar.jet_batch(lambda *us: [e(*us) for e in self.reeb_extension], Q)[1]

    def sigma_field_batch(self, Q: np.ndarray) -> np.ndarray:
        """Ambient field J * extension, row-wise."""
        return self.extension_batch(Q) @ self.ambient_J.T

    def in_box(self, p, slack: float = 1e-12) -> bool:
        p = np.asarray(p)
        lo, hi = self.chart_box[:, 0], self.chart_box[:, 1]
        return bool(np.all(p >= lo - slack) and np.all(p <= hi + slack))


def _eval_batch(exprs: Sequence[ScalarExpr], X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cols = [X[:, j] for j in range(X.shape[1])]
    out = np.empty((X.shape[0], len(exprs)))
    with np.errstate(all="ignore"):
        for c, e in enumerate(exprs):
            out[:, c] = e(*cols)
    if not np.all(np.isfinite(out)):
        raise scalar.EvaluationError("non-finite value in batched evaluation")
    return out


# Reeb field -----------------------------------------------------------------


def _theta_and_dtheta(M: ManifoldSpec, p, order: int = 1):
    out = M.theta_field.jet(p, order)
    th, Th = out[0], out[1]
    Omega = Th.T - Th  # Omega[i, j] = d_i th_j - d_j th_i, so d theta(v, w) = v^T Omega w
    return (th, Omega, out[2]) if order == 2 else (th, Omega)


def _select_rows(Omega: np.ndarray) -> np.ndarray:
    """m-1 rows of d theta that are numerically independent (QR with pivoting)."""
    _, _, piv = scipy.linalg.qr(Omega.T, pivoting=True)
    return np.sort(piv[: Omega.shape[0] - 1])


def _reeb_system(th, Omega, rows=None):
    A = np.vstack([th, Omega])
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0 or s[-1] / s[0] < RANK_TOL:
        raise SingularContact(
            f"[theta; d theta] has numerical rank < {A.shape[1]} "
            f"(singular value ratio {s[-1] / s[0] if s[0] else 0.0:.3e})"
        )
    rows = _select_rows(Omega) if rows is None else np.asarray(rows)
    S = np.vstack([th, Omega[rows]])
    rhs = np.zeros(S.shape[0])
    rhs[0] = 1.0
    xi = np.linalg.solve(S, rhs)
    full = A @ xi
    full[0] -= 1.0
    if np.max(np.abs(full)) > 1e-8 * max(1.0, s[0] * np.linalg.norm(xi)):
        raise SingularContact("remaining Reeb equations not satisfied by the square solve")
    return xi, S, rows


def reeb_field(M: ManifoldSpec, p, rows=None) -> np.ndarray:
    """The Reeb vector: theta(xi) = 1 and xi _| d theta = 0.

    ``rows`` selects which m-1 rows of d theta join the theta row in the
    square solve; by default they are chosen by pivoted QR.
    """
    th, Omega = _theta_and_dtheta(M, p)
    return _reeb_system(th, Omega, rows)[0]


def reeb_jet(M: ManifoldSpec, p):
    """Reeb vector and its Jacobian ``D[i, k] = d_k xi^i`` at p."""
    th, Omega, H = _theta_and_dtheta(M, p, order=2)
    Th = M.theta_field.jet(p)[1]
    xi, S, rows = _reeb_system(th, Omega)
    m = len(th)
    D = np.zeros((m, m))
    for k in range(m):
        dOmega = H[:, :, k].T - H[:, :, k]  # d_k Omega[i, j] = H[j, i, k] - H[i, j, k]
        dS = np.vstack([Th[:, k], dOmega[rows]])
        D[:, k] = -np.linalg.solve(S, dS @ xi)
    return xi, D


def contact_volume(M: ManifoldSpec, p) -> float:
    """Top coefficient of theta ^ (d theta)^n in the chart's coordinate order."""
    theta = M.theta_field.at(p)
    dtheta = exterior_derivative(M.theta_field, p)
    value = wedge(theta, wedge_power(dtheta, M.n)).top()
    if abs(value) < VOLUME_TOL:
        raise DegenerateContact(f"theta ^ (d theta)^{M.n} = {value:.3e} at {[float(v) for v in p]}")
    return value


def levi_distribution(M: ManifoldSpec, p) -> np.ndarray:
    """Orthonormal basis of ker theta_p, one vector per row."""
    th = M.theta_at(p)
    if np.linalg.norm(th) == 0:
        raise ValueError("theta vanishes at p")
    return scipy.linalg.null_space(th[None, :]).T


def cr_structure(M: ManifoldSpec, p, v) -> np.ndarray:
    """The induced CR structure on a Levi vector: Dj^+ J Dj v."""
    Dj = M.embed_jacobian(p)
    w = M.ambient_J @ (Dj @ np.asarray(v, dtype=float))
    return np.linalg.lstsq(Dj, w, rcond=None)[0]


@dataclass
class ValidationReport:
    name: str
    samples: int
    tolerance: float
    residuals: dict = field(default_factory=dict)
    min_contact_volume: float = float("nan")
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and all(v < self.tolerance for v in self.residuals.values())

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def describe(self) -> str:
        """One line naming every failed condition."""
        bad = list(self.failures)
        bad += [f"{k}: {v:.3e} >= {self.tolerance:g}" for k, v in self.residuals.items() if not v < self.tolerance]
        return "; ".join(bad) if bad else "ok"


def validate_spec(M: ManifoldSpec, samples: int = 100, seed: int = 0, tol: float = 1e-9) -> ValidationReport:
    """Contact condition, Reeb conditions, extension consistency, J^2 = -I and
    J-invariance of the Levi distribution at Halton points of the chart box."""
    rep = ValidationReport(M.name, samples, tol)
    d = M.ambient_dim
    rep.residuals["ambient_J_squared"] = float(np.max(np.abs(M.ambient_J @ M.ambient_J + np.eye(d))))
    worst = {k: 0.0 for k in ("reeb_conditions", "reeb_consistency", "levi_invariance")}
    if M.reeb is not None:
        worst["reeb_crosscheck"] = 0.0
    vmin = np.inf
    for p in halton_box(samples, M.chart_box, seed):
        try:
            vmin = min(vmin, abs(contact_volume(M, p)))
            th, Omega = _theta_and_dtheta(M, p)
            xi = _reeb_system(th, Omega)[0]
        except (DegenerateContact, SingularContact) as exc:
            rep.failures.append(f"contact_volume: {exc}")
            break
        except scalar.EvaluationError as exc:
            rep.failures.append(f"evaluation: {exc}")
            break
        worst["reeb_conditions"] = max(
            worst["reeb_conditions"], abs(th @ xi - 1.0), float(np.max(np.abs(Omega @ xi)))
        )
        Dj = M.embed_jacobian(p)
        q = M.embed(p)
        worst["reeb_consistency"] = max(
            worst["reeb_consistency"], float(np.linalg.norm(Dj @ xi - M.extension(q)))
        )
        H = levi_distribution(M, p)
        img = Dj @ H.T
        Q, _ = np.linalg.qr(img)
        Jimg = M.ambient_J @ img
        worst["levi_invariance"] = max(
            worst["levi_invariance"], float(np.max(np.abs(Jimg - Q @ (Q.T @ Jimg))))
        )
        if M.reeb is not None:
            given = np.array([float(e(*p)) for e in M.reeb])
            worst["reeb_crosscheck"] = max(worst["reeb_crosscheck"], float(np.linalg.norm(given - xi)))
    rep.residuals.update(worst)
    rep.min_contact_volume = float(vmin)
    return rep
