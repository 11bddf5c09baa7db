"""Integral curves: the Reeb flow on the chart, the sigma flow in the ambient
space, and the Cauchy-Riemann residual of the resulting complex-time map.

Integrators accept batched states (k, d); all rows then share one step
sequence, which keeps finite differences across rows smooth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .contact import ManifoldSpec, reeb_field

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "LeftChartBox",
    "MaxStepsExceeded",
    "integrate",
    "reeb_flow",
    "sigma_flow",
    "sigma_flow_tangent",
    "ambient_flow",
    "holomorphy_residual",
    "holomorphy_grid",
    "FoliationChart",
    "FD_STEP",
]

FD_STEP = 1e-5


class LeftChartBox(RuntimeError):
    def __init__(self, exit_time: float, point):
        super().__init__(f"trajectory left the chart box at t={exit_time:.6g}")
        self.exit_time = exit_time
        self.point = np.asarray(point)


class MaxStepsExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rkf45"
    step: float = 1e-2
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 100_000

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if self.step <= 0 or self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("step and tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    points: list = field(default_factory=list)
    rejected: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    @property
    def steps(self) -> int:
        return len(self.times) - 1


# Fehlberg 4(5) tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_E = tuple(b5 - b4 for b4, b5 in zip(_B4, _B5))


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rkf45_step(f, y, h):
    ks = []
    for a in _A:
        yi = y
        for aj, kj in zip(a, ks):
            yi = yi + (h * aj) * kj
        ks.append(f(yi))
    y4 = y + h * sum(b * k for b, k in zip(_B4, ks) if b)
    err = h * sum(e * k for e, k in zip(_E, ks) if e)
    return y4, err, ks[0]


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    y0,
    T: float,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    box: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate ``y' = f(y)`` from 0 to T (T may be negative).

    ``box`` (rows of [lo, hi]) aborts with ``LeftChartBox`` as soon as an
    accepted point leaves it.
    """
    y = np.array(y0, dtype=float)
    traj = Trajectory([0.0], [y.copy()])
    if T == 0:
        return traj

    def check(t, yy):
        if box is not None:
            lo, hi = box[:, 0] - 1e-12, box[:, 1] + 1e-12
            if np.any(yy < lo) or np.any(yy > hi):
                raise LeftChartBox(t, yy)

    direction = 1.0 if T > 0 else -1.0
    span = abs(T)
    if cfg.method == "rk4":
        nsteps = max(1, math.ceil(span / cfg.step - 1e-9))
        if nsteps > cfg.max_steps:
            raise MaxStepsExceeded(f"{nsteps} fixed steps requested")
        h = T / nsteps
        for i in range(1, nsteps + 1):
            y = _rk4_step(f, y, h)
            t = T if i == nsteps else i * h
            check(t, y)
            traj.times.append(t)
            traj.points.append(y.copy())
        return traj

    f0 = f(y)
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
    d0, d1 = np.max(np.abs(y) / scale), np.max(np.abs(f0) / scale)
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(span, max(h, 1e-8 * span))
    t = 0.0
    attempts = 0
    while t < span:
        attempts += 1
        if attempts > cfg.max_steps:
            raise MaxStepsExceeded(f"more than {cfg.max_steps} steps before t={T}")
        last = h >= span - t
        if last:
            h = span - t
        y_new, err, _ = _rkf45_step(f, y, direction * h)
        tol = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = float(np.max(np.abs(err) / tol))
        if not np.isfinite(ratio):
            ratio = 1e10
        if ratio <= 1.0:
            t = span if last else t + h
            y = y_new
            check(direction * t, y)
            traj.times.append(direction * t)
            traj.points.append(y.copy())
        else:
            traj.rejected += 1
        factor = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
        h *= factor
    return traj


# flows on a manifold spec -------------------------------------------------


def reeb_flow(M: ManifoldSpec, p, t: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """g_t(p): the Reeb flow inside the chart box."""
    return integrate(lambda y: reeb_field(M, y), p, t, cfg, box=M.chart_box).final


def sigma_flow(M: ManifoldSpec, q0, sigma, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Flow of the ambient field J * extension for time ``sigma``.

    ``q0`` may be a batch (k, 2N) with one ``sigma`` per row; the rows are
    integrated together in rescaled time s in [0, 1] (q' = sigma * J xi(q)).
    """
    q0 = np.asarray(q0, dtype=float)
    single = q0.ndim == 1
    Q = np.atleast_2d(q0)
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (Q.shape[0],)).reshape(-1, 1)
    if not np.any(sig):
        return q0.copy()
    out = integrate(lambda Y: sig * M.sigma_field_batch(Y), Q, 1.0, cfg).final
    return out[0] if single else out


def sigma_flow_tangent(M: ManifoldSpec, q0, V0, sigma, cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Sigma flow together with its tangent map applied to V0.

    q0 is (k, 2N), V0 is (k, 2N, r); returns (q, V) at time ``sigma`` per row,
    integrating V' = sigma J D(extension)(q) V alongside the flow.
    """
    Q = np.atleast_2d(np.asarray(q0, dtype=float))
    V = np.asarray(V0, dtype=float).reshape(Q.shape[0], Q.shape[1], -1)
    k, n2, r = V.shape
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (k,))
    if not np.any(sig):
        return Q.copy(), V.copy()
    J0 = M.ambient_J
    s3 = sig[:, None, None]

    def rhs(Y):
        q, W = Y[:, :n2], Y[:, n2:].reshape(k, n2, r)
        dq = sig[:, None] * M.sigma_field_batch(q)
        dW = s3 * (J0 @ (M.extension_jacobian_batch(q) @ W))
        return np.concatenate([dq, dW.reshape(k, -1)], axis=1)

    Y = integrate(rhs, np.concatenate([Q, V.reshape(k, -1)], axis=1), 1.0, cfg).final
    return Y[:, :n2], Y[:, n2:].reshape(k, n2, r)


def ambient_flow(M: ManifoldSpec, q0, t: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Flow of the Reeb extension itself in the ambient space."""
    q0 = np.asarray(q0, dtype=float)
    single = q0.ndim == 1
    out = integrate(lambda Y: M.extension_batch(Y), np.atleast_2d(q0), t, cfg).final
    return out[0] if single else out


def _cr_rows(M: ManifoldSpec, p, t, sigmas, cfg, h):
    """Residuals ||dG/dsigma - J dG/dt|| at (t, sigma) for each sigma."""
    q0 = reeb_flow(M, p, t, cfg)
    # short hops from g_t(p) keep the t-stencil smooth in t
    qm = reeb_flow(M, q0, -h, cfg)
    qp = reeb_flow(M, q0, h, cfg)
    a_m, a_0, a_p = M.embed(qm), M.embed(q0), M.embed(qp)
    rows, sig = [], []
    for s in sigmas:
        rows += [a_m, a_p, a_0, a_0]
        sig += [s, s, s - h, s + h]
    G = sigma_flow(M, np.array(rows), np.array(sig), cfg).reshape(len(sigmas), 4, -1)
    dt = (G[:, 1] - G[:, 0]) / (2 * h)
    ds = (G[:, 3] - G[:, 2]) / (2 * h)
    return np.linalg.norm(ds - dt @ M.ambient_J.T, axis=1)


def holomorphy_residual(
    M: ManifoldSpec, p, t: float, sigma: float, cfg: IntegratorConfig = DEFAULT_CONFIG, h: float = FD_STEP
) -> float:
    """Cauchy-Riemann defect of (t, sigma) -> sigma_flow(j(g_t p), sigma)."""
    return float(_cr_rows(M, p, t, [sigma], cfg, h)[0])


def holomorphy_grid(M: ManifoldSpec, base_points, ts, sigmas, cfg=DEFAULT_CONFIG, h=FD_STEP) -> np.ndarray:
    """Residual array of shape (len(base_points), len(ts), len(sigmas))."""
    out = np.zeros((len(base_points), len(ts), len(sigmas)))
    for i, p in enumerate(base_points):
        for j, t in enumerate(ts):
            out[i, j] = _cr_rows(M, p, t, sigmas, cfg, h)
    return out


@dataclass(frozen=True)
class FoliationChart:
    """The leaf through p: (t, sigma) -> (g_t(p), sigma) and its ambient image."""

    M: ManifoldSpec
    p: np.ndarray
    cfg: IntegratorConfig = DEFAULT_CONFIG

    def base(self, t: float) -> np.ndarray:
        return reeb_flow(self.M, self.p, t, self.cfg)

    def ambient(self, t: float, sigma: float) -> np.ndarray:
        return sigma_flow(self.M, self.M.embed(self.base(t)), sigma, self.cfg)
