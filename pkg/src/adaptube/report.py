"""The verification suite: thirteen named checks over Halton samples, collected
into a deterministic report.

For builtin examples the pointwise checks run on the closed-form tube and the
flow-built tube is certified against it; for spec files every check runs on
the flow-built tube.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .contact import ManifoldSpec, validate_spec
from .flows import DEFAULT_CONFIG, IntegratorConfig
from .registry import EXAMPLES, get_example, inner_box
from .sampling import halton_box
from .specfile import load_manifold_spec
from .sympl import SympPoint, check_structure_identities, energy, energy_from_cotangent, to_cotangent
from .tube import (
    CheckReport,
    FlowTube,
    HolomorphyFailure,
    TubeModel,
    boundary_trace_residual,
    build_tube_by_flow,
    build_tube_closed_form,
    check_cr_restriction,
    compare_tubes,
    j_squared_residual,
    lemma21_residual,
    lie_derivative_residual,
    monge_ampere,
    nijenhuis_residual,
    nondegeneracy_value,
)

__all__ = ["CHECKS", "DEFAULT_TOLERANCES", "ConfigError", "RunConfig", "Report", "run_verify", "default_tolerances"]

CHECKS = (
    "spec-validation",
    "structure-identities",
    "energy-zero-section",
    "boundary-trace",
    "monge-ampere",
    "nondegeneracy",
    "lemma21",
    "lie-derivative",
    "nijenhuis",
    "cr-restriction",
    "j-squared",
    "holomorphy",
    "tube-agreement",
)

# nondegeneracy reports 1 / min |dE ^ d^cE ^ (dd^cE)^n|, so its tolerance is the
# reciprocal of the required lower bound
DEFAULT_TOLERANCES = {
    "heisenberg": {
        "spec-validation": 1e-9,
        "structure-identities": 1e-9,
        "energy-zero-section": 1e-10,
        "boundary-trace": 1e-8,
        "monge-ampere": 1e-8,
        "nondegeneracy": 2.0,
        "lemma21": 1e-9,
        "lie-derivative": 1e-8,
        "nijenhuis": 1e-8,
        "cr-restriction": 1e-9,
        "j-squared": 1e-9,
        "holomorphy": 1e-7,
        "tube-agreement": 1e-8,
    },
    "sphere": {
        "spec-validation": 1e-9,
        "structure-identities": 1e-9,
        "energy-zero-section": 1e-10,
        "boundary-trace": 1e-7,
        "monge-ampere": 1e-7,
        "nondegeneracy": 1e3,
        "lemma21": 1e-8,
        "lie-derivative": 1e-7,
        "nijenhuis": 1e-6,
        "cr-restriction": 1e-8,
        "j-squared": 1e-9,
        "holomorphy": 1e-7,
        "tube-agreement": 1e-7,
    },
}

ZERO_SECTION_SAMPLES = 200
VALIDATION_SAMPLES = 100
HOLOMORPHY_BASES = 8
HOLOMORPHY_T = np.linspace(-0.5, 0.5, 5)
AGREEMENT_CHART_POINTS = 400
AGREEMENT_SIGMA_LEVELS = 10
USER_SIGMA_MAX = 0.3


class ConfigError(ValueError):
    pass


def default_tolerances(example: Optional[str]) -> dict:
    return dict(DEFAULT_TOLERANCES["heisenberg" if example == "heisenberg" else "sphere"])


@dataclass
class RunConfig:
    example: Optional[str] = None
    spec_path: Optional[str] = None
    n: int = 1
    sigma_max: Optional[float] = None
    samples: int = 1000
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    integrator: IntegratorConfig = DEFAULT_CONFIG
    out: Optional[str] = None

    def __post_init__(self):
        if (self.example is None) == (self.spec_path is None):
            raise ConfigError("give exactly one of an example name or a spec file")
        if self.example is not None and self.example not in EXAMPLES:
            raise ConfigError(f"unknown example {self.example!r}; known: {', '.join(EXAMPLES)}")
        if self.samples < 1:
            raise ConfigError("samples must be at least 1")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.sigma_max is not None and not self.sigma_max > 0:
            raise ConfigError("sigma-max must be positive")
        for k, v in self.tolerances.items():
            if k not in CHECKS:
                raise ConfigError(f"unknown check {k!r}")
            if not v > 0:
                raise ConfigError(f"tolerance for {k} must be positive")

    def resolved_tolerances(self) -> dict:
        tol = default_tolerances(self.example)
        tol.update(self.tolerances)
        return tol

    def echo(self) -> dict:
        return {
            "example": self.example,
            "spec": self.spec_path,
            "n": self.n,
            "sigma_max": self.sigma_max,
            "samples": self.samples,
            "seed": self.seed,
            "tolerances": self.resolved_tolerances(),
            "integrator": asdict(self.integrator),
        }


@dataclass
class Report:
    version: str
    config: dict
    checks: list
    timings: dict = field(default_factory=dict)

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckReport:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self, timings: bool = True) -> dict:
        out = {
            "version": self.version,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "overall_pass": self.overall_pass,
        }
        if timings:
            out["timings"] = self.timings
        return out

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "samples", "max_residual", "tolerance", "pass", "worst_point", "error"])
        for c in self.checks:
            point = "" if c.worst_point is None else " ".join(repr(v) for v in c.worst_point)
            res = "" if c.max_residual is None else repr(c.max_residual)
            w.writerow([c.name, c.samples, res, repr(c.tolerance), str(c.passed).lower(), point, c.error or ""])
        return buf.getvalue()


# individual checks ------------------------------------------------------------


def _pointwise(name, tol, points, fn) -> CheckReport:
    vals = np.array([fn(x) for x in points], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError("non-finite residual")
    i = int(np.argmax(vals))
    return CheckReport(name, len(points), float(vals[i]), tol, [float(v) for v in points[i]])


def _check_validation(M: ManifoldSpec, tol, seed) -> CheckReport:
    rep = validate_spec(M, samples=VALIDATION_SAMPLES, seed=seed, tol=tol)
    out = CheckReport("spec-validation", rep.samples, rep.max_residual, tol)
    if not rep.passed:
        out.error = rep.describe()
    return out


def _check_structure(M, tol, X) -> CheckReport:
    def fn(x):
        a = SympPoint.from_coords(x)
        r = check_structure_identities(M, a)
        if r[1] != 0.0:  # X^theta(E) = 1 holds exactly
            return np.inf
        return max(r)

    return _pointwise("structure-identities", tol, X, fn)


def _check_zero_section(M, T: TubeModel, tol, P) -> CheckReport:
    pts = np.column_stack([P, np.zeros(len(P))])
    emb = M.embed_batch(P)
    gam = T.gamma_batch(pts)

    def fn(i):
        a = SympPoint(P[i], 0.0)
        if energy(a) != 0.0:
            return np.inf
        return max(abs(energy_from_cotangent(M, to_cotangent(M, a))), float(np.max(np.abs(gam[i] - emb[i]))))

    vals = np.array([fn(i) for i in range(len(P))])
    i = int(np.argmax(vals))
    return CheckReport("energy-zero-section", len(P), float(vals[i]), tol, [float(v) for v in pts[i]])


def _check_ma(T, tol, X) -> CheckReport:
    degenerate = 0

    def fn(x):
        nonlocal degenerate
        r = monge_ampere(T, x)
        degenerate += r.degenerate
        return r.residual

    rep = _pointwise("monge-ampere", tol, X, fn)
    rep.notes["degenerate_points"] = degenerate
    return rep


def _check_nondegeneracy(T, tol, X) -> CheckReport:
    vals = np.abs([nondegeneracy_value(T, x) for x in X])
    i = int(np.argmin(vals))
    if vals[i] == 0.0:
        raise ArithmeticError("dE ^ d^cE ^ (dd^cE)^n vanishes")
    rep = CheckReport("nondegeneracy", len(X), float(1.0 / vals[i]), tol, [float(v) for v in X[i]])
    rep.notes["min_abs_value"] = float(vals[i])
    return rep


def _check_holomorphy(M, sigma_max, tol, cfg, seed) -> tuple[CheckReport, FlowTube]:
    bases = halton_box(HOLOMORPHY_BASES, inner_box(M.chart_box, 0.5), seed)
    sigmas = np.linspace(-sigma_max, sigma_max, 5)
    samples = HOLOMORPHY_BASES * len(HOLOMORPHY_T) * len(sigmas)
    rep = CheckReport("holomorphy", samples, None, tol)
    try:
        tube = build_tube_by_flow(M, sigma_max, grid=(bases, HOLOMORPHY_T, sigmas), cfg=cfg)
        rep.max_residual = tube.holomorphy_max
    except HolomorphyFailure as exc:
        rep.error = f"HolomorphyFailure: {exc}"
        tube = FlowTube(M, sigma_max, cfg)
    return rep, tube


def _agreement_points(M, sigma_max, seed):
    P = halton_box(AGREEMENT_CHART_POINTS, M.chart_box, seed)
    s = np.linspace(-sigma_max, sigma_max, AGREEMENT_SIGMA_LEVELS)
    return np.column_stack([np.repeat(P, len(s), axis=0), np.tile(s, len(P))])


def _check_agreement(T1, T2, tol, X) -> CheckReport:
    dg, dJ = compare_tubes(T1, T2, X)
    rep = CheckReport("tube-agreement", len(X), max(dg, dJ), tol)
    rep.notes.update(gamma_deviation=dg, j_deviation=dJ)
    return rep


# driver ------------------------------------------------------------------


def _guarded(name, tol, samples, fn, timings) -> CheckReport:
    t0 = time.perf_counter()
    try:
        rep = fn()
    except Exception as exc:  # embedded per check, the suite carries on
        rep = CheckReport(name, samples, None, tol, error=f"{type(exc).__name__}: {exc}")
    timings[name] = round(time.perf_counter() - t0, 6)
    return rep


def run_verify(cfg: RunConfig) -> Report:
    """Run all thirteen checks; deterministic for a fixed config and seed."""
    if cfg.example is not None:
        ex = get_example(cfg.example)
        M = ex.spec(cfg.n)
        sigma_max = cfg.sigma_max if cfg.sigma_max is not None else ex.sigma_max
        closed = build_tube_closed_form(cfg.example, cfg.n, sigma_max)
    else:
        M = load_manifold_spec(cfg.spec_path, validate=False)
        sigma_max = cfg.sigma_max if cfg.sigma_max is not None else USER_SIGMA_MAX
        closed = None
    tol = cfg.resolved_tolerances()
    timings: dict = {}
    checks = []

    def run(name, samples, fn):
        checks.append(_guarded(name, tol[name], samples, fn, timings))

    domain = np.vstack([M.chart_box, [[-sigma_max, sigma_max]]])
    X = halton_box(cfg.samples, domain, cfg.seed)
    P0 = halton_box(min(cfg.samples, ZERO_SECTION_SAMPLES), M.chart_box, cfg.seed)

    run("spec-validation", VALIDATION_SAMPLES, lambda: _check_validation(M, tol["spec-validation"], cfg.seed))
    run("structure-identities", len(X), lambda: _check_structure(M, tol["structure-identities"], X))

    # the flow tube is needed first when there is no closed form
    t0 = time.perf_counter()
    holo, flow = _guarded_holomorphy(M, sigma_max, tol["holomorphy"], cfg)
    holo_time = round(time.perf_counter() - t0, 6)
    T = closed if closed is not None else flow

    run("energy-zero-section", len(P0), lambda: _check_zero_section(M, T, tol["energy-zero-section"], P0))
    run("boundary-trace", len(P0), lambda: _pointwise("boundary-trace", tol["boundary-trace"], P0, lambda p: boundary_trace_residual(T, p)))
    run("monge-ampere", len(X), lambda: _check_ma(T, tol["monge-ampere"], X))
    run("nondegeneracy", len(X), lambda: _check_nondegeneracy(T, tol["nondegeneracy"], X))
    run("lemma21", len(X), lambda: _pointwise("lemma21", tol["lemma21"], X, lambda x: lemma21_residual(T, x)))
    run("lie-derivative", len(X), lambda: _pointwise("lie-derivative", tol["lie-derivative"], X, lambda x: lie_derivative_residual(T, x)))
    run("nijenhuis", len(X), lambda: _pointwise("nijenhuis", tol["nijenhuis"], X, lambda x: nijenhuis_residual(T, x)))
    run("cr-restriction", len(P0), lambda: _pointwise("cr-restriction", tol["cr-restriction"], P0, lambda p: check_cr_restriction(T, p)))
    run("j-squared", len(X), lambda: _pointwise("j-squared", tol["j-squared"], X, lambda x: j_squared_residual(T, x)))
    checks.append(holo)
    timings["holomorphy"] = holo_time

    A = _agreement_points(M, sigma_max, cfg.seed)
    if closed is not None:
        run("tube-agreement", len(A), lambda: _check_agreement(closed, flow, tol["tube-agreement"], A))
    else:
        # no closed form: the tangent-equation tube against the finite-difference one
        alt = FlowTube(M, sigma_max, cfg.integrator, jacobian="fd")
        run("tube-agreement", len(A), lambda: _check_agreement(flow, alt, tol["tube-agreement"], A))

    return Report(__version__, cfg.echo(), checks, timings)


def _guarded_holomorphy(M, sigma_max, tol, cfg: RunConfig):
    try:
        return _check_holomorphy(M, sigma_max, tol, cfg.integrator, cfg.seed)
    except Exception as exc:
        rep = CheckReport("holomorphy", 0, None, tol, error=f"{type(exc).__name__}: {exc}")
        return rep, FlowTube(M, sigma_max, cfg.integrator)
