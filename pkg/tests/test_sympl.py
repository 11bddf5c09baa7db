import numpy as np
import pytest

from adaptube.exterior import wedge_power
from adaptube.registry import heisenberg, inner_box, sphere
from adaptube.sampling import halton_box
from adaptube.sympl import (
    SympPoint,
    canonical_closedness,
    canonical_two_form,
    check_structure_identities,
    energy,
    energy_from_cotangent,
    energy_gradient,
    foliation_point,
    g_flow,
    h_flow,
    to_cotangent,
    x_theta,
    x_theta_cotangent,
    xi_theta,
)


def _samples(M, count, seed, smax=0.5):
    box = np.vstack([M.chart_box, [[-smax, smax]]])
    return [SympPoint.from_coords(x) for x in halton_box(count, box, seed=seed)]


def test_energy_is_sigma():
    assert energy(SympPoint([0.1, 0.2, 0.3], 0.0)) == 0.0
    assert energy(SympPoint([0.1, 0.2, 0.3], 0.35)) == 0.35


@pytest.mark.parametrize("M", [heisenberg(1), sphere(1)], ids=lambda M: M.name)
def test_energy_from_cotangent(M):
    rng = np.random.default_rng(0)
    for a in _samples(M, 50, 1):
        c = to_cotangent(M, a)
        assert np.max(np.abs(c.pvec - a.sigma * M.theta_at(a.p))) < 1e-12
        v = rng.normal(size=M.m)
        if abs(M.theta_at(a.p) @ v) > 0.1:
            assert abs(energy_from_cotangent(M, c, v) - a.sigma) < 1e-12
        assert abs(energy_from_cotangent(M, c) - a.sigma) < 1e-12


def test_x_theta_and_energy():
    a = SympPoint([0.3, -0.1, 0.2], 0.7)
    assert x_theta(a).tolist() == [0, 0, 0, 1]
    assert energy_gradient(a) @ x_theta(a) == 1.0
    assert h_flow(a, 0.25).sigma == 0.95
    assert np.array_equal(h_flow(a, 0.25).p, a.p)


def test_x_theta_pushforward_heisenberg(heis):
    v = x_theta_cotangent(heis, SympPoint([0, 0, 0], 0.0))
    assert v.tolist() == [0, 0, 0, 0, 0, 1]


@pytest.mark.parametrize("M", [heisenberg(1), sphere(1)], ids=lambda M: M.name)
def test_x_theta_pushforward_is_theta(M):
    for a in _samples(M, 30, 2):
        v = x_theta_cotangent(M, a)
        assert not v[: M.m].any()
        assert np.max(np.abs(v[M.m:] - M.theta_at(a.p))) < 1e-12


def test_xi_theta(heis, sph):
    for a in _samples(heis, 20, 3):
        assert np.max(np.abs(xi_theta(heis, a) - [0, 0, 1, 0])) < 1e-12
    for a in _samples(sph, 20, 3):
        xi = xi_theta(sph, a)
        assert xi[-1] == 0.0
        assert np.array_equal(xi[:-1], xi_theta(sph, SympPoint(a.p, 0.0))[:-1])


@pytest.mark.parametrize("M, bound", [(heisenberg(1), 1e-12), (sphere(1), 1e-9)], ids=["heisenberg", "sphere"])
def test_structure_identities(M, bound):
    for a in _samples(M, 100, 4):
        r1, r2, r3 = check_structure_identities(M, a)
        assert r1 < bound and r3 < bound
        assert r2 == 0.0


def test_foliation_points(heis, sph):
    p = np.array([0.1, -0.2, 0.05])
    a = foliation_point(sph, p, 0.0, 0.0)
    assert np.array_equal(a.p, p) and a.sigma == 0.0
    b = foliation_point(heis, np.zeros(3), 0.5, 0.2)
    assert np.allclose(b.p, [0, 0, 0.5], atol=1e-15) and b.sigma == 0.2
    direct = foliation_point(sph, p, 0.7, 0.1)
    shifted = g_flow(sph, foliation_point(sph, p, 0.3, 0.1), 0.4)
    assert np.max(np.abs(direct.p - shifted.p)) < 1e-9
    assert shifted.sigma == 0.1


@pytest.mark.parametrize("M", [heisenberg(1), sphere(1)], ids=lambda M: M.name)
def test_groups_commute_on_symp_points(M):
    box = np.vstack([inner_box(M.chart_box, 0.5), [[-0.3, 0.3]]])
    for x in halton_box(10, box, seed=5):
        a = SympPoint.from_coords(x)
        one = h_flow(g_flow(M, a, 0.4), 0.3)
        two = g_flow(M, h_flow(a, 0.3), 0.4)
        assert np.max(np.abs(one.coords - two.coords)) < 1e-8


def test_canonical_form_on_zero_section(heis):
    a = SympPoint([0.2, 0.1, -0.3], 0.0)
    w = canonical_two_form(heis, a)
    # dsigma ^ theta only: rank 2
    assert np.linalg.matrix_rank(w.to_matrix(), tol=1e-12) == 2
    th = heis.theta_at(a.p)
    # (dsigma ^ theta)(d/dsigma, v) = theta(v)
    assert np.allclose(w.to_matrix()[3, :3], th, atol=1e-15)


def test_canonical_form_nondegenerate_off_zero_section(heis):
    w = canonical_two_form(heis, SympPoint([0.0, 0.0, 0.0], 0.5))
    assert abs(wedge_power(w, 2).top()) > 0.5
    assert np.linalg.matrix_rank(w.to_matrix(), tol=1e-12) == 4
    w2 = canonical_two_form(heisenberg(2), SympPoint(np.zeros(5), 0.5))
    assert np.linalg.matrix_rank(w2.to_matrix(), tol=1e-12) == 6


@pytest.mark.parametrize("M", [heisenberg(1), sphere(1)], ids=lambda M: M.name)
def test_canonical_form_closed(M):
    assert max(canonical_closedness(M, a) for a in _samples(M, 100, 6)) < 1e-10


def test_energy_has_no_critical_points(sph):
    for a in _samples(sph, 10, 7):
        assert energy_gradient(a).tolist() == [0, 0, 0, 1]
