import itertools

import numpy as np
import pytest

from adaptube.contact import (
    DegenerateContact,
    ManifoldSpec,
    SingularContact,
    contact_volume,
    cr_structure,
    levi_distribution,
    reeb_field,
    reeb_jet,
    standard_j,
    validate_spec,
)
from adaptube.exterior import exterior_derivative, interior_product
from adaptube.registry import heisenberg, list_examples, sphere
from adaptube.sampling import halton_box

REGISTRY = [heisenberg(1), sphere(1), heisenberg(2), sphere(2)]


def flat_dt():
    return ManifoldSpec.from_strings(
        "flat",
        1,
        ["x1", "y1", "t"],
        ["0", "0", "1"],
        [[-1, 1]] * 3,
        ["x1", "y1", "t", "(x1^2 + y1^2) / 2"],
        ["0", "0", "1", "0"],
    )


def test_heisenberg_reeb_constant():
    M = heisenberg(1)
    for p in halton_box(50, M.chart_box, seed=0):
        xi = reeb_field(M, p)
        assert np.max(np.abs(xi - [0, 0, 1])) < 1e-12
    assert reeb_field(heisenberg(2), [0.3, -0.2, 0.5, 0.1, 0.9]).tolist() == [0.0, 0.0, 0.0, 0.0, 1.0]


def test_sphere_reeb_pushforward_is_iz():
    M = sphere(1)
    p = np.array([1.0, 0.0, 0.0])
    assert np.allclose(M.embed(p), [1, 0, 0, 0], atol=1e-15)
    pushed = M.embed_jacobian(p) @ reeb_field(M, p)
    assert np.max(np.abs(pushed - [0, 1, 0, 0])) < 1e-10


def test_flat_form_is_singular():
    with pytest.raises(SingularContact):
        reeb_field(flat_dt(), [0.1, 0.2, 0.3])
    with pytest.raises(DegenerateContact):
        contact_volume(flat_dt(), [0.1, 0.2, 0.3])


def test_contact_volume_values():
    # theta ^ d theta = dt ^ 2 dx ^ dy = +2 dx ^ dy ^ dt in (x, y, t) order
    for p in halton_box(20, heisenberg(1).chart_box, seed=1):
        assert contact_volume(heisenberg(1), p) == pytest.approx(2.0, abs=1e-14)
        assert abs(contact_volume(heisenberg(2), np.append(p, p[:2]))) == pytest.approx(8.0, abs=1e-13)


@pytest.mark.parametrize("M", REGISTRY, ids=lambda M: M.name)
def test_reeb_conditions_hold(M):
    for p in halton_box(100, M.chart_box, seed=2):
        xi = reeb_field(M, p)
        th = M.theta_field.at(p)
        assert abs(th.coeffs @ xi - 1.0) < 1e-10
        assert interior_product(xi, exterior_derivative(M.theta_field, p)).norm() < 1e-10


@pytest.mark.parametrize("M", REGISTRY, ids=lambda M: M.name)
def test_reeb_independent_of_row_selection(M):
    for p in halton_box(10, M.chart_box, seed=4):
        base = reeb_field(M, p)
        for rows in itertools.combinations(range(M.m), M.m - 1):
            try:
                other = reeb_field(M, p, rows=list(rows))
            except (np.linalg.LinAlgError, SingularContact):
                continue  # that choice of rows is itself singular
            assert np.max(np.abs(other - base)) < 1e-10


@pytest.mark.parametrize("M", [sphere(1), sphere(2)], ids=lambda M: M.name)
def test_reeb_jet_against_differences(M):
    for p in halton_box(10, M.chart_box, seed=5):
        xi, D = reeb_jet(M, p)
        assert np.array_equal(xi, reeb_field(M, p))
        h = 1e-5
        fd = np.column_stack(
            [(reeb_field(M, p + h * e) - reeb_field(M, p - h * e)) / (2 * h) for e in np.eye(M.m)]
        )
        assert np.max(np.abs(D - fd)) < 1e-7


def test_levi_heisenberg_origin():
    H = levi_distribution(heisenberg(1), [0, 0, 0])
    assert np.allclose(np.abs(H[:, 2]), 0)
    assert np.allclose(H @ H.T, np.eye(2), atol=1e-15)


@pytest.mark.parametrize("M", REGISTRY, ids=lambda M: M.name)
def test_levi_annihilated_and_orthonormal(M):
    for p in halton_box(30, M.chart_box, seed=6):
        H = levi_distribution(M, p)
        assert H.shape == (M.m - 1, M.m)
        assert np.max(np.abs(H @ M.theta_at(p))) < 1e-12
        assert np.allclose(H @ H.T, np.eye(M.m - 1), atol=1e-14)


@pytest.mark.parametrize("M", REGISTRY, ids=lambda M: M.name)
def test_cr_structure_squares_to_minus_one(M):
    for p in halton_box(10, M.chart_box, seed=7):
        for v in levi_distribution(M, p):
            Jv = cr_structure(M, p, v)
            assert abs(M.theta_at(p) @ Jv) < 1e-10
            assert np.max(np.abs(cr_structure(M, p, Jv) + v)) < 1e-10


@pytest.mark.parametrize("M", REGISTRY, ids=lambda M: M.name)
def test_validate_registry(M):
    rep = validate_spec(M, samples=100)
    assert rep.passed, rep.describe()
    assert rep.max_residual < 1e-9
    assert set(rep.residuals) >= {"ambient_J_squared", "reeb_conditions", "reeb_consistency", "levi_invariance"}


def test_validate_identity_ambient_j_fails():
    M = heisenberg(1)
    bad = ManifoldSpec(M.name, M.n, M.coords, M.theta, M.chart_box, M.embedding, np.eye(4), M.reeb_extension)
    rep = validate_spec(bad, samples=10)
    assert not rep.passed
    assert rep.residuals["ambient_J_squared"] == 2.0
    assert "ambient_J_squared" in rep.describe()


def test_validate_flat_names_contact_volume():
    rep = validate_spec(flat_dt(), samples=10)
    assert not rep.passed
    assert rep.failures[0].startswith("contact_volume")


def test_reeb_crosscheck_detects_wrong_declared_reeb():
    M = heisenberg(1)
    wrong = ManifoldSpec.from_strings(
        "wrong", 1, M.coords, [e.source for e in M.theta], M.chart_box,
        [e.source for e in M.embedding], [e.source for e in M.reeb_extension], reeb=["1", "0", "1"],
    )
    rep = validate_spec(wrong, samples=5)
    assert rep.residuals["reeb_crosscheck"] == pytest.approx(1.0)
    assert not rep.passed


def test_spec_shape_errors():
    M = heisenberg(1)
    with pytest.raises(ValueError):
        ManifoldSpec(M.name, 2, M.coords, M.theta, M.chart_box, M.embedding, M.ambient_J, M.reeb_extension)
    with pytest.raises(ValueError):
        ManifoldSpec(M.name, 1, M.coords, M.theta, [[1, -1]] * 3, M.embedding, M.ambient_J, M.reeb_extension)
    with pytest.raises(ValueError):
        ManifoldSpec(M.name, 1, M.coords, M.theta, M.chart_box, M.embedding, np.eye(3), M.reeb_extension)


def test_standard_j_squares_to_minus_identity():
    for N in (1, 2, 3):
        J = standard_j(N)
        assert np.array_equal(J @ J, -np.eye(2 * N))
        assert J[1, 0] == 1.0  # e_1 -> e_2 is multiplication by i


def test_list_examples_stable():
    assert list_examples() == [("heisenberg", 3), ("sphere", 3)]
    assert list_examples(2) == [("heisenberg", 5), ("sphere", 5)]


def test_sphere_chart_lands_on_unit_sphere():
    M = sphere(2)
    Q = M.embed_batch(halton_box(50, M.chart_box, seed=8))
    assert np.allclose(np.linalg.norm(Q, axis=1), 1.0, atol=1e-15)


def test_heisenberg_chart_lands_on_hypersurface():
    M = heisenberg(2)
    Q = M.embed_batch(halton_box(50, M.chart_box, seed=8))
    # Im w - |z|^2 / 2 = 0
    assert np.allclose(Q[:, 5] - 0.5 * np.sum(Q[:, :4] ** 2, axis=1), 0.0, atol=1e-15)
