import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dispflow.manifolds import (
    FLATC,
    S2,
    S6,
    OffManifoldError,
    TangencyError,
    apply_J,
    check_on_manifold,
    cross3,
    cross7,
    curvature,
    get_target,
    nabla_J_norm,
    project_tangent,
    retract,
    tangent_basis,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec7 = arrays(np.float64, 7, elements=finite)


def _unit(v):
    return v / np.linalg.norm(v)


@settings(max_examples=60, deadline=None)
@given(vec7, vec7)
def test_cross7_identities(x, y):
    z = cross7(x, y)
    scale = 1 + np.dot(x, x) * np.dot(y, y)
    assert abs(np.dot(z, x)) <= 1e-9 * scale
    assert abs(np.dot(z, y)) <= 1e-9 * scale
    lhs = np.dot(z, z)
    rhs = np.dot(x, x) * np.dot(y, y) - np.dot(x, y) ** 2
    assert abs(lhs - rhs) <= 1e-9 * scale
    assert np.allclose(cross7(y, x), -z)


def test_cross3_matches_numpy(rng):
    x, y = rng.standard_normal((2, 3, 10))
    assert np.allclose(cross3(x, y), np.cross(x.T, y.T).T)


def test_get_target():
    assert get_target("s6") is S6
    assert get_target(S2) is S2
    with pytest.raises(ValueError):
        get_target("torus")


@pytest.mark.parametrize("target", [S2, S6])
def test_J_squares_to_minus_one(target, rng):
    u = _unit(rng.standard_normal(target.ambient_dim))
    X = project_tangent(target, u, rng.standard_normal(target.ambient_dim))
    JX = apply_J(target, u, X)
    assert abs(np.dot(JX, u)) < 1e-12
    assert np.allclose(apply_J(target, u, JX), -X)
    assert np.isclose(np.dot(JX, JX), np.dot(X, X))
    assert abs(np.dot(JX, X)) < 1e-12


def test_flat_J_is_rotation():
    assert np.allclose(apply_J(FLATC, np.zeros(2), np.array([1.0, 0.0])), [0.0, 1.0])


def test_J_rejects_normal_vectors():
    u = np.array([0.0, 0.0, 1.0])
    with pytest.raises(TangencyError):
        apply_J(S2, u, np.array([0.0, 0.0, 1.0]))


def test_off_manifold_detected():
    with pytest.raises(OffManifoldError):
        check_on_manifold(S2, np.array([0.0, 0.0, 2.0]))
    with pytest.raises(OffManifoldError):
        retract(S2, np.zeros(3))


def test_retract_normalises(rng):
    y = rng.standard_normal((7, 20))
    r = retract(S6, y)
    assert np.allclose(np.linalg.norm(r, axis=0), 1.0)


def test_curvature_sectional_one(rng):
    u = _unit(rng.standard_normal(7))
    B = tangent_basis(S6, u)
    X, Y = B[:, 0], B[:, 1]
    # <R(X,Y)Y, X> = 1 for orthonormal X, Y on the unit sphere
    assert np.isclose(np.dot(curvature(S6, u, X, Y, Y), X), 1.0)
    assert np.allclose(curvature(FLATC, None, X[:2], Y[:2], Y[:2]), 0.0)


def test_tangent_basis(rng):
    u = _unit(rng.standard_normal(7))
    B = tangent_basis(S6, u)
    assert B.shape == (7, 6)
    assert np.allclose(B.T @ B, np.eye(6))
    assert np.allclose(B.T @ u, 0.0)


def test_nabla_J_vanishes_on_S2(rng):
    u = _unit(rng.standard_normal(3))
    X = project_tangent(S2, u, rng.standard_normal(3))
    assert nabla_J_norm(S2, u, X) < 1e-7


def test_nabla_J_on_S6_oracle(rng):
    # (nabla_X J) Y = Pi(X x Y) on the unit S6; its operator norm on T_u S6
    # is |X| since X x . restricted to X-perp tangent vectors is an isometry
    u = _unit(rng.standard_normal(7))
    X = project_tangent(S6, u, rng.standard_normal(7))
    assert np.isclose(nabla_J_norm(S6, u, X), np.linalg.norm(X), rtol=1e-6)
