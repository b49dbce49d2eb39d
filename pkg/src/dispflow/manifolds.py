"""Embedded almost Hermitian targets.

Three targets, each realised through an explicit isometric embedding:

* ``S2`` -- round sphere in R^3, J = u x . (Kaehler);
* ``S6`` -- round sphere in R^7, J = u x_7 . (nearly Kaehler, nabla J != 0);
* ``FLATC`` -- the complex line as R^2, J = rotation by +90 degrees.

Points and vectors are arrays of shape ``(d,)`` or ``(d, n)``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

ON_MANIFOLD_TOL = 1e-8
RETRACT_MIN_NORM = 1e-6


class OffManifoldError(ValueError):
    pass


class TangencyError(ValueError):
    pass


@dataclass(frozen=True)
class Target:
    kind: str
    ambient_dim: int
    is_kahler: bool
    is_sphere: bool

    def __str__(self):
        return self.kind


S2 = Target("S2", 3, True, True)
S6 = Target("S6", 7, False, True)
FLATC = Target("FlatC", 2, True, False)

TARGETS = {"s2": S2, "s6": S6, "flatc": FLATC}


def get_target(name):
    if isinstance(name, Target):
        return name
    try:
        return TARGETS[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown target {name!r}; expected one of {sorted(TARGETS)}") from None


def _as2d(a):
    a = np.asarray(a)
    return (a[:, None], True) if a.ndim == 1 else (a, False)


def constraint_residual(target, u):
    """``max_j | |u_j| - 1 |`` on spheres, 0 on the flat target."""
    if not target.is_sphere:
        return 0.0
    u2, _ = _as2d(u)
    return float(np.max(np.abs(np.sqrt(np.sum(u2 * u2, axis=0)) - 1.0)))


def check_on_manifold(target, u, tol=ON_MANIFOLD_TOL):
    r = constraint_residual(target, u)
    if r > tol:
        raise OffManifoldError(f"point off {target} by {r:.3e} (tolerance {tol:g})")


def project_tangent(target, u, V, check=True):
    """Orthogonal projection of ambient ``V`` onto ``T_u N``."""
    if not target.is_sphere:
        return np.array(V, copy=True)
    if check:
        check_on_manifold(target, u)
    u2, flat = _as2d(u)
    V2, _ = _as2d(V)
    out = kernels.sphere_project(np.ascontiguousarray(u2), np.ascontiguousarray(V2))
    return out[:, 0] if flat else out


def normal_component(target, u, V):
    """Largest normal component ``|<V, u>|`` (0 on the flat target)."""
    if not target.is_sphere:
        return 0.0
    u2, _ = _as2d(u)
    V2, _ = _as2d(V)
    return float(np.max(np.abs(np.sum(u2 * V2, axis=0))))


def retract(target, y):
    """Closest point of the target: ``y/|y|`` on spheres, identity on the flat one."""
    if not target.is_sphere:
        return np.array(y, copy=True)
    y2, flat = _as2d(y)
    r = np.sqrt(np.sum(y2 * y2, axis=0))
    if np.any(r < RETRACT_MIN_NORM):
        raise OffManifoldError(f"cannot retract a point of norm {r.min():.3e} onto {target}")
    out = kernels.normalize(np.ascontiguousarray(y2))
    return out[:, 0] if flat else out


def cross7(x, y):
    """Seven-dimensional cross product, convention ``e_i x e_{i+1} = e_{i+3}``."""
    x2, flat = _as2d(x)
    y2, _ = _as2d(y)
    out = kernels.cross7(np.ascontiguousarray(x2), np.ascontiguousarray(y2))
    return out[:, 0] if flat else out


def cross3(x, y):
    x2, flat = _as2d(x)
    y2, _ = _as2d(y)
    out = kernels.cross3(np.ascontiguousarray(x2), np.ascontiguousarray(y2))
    return out[:, 0] if flat else out


def _J_raw(target, u, X):
    # J_u applied to ambient X; equals J_u Pi_u X on spheres since u x u = 0
    if target.kind == "S2":
        return kernels.cross3(u, X)
    if target.kind == "S6":
        return kernels.cross7(u, X)
    return np.stack((-X[1], X[0]))


def apply_J(target, u, X, check=True, tol=1e-8):
    """Almost complex structure ``J_u X`` for tangent ``X``."""
    u2, flat = _as2d(u)
    X2, _ = _as2d(X)
    if check:
        check_on_manifold(target, u2)
        res = normal_component(target, u2, X2)
        scale = max(1.0, float(np.max(np.abs(X2))))
        if res > tol * scale:
            raise TangencyError(f"vector is not tangent: normal component {res:.3e}")
    out = _J_raw(target, np.ascontiguousarray(u2), np.ascontiguousarray(X2))
    if target.kind == "S6":
        # u x X is already normal-free up to roundoff; project to keep it exact
        out = kernels.sphere_project(np.ascontiguousarray(u2), out)
    return out[:, 0] if flat else out


def curvature(target, u, X, Y, Z):
    """Riemann tensor ``R(X, Y) Z``; unit spheres have sectional curvature 1."""
    X2, flat = _as2d(X)
    Y2, _ = _as2d(Y)
    Z2, _ = _as2d(Z)
    if not target.is_sphere:
        out = np.zeros(np.broadcast_shapes(X2.shape, Y2.shape, Z2.shape), dtype=np.result_type(X2, Y2, Z2))
    else:
        out = kernels.sphere_curvature(
            np.ascontiguousarray(X2), np.ascontiguousarray(Y2), np.ascontiguousarray(Z2)
        )
    return out[:, 0] if flat else out


def J_matrix(target, u):
    """Ambient matrix of ``Pi_u J_u Pi_u`` at a single point."""
    d = target.ambient_dim
    E = np.eye(d)
    cols = [apply_J(target, u, project_tangent(target, u, E[:, i], check=False), check=False) for i in range(d)]
    return np.stack(cols, axis=1)


def tangent_basis(target, u):
    """Orthonormal basis of ``T_u N`` as columns."""
    d = target.ambient_dim
    if not target.is_sphere:
        return np.eye(d)
    P = np.eye(d) - np.outer(u, u)
    w, v = np.linalg.eigh(P)
    return v[:, w > 0.5]


def nabla_J_norm(target, u, X, step=1e-5):
    """Operator norm of ``(nabla_X J)`` on ``T_u N``.

    Central difference of the ambient field ``Pi J Pi`` along the geodesic
    through ``u`` with velocity ``X``, followed by tangential projection.
    """
    u = np.asarray(u, dtype=float)
    X = np.asarray(X, dtype=float)
    if not target.is_sphere:
        return 0.0
    check_on_manifold(target, u)
    speed = float(np.linalg.norm(X))
    if speed == 0:
        return 0.0
    e = X / speed

    def point(s):
        return np.cos(s * speed) * u + np.sin(s * speed) * e

    dJ = (J_matrix(target, point(step)) - J_matrix(target, point(-step))) / (2 * step)
    B = tangent_basis(target, u)
    return float(np.linalg.norm(B.T @ dJ @ B, 2))
