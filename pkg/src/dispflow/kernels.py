"""Pointwise kernels over sampled curves.

All arrays are laid out ``(d, n)``: ambient component first, grid node last.
Each kernel exists twice, a vectorised numpy form (``*_np``) and an explicit
node loop (``*_loop``) that is compiled with numba when it is available. The
public names bind to the loop form under numba and to the numpy form
otherwise, see :mod:`dispflow._accel`.

The kernels use plain bilinear products (no conjugation) so that they can be
fed complex perturbations for complex-step differentiation.
"""

import numpy as np

from ._accel import HAS_NUMBA, njit

# Seven-dimensional cross product, 0-based: e_i x e_{i+1} = e_{i+3} (mod 7).
FANO_TRIPLES = tuple((i, (i + 1) % 7, (i + 3) % 7) for i in range(7))


def _cross7_tables():
    pairs = [[] for _ in range(7)]
    for a, b, c in FANO_TRIPLES:
        pairs[c].append((a, b))
        pairs[a].append((b, c))
        pairs[b].append((c, a))
    left = np.array([[p[0] for p in row] for row in pairs], dtype=np.int64)
    right = np.array([[p[1] for p in row] for row in pairs], dtype=np.int64)
    return left, right


CROSS7_LEFT, CROSS7_RIGHT = _cross7_tables()


# --- numpy forms -----------------------------------------------------------

def node_dot_np(U, V):
    return np.sum(U * V, axis=0)


def sphere_project_np(u, V):
    return V - np.sum(V * u, axis=0) * u


def normalize_np(y):
    return y / np.sqrt(np.sum(y * y, axis=0))


def cross3_np(u, v):
    return np.stack(
        (
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        )
    )


def cross7_np(u, v):
    A, B = CROSS7_LEFT, CROSS7_RIGHT
    return np.sum(u[A] * v[B] - u[B] * v[A], axis=1)


def sphere_curvature_np(X, Y, Z):
    return np.sum(Y * Z, axis=0) * X - np.sum(X * Z, axis=0) * Y


# --- loop forms (numba targets) --------------------------------------------

@njit
def node_dot_loop(U, V):
    d, n = U.shape
    out = np.empty(n, dtype=U.dtype)
    for j in range(n):
        s = U[0, j] * V[0, j]
        for i in range(1, d):
            s += U[i, j] * V[i, j]
        out[j] = s
    return out


@njit
def sphere_project_loop(u, V):
    d, n = V.shape
    out = np.empty_like(V)
    for j in range(n):
        s = V[0, j] * u[0, j]
        for i in range(1, d):
            s += V[i, j] * u[i, j]
        for i in range(d):
            out[i, j] = V[i, j] - s * u[i, j]
    return out


@njit
def normalize_loop(y):
    d, n = y.shape
    out = np.empty_like(y)
    for j in range(n):
        s = y[0, j] * y[0, j]
        for i in range(1, d):
            s += y[i, j] * y[i, j]
        r = np.sqrt(s)
        for i in range(d):
            out[i, j] = y[i, j] / r
    return out


@njit
def cross3_loop(u, v):
    n = u.shape[1]
    out = np.empty_like(v)
    for j in range(n):
        out[0, j] = u[1, j] * v[2, j] - u[2, j] * v[1, j]
        out[1, j] = u[2, j] * v[0, j] - u[0, j] * v[2, j]
        out[2, j] = u[0, j] * v[1, j] - u[1, j] * v[0, j]
    return out


@njit
def _cross7_loop(u, v, A, B):
    n = u.shape[1]
    out = np.empty_like(v)
    for j in range(n):
        for c in range(7):
            s = u[A[c, 0], j] * v[B[c, 0], j] - u[B[c, 0], j] * v[A[c, 0], j]
            for r in range(1, 3):
                s += u[A[c, r], j] * v[B[c, r], j] - u[B[c, r], j] * v[A[c, r], j]
            out[c, j] = s
    return out


def cross7_loop(u, v):
    return _cross7_loop(u, v, CROSS7_LEFT, CROSS7_RIGHT)


@njit
def sphere_curvature_loop(X, Y, Z):
    d, n = X.shape
    out = np.empty_like(X)
    for j in range(n):
        yz = Y[0, j] * Z[0, j]
        xz = X[0, j] * Z[0, j]
        for i in range(1, d):
            yz += Y[i, j] * Z[i, j]
            xz += X[i, j] * Z[i, j]
        for i in range(d):
            out[i, j] = yz * X[i, j] - xz * Y[i, j]
    return out


def _promoted(kernel):
    # loop kernels allocate with the dtype of their first argument
    def call(*arrays):
        t = arrays[0].dtype
        if any(a.dtype != t for a in arrays[1:]):
            t = np.result_type(*arrays)
            arrays = tuple(a.astype(t) for a in arrays)
        return kernel(*arrays)

    call.__name__ = kernel.__name__
    call.__doc__ = kernel.__doc__
    return call


if HAS_NUMBA:
    node_dot = _promoted(node_dot_loop)
    sphere_project = _promoted(sphere_project_loop)
    normalize = normalize_loop
    cross3 = _promoted(cross3_loop)
    cross7 = _promoted(cross7_loop)
    sphere_curvature = _promoted(sphere_curvature_loop)
else:
    node_dot = node_dot_np
    sphere_project = sphere_project_np
    normalize = normalize_np
    cross3 = cross3_np
    cross7 = cross7_np
    sphere_curvature = sphere_curvature_np

BACKEND = "numba" if HAS_NUMBA else "numpy"
