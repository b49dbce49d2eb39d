"""Covariant derivatives along sampled closed curves and the flow right-hand side.

For an isometrically embedded target the induced connection along a curve is
ambient differentiation followed by tangential projection,
``nabla_x V = Pi_u (d/dx V)``, so no charts or Christoffel symbols appear.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import Grid, GridMismatchError
from .manifolds import Target, constraint_residual, get_target

CURVE_TOL = 1e-10
TANGENCY_FLAG = 1e-6


class ResolutionError(ValueError):
    """The grid does not resolve the curve well enough for the requested stack."""


@dataclass(frozen=True, eq=False)
class AmbientCurve:
    """Closed curve on a target sampled as ambient ``d``-vectors, shape ``(d, n)``."""

    target: Target
    grid: Grid
    samples: np.ndarray = field(repr=False)
    t: float = 0.0

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.shape != (self.target.ambient_dim, self.grid.n):
            raise GridMismatchError(
                f"curve samples have shape {s.shape}, expected {(self.target.ambient_dim, self.grid.n)}"
            )
        if not np.all(np.isfinite(s)):
            raise ValueError("curve samples are not finite")
        res = constraint_residual(self.target, s)
        if res > CURVE_TOL:
            raise ValueError(f"curve leaves {self.target} by {res:.3e}; retract it first")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def constraint(self):
        return constraint_residual(self.target, self.samples)

    def at(self, samples, t=None):
        return AmbientCurve(self.target, self.grid, samples, self.t if t is None else t)


TRANSPORT_LIMIT = 0.02


@dataclass(frozen=True)
class FlowParams:
    """Coefficients of ``u_t = -eps nabla^3 u_x + a nabla^2 u_x + J nabla u_x + b |u_x|^2 u_x``."""

    a: float = 0.0
    b: float = 0.0
    eps: float = 0.0
    k_gauge: int = 2
    dt: float | None = None
    t_end: float = 0.1
    c_cfl: float = 0.5

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if int(self.k_gauge) != self.k_gauge or self.k_gauge < 1:
            raise ValueError(f"k_gauge must be an integer >= 1, got {self.k_gauge}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")

    def time_step(self, grid, u=None):
        """``dt`` if set, else ``c / xi_max^2`` with ``c <= c_cfl``.

        On curved targets with ``a != 0`` the ambient integrating factor moves
        frequency-``xi`` packets by ``3 a xi^2 dt`` per step without parallel
        transport; the explicit part can only undo that rotation while
        ``|a| max|u_x| dt xi_max^2`` stays below :data:`TRANSPORT_LIMIT`. When a
        curve ``u`` is given the default step honours that bound as well.
        """
        if self.dt is not None:
            return self.dt
        c = self.c_cfl
        if u is not None and self.a != 0 and u.target.is_sphere:
            speed = float(np.sqrt(np.max(np.sum(_d(grid, u.samples) ** 2, axis=0))))
            if speed > 0:
                c = min(c, TRANSPORT_LIMIT / (abs(self.a) * speed))
        return c / grid.xi_max**2

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


# -- array-level machinery (shared with the solver) --------------------------

def _d(grid, V, order=1):
    return np.fft.irfft(np.fft.rfft(V) * grid._rsym[order], n=grid.n)


def _dc(grid, V, order=1):
    # real-linear derivative that also accepts complex input (complex-step use)
    if np.isrealobj(V):
        return _d(grid, V, order)
    return _d(grid, V.real, order) + 1j * _d(grid, V.imag, order)


def _proj(target, u, V):
    if target.is_sphere:
        return kernels.sphere_project(u, V)
    return V


def _J(target, u, X):
    if target.kind == "S2":
        return kernels.cross3(u, X)
    if target.kind == "S6":
        return kernels.cross7(u, X)
    return np.stack((-X[1], X[0]))


def stack_arrays(target, grid, u, m):
    """``[u_x, nabla u_x, ..., nabla^m u_x]`` for an ambient sample array."""
    deriv = _dc if np.iscomplexobj(u) else _d
    out = [deriv(grid, u)]
    for _ in range(m):
        out.append(_proj(target, u, deriv(grid, out[-1])))
    return out


def rhs_array(target, grid, u, a, b, eps, uhat=None):
    """Flow right-hand side for samples ``u`` (assumed on the target)."""
    if uhat is None:
        uhat = np.fft.rfft(u)
    n = grid.n
    uxx = np.fft.irfft(uhat * grid._rsym[2], n=n)
    if target.is_sphere:
        w1 = kernels.sphere_project(u, uxx)
    else:
        w1 = uxx
    out = _J(target, u, w1)
    if a or eps:
        w2 = _proj(target, u, _d(grid, w1))
        if a:
            out = out + a * w2
        if eps:
            w3 = _proj(target, u, _d(grid, w2))
            out = out - eps * w3
    if b:
        ux = np.fft.irfft(uhat * grid._rsym[1], n=n)
        out = out + b * np.sum(ux * ux, axis=0) * ux
    if target.is_sphere and (b or target.kind == "S6"):
        out = kernels.sphere_project(u, out)
    return out


def rhs_array_complex(target, grid, u, a, b, eps):
    """Same field as :func:`rhs_array`, built from bilinear operations only.

    Accepts complex samples, which is what complex-step differentiation needs.
    """
    ux, w1, *rest = stack_arrays(target, grid, u, 3 if eps else (2 if a else 1))
    out = _J(target, u, w1)
    if a:
        out = out + a * rest[0]
    if eps:
        out = out - eps * rest[1]
    if b:
        out = out + b * np.sum(ux * ux, axis=0) * ux
    if target.is_sphere:
        out = kernels.sphere_project(u, out)
    return out


def l2sq(grid, V):
    """``dx sum V.V`` without conjugation (complex input gives the bilinear value)."""
    s = grid.dx * np.sum(V * V)
    return float(s) if np.isrealobj(s) else complex(s)


# -- public operations -------------------------------------------------------

def covariant_stack(u, m, params=None):
    """Covariant derivative stack ``[u_x, nabla_x u_x, ..., nabla_x^m u_x]``.

    Raises :class:`ResolutionError` when ``u_x`` itself fails to be tangent to
    within ``1e-6`` (relative), which signals an under-resolved curve.
    """
    if params is not None and m > params.k_gauge + 3:
        raise ValueError(f"stack depth {m} exceeds k_gauge + 3 = {params.k_gauge + 3}")
    if m < 0:
        raise ValueError("stack depth must be >= 0")
    st = stack_arrays(u.target, u.grid, u.samples, m)
    if u.target.is_sphere:
        ux = st[0]
        scale = max(1.0, float(np.max(np.abs(ux))))
        res = float(np.max(np.abs(np.sum(ux * u.samples, axis=0)))) / scale
        if res > TANGENCY_FLAG:
            raise ResolutionError(f"u_x is not tangent to within {TANGENCY_FLAG:g} (residual {res:.3e}); refine the grid")
    return st


def flow_rhs(u, params):
    """``-eps nabla^3 u_x + a nabla^2 u_x + J_u nabla u_x + b h(u_x, u_x) u_x``."""
    return rhs_array(u.target, u.grid, u.samples, params.a, params.b, params.eps)


def sobolev_norm(u, k):
    """``||u||_{H^{k+1}} = (sum_{l=0}^{k} ||nabla_x^l u_x||^2)^{1/2}``."""
    st = stack_arrays(u.target, u.grid, u.samples, k)
    return float(np.sqrt(sum(l2sq(u.grid, V) for V in st)))


def sobolev_levels(u, k):
    """Cumulative norms ``[||u||_{H^1}, ..., ||u||_{H^{k+1}}]`` from one stack."""
    st = stack_arrays(u.target, u.grid, u.samples, k)
    return list(np.sqrt(np.cumsum([l2sq(u.grid, V) for V in st])))


def energy(u):
    """``(1/2) int h(u_x, u_x) dx``."""
    ux = _d(u.grid, u.samples)
    return 0.5 * l2sq(u.grid, ux)


@dataclass(frozen=True)
class CommutationResidual:
    residual: float  # L2 norm of nabla_x^2 u_t - nabla_t nabla_x u_x - R(u_x, u_t) u_x
    relative: float  # residual / ||nabla_x^2 u_t||
    curvature_norm: float  # ||R(u_x, u_t) u_x||
    delta: float


def commute_t_x_check(u, params, delta=1e-5, richardson=True, include_curvature=True):
    """Check ``nabla_x^2 u_t = nabla_t nabla_x u_x + R(u_x, u_t) u_x`` numerically.

    ``nabla_t`` is formed by differencing snapshots of ``nabla_x u_x`` taken
    from micro-steps of the solver (central when ``eps == 0``, forward
    otherwise), with one Richardson level unless ``richardson`` is False.
    """
    from .solver import snapshot_derivative

    target, grid = u.target, u.grid
    s = u.samples
    ut = rhs_array(target, grid, s, params.a, params.b, params.eps)
    ux = _d(grid, s)
    lhs = _proj(target, s, _d(grid, _proj(target, s, _d(grid, ut))))

    def nabla_x_ux(samples):
        return _proj(target, samples, _d(grid, samples, 2))

    dW = snapshot_derivative(u, params, nabla_x_ux, delta=delta, richardson=richardson, auto_delta=False)
    nabla_t = _proj(target, s, dW)
    curv = kernels.sphere_curvature(ux, ut, ux) if target.is_sphere else np.zeros_like(ux)
    resid = lhs - nabla_t - (curv if include_curvature else 0.0)
    r = np.sqrt(l2sq(grid, resid))
    return CommutationResidual(
        residual=float(r),
        relative=float(r / max(np.sqrt(l2sq(grid, lhs)), 1e-300)),
        curvature_norm=float(np.sqrt(l2sq(grid, curv))),
        delta=delta,
    )
