"""Auxiliary scalar problem ``L U = U_t + U_xxx + i (a U_x)_x + b_x U_x + c U``.

Holds the order-zero gauge ``lambda = 1 - (i/3) b p(D)``, the remainders that
appear when ``lambda`` and ``<D>^{-1}`` are commuted through ``L``, and an
integrating-factor time stepper. All variable-coefficient products are
dealiased with the 2/3 rule, so the operator identities below hold exactly on
fields whose spectrum sits in the lower quarter of the grid.
"""

import math
from dataclasses import dataclass

import numpy as np

from .grid import (
    make_bracket_inv,
    make_p_multiplier,
    make_pd_multiplier,
    product,
    spectral_derivative,
)


def _fd(grid, f, order=1):
    return spectral_derivative(grid, np.asarray(f, dtype=complex), order)


@dataclass(frozen=True, eq=False)
class LinearCoeffs:
    """Real periodic coefficients ``a, b, c`` on a grid, plus optional forcing ``F(t)``."""

    grid: object
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    forcing: object = None  # callable t -> complex field, or None

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = np.asarray(getattr(self, name))
            if np.iscomplexobj(v) and np.any(v.imag != 0):
                raise ValueError(f"coefficient {name} must be real")
            v = np.broadcast_to(np.asarray(v.real if np.iscomplexobj(v) else v, dtype=float), (self.grid.n,)).copy()
            if not np.all(np.isfinite(v)):
                raise ValueError(f"coefficient {name} is not finite")
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        g = self.grid
        bx = spectral_derivative(g, self.b, 1)
        object.__setattr__(self, "_bder", (bx, spectral_derivative(g, self.b, 2), spectral_derivative(g, self.b, 3)))
        object.__setattr__(self, "_p", make_p_multiplier(g))
        object.__setattr__(self, "_pd", make_pd_multiplier(g))
        object.__setattr__(self, "_br", make_bracket_inv(g))

    @property
    def b_x(self):
        return self._bder[0]

    def F(self, t):
        return 0.0 if self.forcing is None else self.forcing(t)


def preset_coeffs(grid, a=None, b=None, c=None, forcing=None):
    """Default ``a = cos(2 pi x / L)``, ``b = sin(2 pi x / L)``, ``c = 0.5``; any may be overridden."""
    x = 2 * np.pi * grid.nodes / grid.period
    return LinearCoeffs(
        grid,
        np.cos(x) if a is None else a,
        np.sin(x) if b is None else b,
        np.full(grid.n, 0.5) if c is None else c,
        forcing,
    )


def zero_coeffs(grid, **overrides):
    z = np.zeros(grid.n)
    return LinearCoeffs(grid, overrides.get("a", z), overrides.get("b", z), overrides.get("c", z))


# -- building blocks -----------------------------------------------------------

def d3(co, U):
    return _fd(co.grid, U, 3)


def dispersive_part(co, U):
    """``i (a U_x)_x``."""
    g = co.grid
    return 1j * _fd(g, product(g, co.a, _fd(g, U)))


def lower_part(co, U):
    """``b_x U_x + c U``."""
    g = co.grid
    return product(g, co.b_x, _fd(g, U)) + product(g, co.c, U)


def L0_apply(co, U):
    """Spatial part of ``d_t + d^3 + i d a d``."""
    return d3(co, U) + dispersive_part(co, U)


def Ls_apply(co, U):
    """Spatial part of ``L``: ``U_xxx + i (a U_x)_x + b_x U_x + c U``."""
    return L0_apply(co, U) + lower_part(co, U)


def lambda_tilde(co, U):
    """``(i/3) b p(D) U``."""
    return (1j / 3) * product(co.grid, co.b, co._p(U))


def lambda_apply(co, U):
    """``lambda U = U - (i/3) b p(D) U``."""
    U = np.asarray(U, dtype=complex)
    co.grid.check(U)
    return U - lambda_tilde(co, U)


def linear_rhs(co, U, t=0.0):
    """``-U_xxx - i (a U_x)_x - b_x U_x - c U + F``."""
    return -Ls_apply(co, np.asarray(U, dtype=complex)) + co.F(t)


# -- remainders ------------------------------------------------------------------

def r3_apply(co, U):
    """``b_x d(1 - p(D)D) U - b_xx p(D)D U + (i/3) b_xxx p(D) U``."""
    g = co.grid
    U = np.asarray(U, dtype=complex)
    bx, bxx, bxxx = co._bder
    pdU = co._pd(U)
    return (
        product(g, bx, _fd(g, U - pdU))
        - product(g, bxx, pdU)
        + (1j / 3) * product(g, bxxx, co._p(U))
    )


def r1_apply(co, U):
    """``-[lambda~, i d a d] U - lambda~ (b_x U_x) + lambda (c U)``."""
    g = co.grid
    U = np.asarray(U, dtype=complex)
    comm = lambda_tilde(co, dispersive_part(co, U)) - dispersive_part(co, lambda_tilde(co, U))
    return -comm - lambda_tilde(co, product(g, co.b_x, _fd(g, U))) + lambda_apply(co, product(g, co.c, U))


def r4_apply(co, U):
    """``r1 + r3``, the remainder in ``lambda L = (d_t + d^3 + i d a d) lambda + r4``."""
    return r1_apply(co, U) + r3_apply(co, U)


def r2_apply(co, U):
    """``[<D>^{-1}, i d a d] U + <D>^{-1}(b_x U_x + c U)``."""
    U = np.asarray(U, dtype=complex)
    br = co._br
    return br(dispersive_part(co, U)) - dispersive_part(co, br(U)) + br(lower_part(co, U))


# composites for identity checks (stationary parts, no d_t)

def neg_commutator_lambda_d3(co, U):
    """``-[lambda~, d^3] U``."""
    return -(lambda_tilde(co, d3(co, U)) - d3(co, lambda_tilde(co, U)))


def r3_identity_rhs(co, U):
    """``-b_x U_x + r3 U``."""
    g = co.grid
    return -product(g, co.b_x, _fd(g, U)) + r3_apply(co, U)


def lambda_conjugation_left(co, U):
    return lambda_apply(co, Ls_apply(co, U))


def lambda_conjugation_right(co, U):
    return L0_apply(co, lambda_apply(co, U)) + r4_apply(co, U)


def bracket_conjugation_left(co, U):
    return co._br(Ls_apply(co, U))


def bracket_conjugation_right(co, U):
    return L0_apply(co, co._br(U)) + r2_apply(co, U)


def commutator_residual(left, right, test_fields, grid):
    """``max_U ||(left - right) U|| / ||U||`` over the test fields."""
    worst = 0.0
    for U in test_fields:
        nu = math.sqrt(grid.dx * float(np.sum(np.abs(U) ** 2)))
        if nu == 0:
            continue
        d = left(U) - right(U)
        worst = max(worst, math.sqrt(grid.dx * float(np.sum(np.abs(d) ** 2))) / nu)
    return worst


def random_band_limited(grid, rng, band=None, count=1):
    """Random complex fields with modes ``|j| <= band`` (default ``n/4``)."""
    band = grid.n // 4 if band is None else band
    out = []
    keep = np.abs(grid.modes) <= band
    for _ in range(count):
        coef = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * keep
        out.append(np.fft.ifft(coef) * grid.n)
    return out


@dataclass(frozen=True)
class SweepResult:
    modes: np.ndarray
    norms: np.ndarray
    slope: float


def frequency_sweep(op, grid, j_max=None, j_min=1):
    """Operator norms on single modes ``e^{i xi_j x}``, ``j_min <= j <= j_max``, and their log-log slope."""
    j_max = grid.n // 4 if j_max is None else j_max
    js = np.arange(j_min, j_max + 1)
    x = grid.nodes
    norms = []
    for j in js:
        e = np.exp(2j * np.pi * j * x / grid.period)
        r = op(e)
        norms.append(math.sqrt(float(np.sum(np.abs(r) ** 2)) / grid.n))
    norms = np.array(norms)
    slope = float(np.polyfit(np.log(js), np.log(np.maximum(norms, 1e-300)), 1)[0])
    return SweepResult(js, norms, slope)


# -- gauged norm -----------------------------------------------------------------

@dataclass(frozen=True)
class GaugedNorm:
    lambda_part: float  # ||lambda U||^2
    bracket_part: float  # ||<D>^{-1} U||^2

    @property
    def squared(self):
        return self.lambda_part + self.bracket_part

    @property
    def value(self):
        return math.sqrt(self.squared)


def _l2sq(grid, U):
    return grid.dx * float(np.sum(np.abs(U) ** 2))


def gauged_norm(co, U):
    U = np.asarray(U, dtype=complex)
    return GaugedNorm(_l2sq(co.grid, lambda_apply(co, U)), _l2sq(co.grid, co._br(U)))


def linear_M_hat(co):
    """``1 + ||b||_inf max|p| / 3 + 1``."""
    return 1.0 + float(np.max(np.abs(co.b))) * co._p.sup() / 3.0 + 1.0


# -- evolution -------------------------------------------------------------------

class LinearBlowUp(RuntimeError):
    pass


@dataclass
class LinearTrajectory:
    times: np.ndarray
    states: list
    status: str = "ok"


def linear_time_step(co):
    """Explicit limit of the variable-coefficient part on the dealiased band."""
    g = co.grid
    xi = 2 * np.pi * ((g.n - 1) // 3) / g.period
    scale = float(np.max(np.abs(co.a))) * xi**2 + float(np.max(np.abs(co.b_x))) * xi + float(np.max(np.abs(co.c)))
    return 0.5 / (scale + 1.0)


def evolve_linear(co, U0, t_end, dt=None, records=50):
    """Integrating-factor RK4: ``e^{i xi^3 t}`` exactly, the rest explicitly.

    A negative ``t_end`` runs the same scheme backward in time (the problem
    is reversible), which is how the backward energy bound is exercised.
    """
    g = co.grid
    dt = linear_time_step(co) if dt is None else dt
    if not dt > 0:
        raise ValueError("dt must be > 0")
    nsteps = max(1, math.ceil(abs(t_end) / dt - 1e-9))
    h = t_end / nsteps
    stride = max(1, nsteps // max(records, 1))
    sym = 1j * g.freqs**3
    sym[g.n // 2] = 0.0
    E, E2 = np.exp(sym * h), np.exp(sym * h / 2)

    def N(v, t):
        U = np.fft.ifft(v)
        return np.fft.fft(-dispersive_part(co, U) - lower_part(co, U) + co.F(t))

    U = np.asarray(U0, dtype=complex)
    n0 = math.sqrt(_l2sq(g, U))
    v = np.fft.fft(U)
    times, states = [0.0], [U.copy()]
    status = "ok"
    for i in range(nsteps):
        t = i * h
        k1 = N(v, t)
        k2 = N(E2 * (v + 0.5 * h * k1), t + h / 2)
        k3 = N(E2 * v + 0.5 * h * k2, t + h / 2)
        k4 = N(E * v + h * E2 * k3, t + h)
        v = E * v + (h / 6) * (E * k1 + 2 * E2 * (k2 + k3) + k4)
        if (i + 1) % stride == 0 or i + 1 == nsteps:
            U = np.fft.ifft(v)
            nu = math.sqrt(_l2sq(g, U))
            if not np.isfinite(nu) or nu > 1e6 * max(n0, 1.0):
                status = "blow-up"
                break
            times.append((i + 1) * h)
            states.append(U)
    return LinearTrajectory(np.array(times), states, status)


LINEAR_COLUMNS = ("t", "re_energy", "im_energy", "l2_norm", "gauged_norm")


def linear_rows(co, traj):
    rows = []
    for t, U in zip(traj.times, traj.states):
        rows.append(
            (
                float(t),
                _l2sq(co.grid, U.real),
                _l2sq(co.grid, U.imag),
                math.sqrt(_l2sq(co.grid, U)),
                gauged_norm(co, U).value,
            )
        )
    return rows
