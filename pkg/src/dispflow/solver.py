"""Time integration of the regularised flow and its dispersive limit.

The constant-coefficient ambient part ``-eps d^4 + a d^3`` is integrated
exactly by an integrating factor (per component, in Fourier space); the
remainder is advanced with classical RK4. Every stage evaluates the flow at
the retracted stage value and the final state is retracted onto the target.
"""

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .covariant import AmbientCurve, FlowParams, _J, _d, _proj, rhs_array
from .grid import make_grid


class BlowUpError(RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class CFLWarning(RuntimeWarning):
    pass


DENSE_MAX_N = 256


def _diff_matrix(grid, order):
    """Dense matrix of the spectral derivative acting on node values (columns)."""
    eye = np.eye(grid.n)
    return np.fft.irfft(np.fft.rfft(eye, axis=0) * grid._rsym[order][:, None], n=grid.n, axis=0)


def _retract_samples(target, y):
    if target.is_sphere:
        return kernels.normalize(y)
    return y


class Stepper:
    """Integrating-factor RK4 for one (target, grid, params, dt) combination."""

    def __init__(self, target, grid, params, dt):
        if dt < 0 and params.eps > 0:
            raise ValueError("backward steps are ill-posed for eps > 0")
        self.target, self.grid, self.params, self.dt = target, grid, params, dt
        self.lin = -params.eps * grid.rfreqs**4 + params.a * grid._rsym[3]
        self.stiff = bool(params.a or params.eps)
        self.E = np.exp(self.lin * dt)
        self.E2 = np.exp(self.lin * dt / 2)
        if not self.stiff and grid.n <= DENSE_MAX_N:
            # small grids: a dense differentiation matrix beats two FFT calls
            self._D1T = _diff_matrix(grid, 1).T.copy()
            self._D2T = _diff_matrix(grid, 2).T.copy()

    def _nl_hat(self, vhat):
        g, p = self.grid, self.params
        u = _retract_samples(self.target, np.fft.irfft(vhat, n=g.n))
        uh = np.fft.rfft(u)
        r = rhs_array(self.target, g, u, p.a, p.b, p.eps, uhat=uh)
        return np.fft.rfft(r) - self.lin * uh

    def _f(self, y):
        p, target = self.params, self.target
        u = _retract_samples(target, y)
        if self.grid.n > DENSE_MAX_N:
            return rhs_array(target, self.grid, u, p.a, p.b, p.eps)
        uxx = u @ self._D2T
        if target.kind != "S2":  # u x uxx is already tangent on S2
            uxx = _proj(target, u, uxx)
        out = _J(target, u, uxx)
        if p.b:
            ux = u @ self._D1T
            out = _proj(target, u, out + p.b * np.sum(ux * ux, axis=0) * ux)
        elif target.kind == "S6":
            out = _proj(target, u, out)
        return out

    def step(self, u):
        h = self.dt
        if not self.stiff:
            f = self._f
            k1 = f(u)
            k2 = f(u + 0.5 * h * k1)
            k3 = f(u + 0.5 * h * k2)
            k4 = f(u + h * k3)
            y = u + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        else:
            E, E2, N = self.E, self.E2, self._nl_hat
            v = np.fft.rfft(u)
            k1 = N(v)
            k2 = N(E2 * (v + 0.5 * h * k1))
            k3 = N(E2 * v + 0.5 * h * k2)
            k4 = N(E * v + h * E2 * k3)
            v = E * v + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
            y = np.fft.irfft(v, n=self.grid.n)
        return _retract_samples(self.target, y)


def step_imex(u, params, dt=None):
    """One integrating-factor RK4 step followed by retraction."""
    dt = params.time_step(u.grid, u) if dt is None else dt
    limit = params.c_cfl / u.grid.xi_max**2
    if dt > limit * (1 + 1e-12):
        warnings.warn(f"dt={dt:.3e} exceeds c_cfl/xi_max^2={limit:.3e}", CFLWarning, stacklevel=2)
    s = Stepper(u.target, u.grid, params, dt).step(u.samples)
    if not np.all(np.isfinite(s)):
        raise BlowUpError(f"non-finite state after step at t={u.t + dt:.6g}")
    return u.at(s, u.t + dt)


@dataclass
class Trajectory:
    params: FlowParams
    snapshots: list = field(default_factory=list)  # (t, AmbientCurve)
    diag: list = field(default_factory=list)  # DiagRecord
    status: str = "ok"
    message: str = ""

    @property
    def times(self):
        return np.array([t for t, _ in self.snapshots])

    @property
    def final(self):
        return self.snapshots[-1][1]


def plan_steps(params, grid, u=None):
    """Number of steps and the (slightly shrunk) step landing exactly on ``t_end``."""
    dt = params.time_step(grid, u)
    nsteps = max(1, math.ceil(params.t_end / dt - 1e-9))
    return nsteps, params.t_end / nsteps


def evolve(u0, params, stride=None, records=50, diagnostics=True, on_blowup="return"):
    """Integrate from ``u0`` to ``params.t_end``.

    A snapshot (and a :class:`~dispflow.diagnostics.DiagRecord` when
    ``diagnostics``) is kept every ``stride`` steps; by default about
    ``records`` of them. On blow-up the partial trajectory is returned with
    ``status == "blow-up"`` (or raised inside :class:`BlowUpError` when
    ``on_blowup == "raise"``).
    """
    from .diagnostics import record

    grid, target = u0.grid, u0.target
    nsteps, dt = plan_steps(params, grid, u0)
    if dt > params.c_cfl / grid.xi_max**2 * (1 + 1e-12):
        warnings.warn(f"dt={dt:.3e} exceeds c_cfl/xi_max^2", CFLWarning, stacklevel=2)
    stride = stride or max(1, nsteps // max(records, 1))
    stepper = Stepper(target, grid, params, dt)
    traj = Trajectory(params=params)

    def keep(curve):
        traj.snapshots.append((curve.t, curve))
        if diagnostics:
            traj.diag.append(record(curve, params))

    keep(u0)
    e0 = _dirichlet(grid, u0.samples)
    s = np.array(u0.samples)
    for i in range(1, nsteps + 1):
        s = stepper.step(s)
        if i % stride == 0 or i == nsteps:
            t = u0.t + i * dt
            e = _dirichlet(grid, s)
            if not np.all(np.isfinite(s)) or e > 1e6 * max(e0, 1e-300):
                traj.status = "blow-up"
                traj.message = f"blow-up detected at t={t:.6g} (step {i})"
                if on_blowup == "raise":
                    raise BlowUpError(traj.message, traj)
                return traj
            keep(AmbientCurve(target, grid, s, t))
    return traj


def _dirichlet(grid, s):
    ux = _d(grid, s)
    return grid.dx * float(np.sum(ux * ux))


# -- micro-step differencing -------------------------------------------------

def active_frequency(u, rel=1e-8):
    """Largest frequency carrying at least ``rel`` of the peak spectral amplitude."""
    amp = np.max(np.abs(np.fft.rfft(u.samples)), axis=0)
    idx = np.nonzero(amp >= rel * amp.max())[0]
    return float(u.grid.rfreqs[idx.max()]) if idx.size else 0.0


def resolved_delta(u, params, delta, central):
    """Cap ``delta`` so the fastest active time scale is resolved."""
    xi = active_frequency(u)
    omega = abs(params.a) * xi**3 + xi**2 + params.eps * xi**4 + 1.0
    return min(delta, (0.05 if central else 0.01) / omega)


def snapshot_derivative(u, params, fn, delta=1e-6, richardson=True, auto_delta=True):
    """``d/dt fn(u(t))`` at the snapshot by differencing solver micro-steps.

    Central differences when ``eps == 0`` (the flow is reversible), forward
    differences otherwise; one Richardson level unless disabled.
    """
    central = params.eps == 0
    if auto_delta:
        delta = resolved_delta(u, params, delta, central)

    def at(h):
        if h == 0:
            return fn(u.samples)
        return fn(Stepper(u.target, u.grid, params, h).step(np.array(u.samples)))

    if central:
        def D(h):
            return (np.asarray(at(h)) - np.asarray(at(-h))) / (2 * h)

        return (4 * D(delta) - D(2 * delta)) / 3 if richardson else D(delta)
    f0 = np.asarray(at(0))

    def D(h):
        return (np.asarray(at(h)) - f0) / h

    return 2 * D(delta) - D(2 * delta) if richardson else D(delta)


# -- epsilon continuation ----------------------------------------------------

def ambient_sobolev_distance(grid, u, v, level):
    """Ambient ``H^{level+1}`` norm of ``u - v`` (L2 part included)."""
    diff = np.asarray(u) - np.asarray(v)
    total = grid.dx * float(np.sum(diff * diff))
    for order in range(1, level + 2):
        dd = _d(grid, diff, order) if order <= 4 else _d(grid, _d(grid, diff, 4), order - 4)
        total += grid.dx * float(np.sum(dd * dd))
    return math.sqrt(total)


@dataclass
class ContinuationRow:
    eps: float
    distance: float
    n_gauged_end: float
    n_gauged_max_ratio: float
    status: str


def epsilon_continuation(u0, params, eps_list, records=20):
    """Run the flow for each ``eps`` and measure the distance to the ``eps = 0`` run.

    ``distance`` is the ambient ``H^k`` distance at ``t_end`` (level ``k - 1``
    of :func:`~dispflow.covariant.sobolev_norm` indexing, ``k = k_gauge``).
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or eps_list[-1] != 0.0:
        raise ValueError("eps_list must end with 0")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be sorted in decreasing order")
    runs = {}
    for e in eps_list:
        runs[e] = evolve(u0, params.replace(eps=e), records=records)
    ref = runs[0.0].final
    rows = []
    level = params.k_gauge - 1
    for e in eps_list:
        tr = runs[e]
        ng = np.array([r.n_gauged for r in tr.diag])
        rows.append(
            ContinuationRow(
                eps=e,
                distance=ambient_sobolev_distance(u0.grid, tr.final.samples, ref.samples, level),
                n_gauged_end=float(ng[-1]),
                n_gauged_max_ratio=float(ng.max() / ng[0]),
                status=tr.status,
            )
        )
    return rows, runs


# -- binary snapshot layout --------------------------------------------------
# header: b"DFLW", uint32 version, uint32 d, uint32 n, float64 L   (little endian)
# body:   row-major float64 (d, n) samples, one block per snapshot

SNAPSHOT_MAGIC = b"DFLW"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIId")


def write_snapshots(path, trajectory):
    curves = [c for _, c in trajectory.snapshots]
    d, n = curves[0].samples.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, d, n, curves[0].grid.period))
        for c in curves:
            fh.write(np.ascontiguousarray(c.samples, dtype="<f8").tobytes())


def read_snapshots(path):
    """Return ``(L, array of shape (count, d, n))``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, d, n, L = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return L, body.reshape(-1, d, n).copy()


def regrid(u, n):
    """Band-limited resampling of a curve onto ``n`` nodes, then retraction."""
    g = make_grid(n, u.grid.period)
    m = u.grid.n
    uh = np.fft.rfft(u.samples) / m
    out = np.zeros((u.samples.shape[0], n // 2 + 1), dtype=complex)
    k = min(m, n) // 2
    out[:, :k] = uh[:, :k]
    s = np.fft.irfft(out * n, n=n)
    return AmbientCurve(u.target, g, _retract_samples(u.target, s), u.t)
