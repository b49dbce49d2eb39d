"""Initial curves used by tests, the CLI and the acceptance suite."""

import numpy as np

from .covariant import AmbientCurve
from .kernels import cross3, cross7
from .manifolds import get_target
from .solver import _retract_samples


def great_circle(target, grid, m=1):
    target = get_target(target)
    phi = 2 * np.pi * m * grid.nodes / grid.period
    s = np.zeros((target.ambient_dim, grid.n))
    s[0], s[1] = np.cos(phi), np.sin(phi)
    return AmbientCurve(target, grid, s)


def latitude_circle(grid, alpha=np.pi / 3, m=1, t=0.0, omega=0.0):
    """S2 circle at polar angle ``alpha`` with phase ``2 pi m x / L + omega t``."""
    from .manifolds import S2

    phi = 2 * np.pi * m * grid.nodes / grid.period + omega * t
    s = np.stack(
        (np.sin(alpha) * np.cos(phi), np.sin(alpha) * np.sin(phi), np.full(grid.n, np.cos(alpha)))
    )
    return AmbientCurve(S2, grid, s, t)


def da_rios_rate(alpha=np.pi / 3, m=1, L=1.0):
    """Angular rate of the rotating latitude circle under ``u_t = u x u_xx``."""
    return -((2 * np.pi * m / L) ** 2) * np.cos(alpha)


def _low_modes(rng, d, grid, modes, amp):
    x = 2 * np.pi * grid.nodes / grid.period
    out = np.zeros((d, grid.n))
    for j in range(1, modes + 1):
        c = rng.standard_normal((d, 2)) * amp / j**2
        out += c[:, :1] * np.cos(j * x) + c[:, 1:] * np.sin(j * x)
    return out


def smooth_curve(target, grid, seed=0, modes=3, amp=0.3):
    """Great circle plus a random low-mode wobble, retracted onto the target."""
    target = get_target(target)
    rng = np.random.default_rng(seed)
    base = great_circle(target, grid).samples
    if not target.is_sphere:
        base = 0.5 * base
    s = base + _low_modes(rng, target.ambient_dim, grid, modes, amp)
    return AmbientCurve(target, grid, _retract_samples(target, s))


def _unit(target, u, V):
    V = V - np.sum(V * u, axis=0) * u if target.is_sphere else V
    return V / np.sqrt(np.sum(V * V, axis=0))


def spike_curve(target, grid, K, amplitude=1e-2, seed=0):
    """Smooth curve plus a tangent perturbation at frequency ``K``.

    The perturbation is ``A (cos(2 pi K x / L) E1 + sin(2 pi K x / L) E2)``
    with unit tangent frames ``E1, E2``. On S6, ``E2`` points along
    ``-Pi(u_x x E1)``, which is the polarisation for which the
    ``(nabla_{u_x} J)`` coupling feeds the top Sobolev level. On S2 the
    tangent plane only leaves ``E2 = J E1``.
    """
    target = get_target(target)
    base = smooth_curve(target, grid, seed=seed)
    u = base.samples
    ux = np.fft.irfft(np.fft.rfft(u) * grid._rsym[1], n=grid.n)
    rng = np.random.default_rng(seed + 1)
    c = rng.standard_normal(target.ambient_dim)
    E1 = _unit(target, u, np.repeat(c[:, None], grid.n, axis=1) + 0.5 * ux / np.abs(ux).max())
    if target.kind == "S6":
        E2 = _unit(target, u, -cross7(ux, E1))
    elif target.kind == "S2":
        E2 = cross3(u, E1)
    else:
        E2 = np.stack((-E1[1], E1[0]))
    th = 2 * np.pi * K * grid.nodes / grid.period
    s = u + amplitude * (np.cos(th) * E1 + np.sin(th) * E2)
    return AmbientCurve(target, grid, _retract_samples(target, s))


def flatc_data(grid, seed=0, modes=3, amp=0.3):
    """Smooth band-limited complex data ``w`` as the curve ``(Re w, Im w)``."""
    from .manifolds import FLATC

    rng = np.random.default_rng(seed)
    return AmbientCurve(FLATC, grid, _low_modes(rng, 2, grid, modes, amp))
