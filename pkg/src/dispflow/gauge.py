"""Bundle gauge on tangent fields along a curve and the gauged energy.

``Lambda V = V - (k / 3a) J_u Pi_u q(D) V`` with ``q = i p`` applied to each
ambient component. Since ``q`` is odd with imaginary symbol it maps real
fields to real fields, so ``Lambda`` acts on real tangent fields.
"""

from dataclasses import dataclass, field

import numpy as np

from .covariant import AmbientCurve, _J, _proj, l2sq, stack_arrays
from .grid import Multiplier, make_q_multiplier


class GaugeUndefinedError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GaugeOp:
    """``Lambda`` bound to one curve snapshot."""

    k_gauge: int
    a: float
    curve: AmbientCurve = field(repr=False)
    strength: float
    q: Multiplier = field(repr=False)

    def __call__(self, V):
        return gauge_apply(self, V)

    @property
    def M_hat(self):
        """Symbol bound ``1 + |strength| max|p|``."""
        return 1.0 + abs(self.strength) * self.q.sup()


def make_gauge(u, k_gauge, a, strength=None):
    """Gauge of strength ``k/(3a)`` (or an explicit ``strength``) bound to ``u``."""
    if strength is None:
        if a == 0:
            raise GaugeUndefinedError("gauge undefined for a=0; use identity gauge")
        strength = k_gauge / (3.0 * a)
    return GaugeOp(int(k_gauge), float(a), u, float(strength), make_q_multiplier(u.grid))


def identity_gauge(u, k_gauge):
    return make_gauge(u, k_gauge, 0.0, strength=0.0)


def gauge_M_hat(grid, k_gauge, a):
    """``1 + k max|p| / (3|a|)``, the symbol-derived equivalence constant."""
    return 1.0 + k_gauge * make_q_multiplier(grid).sup() / (3.0 * abs(a))


def _q_real(q, V):
    s = q._rsymbol
    n = q.grid.n
    if np.iscomplexobj(V):
        return np.fft.irfft(np.fft.rfft(V.real) * s, n=n) + 1j * np.fft.irfft(np.fft.rfft(V.imag) * s, n=n)
    return np.fft.irfft(np.fft.rfft(V) * s, n=n)


def gauge_array(target, q, u, V, strength):
    """``Lambda V`` for ambient sample arrays (complex input allowed)."""
    if strength == 0:
        return np.array(V, copy=True)
    W = _J(target, u, _proj(target, u, _q_real(q, V)))
    return _proj(target, u, V - strength * W)


def gauge_apply(g, V):
    """Apply ``Lambda`` to a tangent field along the bound curve."""
    V = np.asarray(V)
    u = g.curve
    u.grid.check(V)
    if V.shape != u.samples.shape:
        raise ValueError(f"field shape {V.shape} does not match curve {u.samples.shape}")
    return gauge_array(u.target, g.q, u.samples, V, g.strength)


def gauge_strength(params):
    """``k/(3a)``, or 0 (identity gauge) when ``a = 0``."""
    return 0.0 if params.a == 0 else params.k_gauge / (3.0 * params.a)


def gauged_parts(target, grid, q, u, k, strength):
    """``(||u||_{H^k}^2, ||nabla^k u_x||^2, ||Lambda nabla^k u_x||^2)`` for samples ``u``."""
    st = stack_arrays(target, grid, u, k)
    low = sum(l2sq(grid, V) for V in st[:-1])
    top = st[-1]
    return low, l2sq(grid, top), l2sq(grid, gauge_array(target, q, u, top, strength))


def gauged_energy(u, params):
    """``N_{k+1}(u)^2 = ||u||_{H^k}^2 + ||Lambda nabla_x^k u_x||^2`` with ``k = k_gauge``.

    ``a = 0`` uses the identity gauge.
    """
    q = make_q_multiplier(u.grid)
    low, _, top = gauged_parts(u.target, u.grid, q, u.samples, params.k_gauge, gauge_strength(params))
    return low + top


@dataclass(frozen=True)
class ProbeResult:
    target: str
    K: int
    k_gauge: int
    ungauged_rate: float
    gauged_rate: float
    n_gauged: float  # N_{k+1}(u0)
    delta: float


def cancellation_probe(u0, params, K, delta=1e-6, richardson=True):
    """Instantaneous ``d/dt ||nabla^k u_x||^2`` and ``d/dt ||Lambda nabla^k u_x||^2`` at ``t = 0``.

    Both rates come from differencing solver micro-steps and are divided by
    ``N_{k+1}(u0)^2``. ``K`` is the frequency of the perturbation carried by
    ``u0`` and must satisfy ``K <= n/8``.
    """
    from .solver import resolved_delta, snapshot_derivative

    if params.a == 0:
        raise GaugeUndefinedError("gauge undefined for a=0; use identity gauge")
    grid, target = u0.grid, u0.target
    if K > grid.n // 8:
        raise ValueError(f"spike frequency K={K} exceeds n/8={grid.n // 8}")
    k = params.k_gauge
    q = make_q_multiplier(grid)
    strength = gauge_strength(params)

    def both(samples):
        _, top, gtop = gauged_parts(target, grid, q, samples, k, strength)
        return np.array([top, gtop])

    rates = snapshot_derivative(u0, params, both, delta=delta, richardson=richardson)
    low, _, gtop = gauged_parts(target, grid, q, u0.samples, k, strength)
    nsq = low + gtop
    return ProbeResult(
        target=str(target),
        K=int(K),
        k_gauge=k,
        ungauged_rate=float(rates[0] / nsq),
        gauged_rate=float(rates[1] / nsq),
        n_gauged=float(np.sqrt(nsq)),
        delta=resolved_delta(u0, params, delta, params.eps == 0),
    )


PROBE_COLUMNS = ("target", "K", "k_gauge", "ungauged_rate", "gauged_rate", "N_{k+1}")


def probe_rows(results):
    return [
        (r.target, r.K, r.k_gauge, repr(r.ungauged_rate), repr(r.gauged_rate), repr(r.n_gauged))
        for r in results
    ]


def spike_amplitude(K, amplitude, K_ref, k_gauge):
    """``amplitude (K_ref/K)^{k+1}``: keeps the spike's share of ``||nabla^k u_x||`` fixed across ``K``."""
    return amplitude * (K_ref / K) ** (k_gauge + 1)


def probe_sweep(target, grid, params, K_list, amplitude=1e-2, seed=0, K_ref=None):
    """Run :func:`cancellation_probe` on spike curves for each ``K``.

    The perturbation amplitude is ``amplitude`` at ``K_ref`` (default the
    smallest ``K``) and scales like ``K^{-(k+1)}``, so the top-order energy
    of the spike is the same for every ``K`` while its lower-order norms
    shrink.
    """
    from .presets import spike_curve

    K_ref = min(K_list) if K_ref is None else K_ref
    out = []
    for K in K_list:
        A = spike_amplitude(K, amplitude, K_ref, params.k_gauge)
        out.append(cancellation_probe(spike_curve(target, grid, K, amplitude=A, seed=seed), params, K))
    return out
