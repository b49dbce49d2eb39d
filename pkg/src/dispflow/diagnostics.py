"""Diagnostics along a run: norm records, instantaneous rates, Gronwall fits, CSV and SVG."""

import csv
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from . import kernels
from .covariant import _d, _proj, energy, l2sq, rhs_array, stack_arrays
from .gauge import gauge_array, gauge_strength, gauged_parts
from .grid import make_q_multiplier
from .solver import snapshot_derivative

FUNCTIONALS = ("hk_top", "gauged_top", "energy")
ROUTES = ("fd", "analytic", "complex-step")


@dataclass(frozen=True)
class DiagRecord:
    t: float
    E: float
    hnorms: tuple  # ||u||_{H^1}, ..., ||u||_{H^{k+1}}
    n_gauged: float  # N_{k+1}
    constraint: float
    rates: tuple | None = None  # (ungauged_rate, gauged_rate)


def record(u, params, rates=None):
    """All norm diagnostics of one snapshot."""
    grid = u.grid
    st = stack_arrays(u.target, grid, u.samples, params.k_gauge)
    sq = [l2sq(grid, V) for V in st]
    hn = tuple(float(v) for v in np.sqrt(np.cumsum(sq)))
    top = gauge_array(u.target, make_q_multiplier(grid), u.samples, st[-1], gauge_strength(params))
    ng = math.sqrt(sum(sq[:-1]) + l2sq(grid, top))
    return DiagRecord(
        t=float(u.t), E=0.5 * sq[0], hnorms=hn, n_gauged=ng, constraint=u.constraint, rates=rates
    )


def diag_columns(k_gauge):
    return ["t", "E"] + [f"H^{l}" for l in range(1, k_gauge + 2)] + ["N_{k+1}", "constraint"]


def diag_rows(records):
    return [[r.t, r.E, *r.hnorms, r.n_gauged, r.constraint] for r in records]


# -- Gronwall fit --------------------------------------------------------------

@dataclass(frozen=True)
class GronwallFit:
    C: float  # fitted growth rate of N
    intercept: float  # fitted log N(0)
    residual: float  # RMS residual of the log fit
    max_fd_slope: float  # largest finite-difference slope of log N
    accepted: bool  # C bounds every FD slope within 10% slack


def gronwall_fit(series):
    """Least-squares slope of ``log N`` against ``t`` for samples ``(t, N)``."""
    data = np.asarray(series, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 10:
        raise ValueError("gronwall_fit needs at least 10 (t, N) samples")
    t, N = data[:, 0], data[:, 1]
    if np.any(N <= 0):
        raise ValueError("gronwall_fit needs N > 0")
    y = np.log(N)
    A = np.stack((t, np.ones_like(t)), axis=1)
    (C, c0), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([C, c0]) - y) ** 2)))
    slopes = np.diff(y) / np.diff(t)
    smax = float(slopes.max())
    slack = 0.1 * abs(C) + 1e-12
    return GronwallFit(float(C), float(c0), resid, smax, bool(smax <= C + slack))


# -- rate probes ---------------------------------------------------------------

def _functional(target, grid, params, name):
    k = params.k_gauge
    if name == "energy":
        return lambda s: 0.5 * l2sq(grid, _d(grid, s) if np.isrealobj(s) else stack_arrays(target, grid, s, 0)[0])
    if name == "hk_top":
        return lambda s: l2sq(grid, stack_arrays(target, grid, s, k)[-1])
    if name == "gauged_top":
        q = make_q_multiplier(grid)
        strength = gauge_strength(params)
        return lambda s: gauged_parts(target, grid, q, s, k, strength)[2]
    raise ValueError(f"unknown functional {name!r}; expected one of {FUNCTIONALS}")


def hk_top_rate_analytic(u, params):
    """``2 <nabla_t nabla^k u_x, nabla^k u_x>`` through the curvature commutation formula.

    ``nabla_t nabla^l u_x = nabla^{l+1} u_t - sum_{m<l} nabla^{l-1-m} R(u_x, u_t) nabla^m u_x``.
    """
    target, grid, s = u.target, u.grid, u.samples
    k = params.k_gauge
    ut = rhs_array(target, grid, s, params.a, params.b, params.eps)
    st = stack_arrays(target, grid, s, k)

    def nab(V, times):
        for _ in range(times):
            V = _proj(target, s, _d(grid, V))
        return V

    W = nab(ut, k + 1)
    if target.is_sphere:
        for m in range(k):
            W = W - nab(kernels.sphere_curvature(st[0], ut, st[m]), k - 1 - m)
    return 2.0 * grid.dx * float(np.sum(W * st[-1]))


def energy_rate_analytic(u, params):
    """``dE/dt = -eps ||nabla^2 u_x||^2`` for ``E = (1/2)||u_x||^2``."""
    if params.eps == 0:
        return 0.0
    st = stack_arrays(u.target, u.grid, u.samples, 2)
    return -params.eps * l2sq(u.grid, st[2])


def rate_probe(u, params, functional, route="fd", delta=1e-6):
    """``d/dt`` of a functional at the snapshot ``u``.

    ``fd`` differences solver micro-steps; ``complex-step`` evaluates the
    exact directional derivative along ``u_t`` of the semidiscrete functional;
    ``analytic`` uses closed forms (``energy`` always, ``hk_top`` on sphere
    and flat targets).
    """
    target, grid = u.target, u.grid
    if route == "analytic":
        if functional == "energy":
            return energy_rate_analytic(u, params)
        if functional == "hk_top":
            return hk_top_rate_analytic(u, params)
        raise ValueError(f"no analytic route for {functional!r}")
    F = _functional(target, grid, params, functional)
    if route == "fd":
        return float(snapshot_derivative(u, params, F, delta=delta))
    if route == "complex-step":
        h = 1e-30
        ut = rhs_array(target, grid, u.samples, params.a, params.b, params.eps)
        return float(np.imag(F(u.samples + 1j * h * ut)) / h)
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")


# -- output --------------------------------------------------------------------

def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, columns, rows):
    """RFC-4180 CSV with floats written by ``repr`` (round-trips exactly)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def svg_from_csv(csv_path, svg_path, x="t", width=640, height=400):
    """Static SVG line chart of every numeric column against ``x``, one panel each."""
    header, rows = read_csv(csv_path)
    if x not in header:
        raise ValueError(f"{csv_path}: no column {x!r}")
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in rows])
        except ValueError:
            continue
    xs = cols.pop(x)
    panels = [(name, v) for name, v in cols.items() if np.all(np.isfinite(v))]
    ph = height
    total_h = max(1, len(panels)) * ph
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{total_h}">',
    ]
    pad = 50
    for i, (name, ys) in enumerate(panels):
        y0 = i * ph
        x_lo, x_hi = float(xs.min()), float(xs.max())
        y_lo, y_hi = float(ys.min()), float(ys.max())
        xr = (x_hi - x_lo) or 1.0
        yr = (y_hi - y_lo) or 1.0
        pts = " ".join(
            f"{pad + (a - x_lo) / xr * (width - 2 * pad):.2f},{y0 + ph - pad - (b - y_lo) / yr * (ph - 2 * pad):.2f}"
            for a, b in zip(xs, ys)
        )
        out.append(f'<rect x="{pad}" y="{y0 + pad}" width="{width - 2 * pad}" height="{ph - 2 * pad}" fill="none" stroke="#999"/>')
        out.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e99" stroke-width="1.5"/>')
        out.append(f'<text x="{pad}" y="{y0 + pad - 8}" font-size="13">{escape(name)} vs {escape(x)}</text>')
        out.append(f'<text x="4" y="{y0 + pad + 4}" font-size="10">{y_hi:.4g}</text>')
        out.append(f'<text x="4" y="{y0 + ph - pad}" font-size="10">{y_lo:.4g}</text>')
        out.append(f'<text x="{pad}" y="{y0 + ph - pad + 14}" font-size="10">{x_lo:.4g}</text>')
        out.append(f'<text x="{width - pad - 30}" y="{y0 + ph - pad + 14}" font-size="10">{x_hi:.4g}</text>')
    out.append("</svg>")
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


__all__ = [
    "DiagRecord",
    "GronwallFit",
    "record",
    "gronwall_fit",
    "rate_probe",
    "hk_top_rate_analytic",
    "energy_rate_analytic",
    "diag_columns",
    "diag_rows",
    "write_csv",
    "read_csv",
    "svg_from_csv",
    "energy",
]
