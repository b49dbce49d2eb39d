"""Periodic collocation grid, spectral derivatives and Fourier multipliers.

Fields are numpy arrays whose *last* axis runs over the ``n`` grid nodes, so a
scalar field has shape ``(n,)`` and an ambient curve or tangent field has shape
``(d, n)``. Frequencies follow ``xi_j = 2 pi j / L``; the unpaired Nyquist
mode is dropped by every odd operator.
"""

from dataclasses import dataclass, field

import numpy as np

PARITIES = ("even-real", "odd-real", "odd-imaginary")


class GridMismatchError(ValueError):
    pass


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Equispaced periodic grid ``x_j = j L / n`` with its frequency lattice."""

    n: int
    period: float
    nodes: np.ndarray = field(repr=False)
    freqs: np.ndarray = field(repr=False)  # FFT order, Nyquist stored as -pi n / L
    rfreqs: np.ndarray = field(repr=False)  # rfft order, Nyquist last
    _rsym: tuple = field(repr=False)
    _csym: tuple = field(repr=False)
    _rkeep: np.ndarray = field(repr=False)
    _ckeep: np.ndarray = field(repr=False)

    @property
    def dx(self):
        return self.period / self.n

    @property
    def xi_max(self):
        """Largest resolved frequency magnitude (the Nyquist frequency)."""
        return np.pi * self.n / self.period

    @property
    def modes(self):
        """Integer mode numbers in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    def same_as(self, other):
        return self.n == other.n and self.period == other.period

    def check(self, *fields):
        for f in fields:
            if np.shape(f)[-1] != self.n:
                raise GridMismatchError(
                    f"field with {np.shape(f)[-1]} samples on a grid of {self.n} nodes"
                )

    def derivative_symbol(self, order, real=True):
        """Samples of ``(i xi)^order``; Nyquist zeroed for odd orders."""
        return (self._rsym if real else self._csym)[order]


def make_grid(n, L=1.0):
    n_int = int(n)
    if n_int != n or n_int < 16 or n_int % 2:
        raise ValueError(f"grid size must be an even integer >= 16, got {n!r}")
    if not L > 0:
        raise ValueError(f"period must be positive, got {L!r}")
    L = float(L)
    modes = np.fft.fftfreq(n_int, d=1.0 / n_int)
    freqs = 2 * np.pi * modes / L
    rmodes = np.arange(n_int // 2 + 1)
    rfreqs = 2 * np.pi * rmodes / L
    nyq_c = np.abs(modes) == n_int // 2
    nyq_r = rmodes == n_int // 2
    rsym, csym = [], []
    for order in range(5):
        r = (1j * rfreqs) ** order
        c = (1j * freqs) ** order
        if order % 2:
            r[nyq_r] = 0
            c[nyq_c] = 0
        rsym.append(_frozen(r))
        csym.append(_frozen(c))
    cut = (n_int - 1) // 3
    return Grid(
        n=n_int,
        period=L,
        nodes=_frozen(np.arange(n_int) * L / n_int),
        freqs=_frozen(freqs),
        rfreqs=_frozen(rfreqs),
        _rsym=tuple(rsym),
        _csym=tuple(csym),
        _rkeep=_frozen(rmodes <= cut),
        _ckeep=_frozen(np.abs(modes) <= cut),
    )


def spectral_derivative(grid, f, order=1):
    """Exact ``order``-th derivative of the band-limited interpolant of ``f``."""
    if not 0 <= order <= 4:
        raise ValueError(f"derivative order must be in 0..4, got {order}")
    grid.check(f)
    f = np.asarray(f)
    if order == 0:
        return f.copy()
    if np.isrealobj(f):
        return np.fft.irfft(np.fft.rfft(f) * grid._rsym[order], n=grid.n)
    return np.fft.ifft(np.fft.fft(f) * grid._csym[order])


def dealias(grid, f):
    """Zero the upper third of the spectrum (2/3 rule)."""
    grid.check(f)
    if np.isrealobj(f):
        return np.fft.irfft(np.fft.rfft(f) * grid._rkeep, n=grid.n)
    return np.fft.ifft(np.fft.fft(f) * grid._ckeep)


def product(grid, f, g):
    """Dealiased pointwise product of two fields (2/3 rule on inputs and output)."""
    return dealias(grid, dealias(grid, f) * dealias(grid, g))


def l2_inner(grid, f, g):
    """``(L/n) sum f conj(g)`` summed over every axis (ambient components included)."""
    grid.check(f, g)
    if np.shape(f) != np.shape(g):
        raise GridMismatchError(f"shape mismatch {np.shape(f)} vs {np.shape(g)}")
    return grid.dx * np.sum(f * np.conj(g))


def l2_norm(grid, f):
    return float(np.sqrt(abs(l2_inner(grid, f, f).real)))


@dataclass(frozen=True, eq=False)
class Multiplier:
    """Fourier multiplier given by symbol samples on a grid.

    ``parity`` is checked exactly on the stored samples at construction.
    """

    name: str
    parity: str
    symbol: np.ndarray = field(repr=False)  # FFT order, complex
    grid: Grid = field(repr=False)
    _rsymbol: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise ValueError(f"unknown parity {self.parity!r}")
        m = np.asarray(self.symbol, dtype=complex)
        if m.shape != (self.grid.n,):
            raise GridMismatchError(f"symbol has shape {m.shape}, grid has {self.grid.n} nodes")
        flipped = m[(-self.grid.modes) % self.grid.n]  # m(-xi_j)
        nyq = self.grid.n // 2
        if self.parity == "even-real":
            ok = np.all(m.imag == 0) and np.array_equal(flipped, m)
        elif self.parity == "odd-real":
            ok = np.all(m.imag == 0) and np.array_equal(flipped, -m) and m[nyq] == 0
        else:
            ok = np.all(m.real == 0) and np.array_equal(flipped, -m) and m[nyq] == 0
        if not ok:
            raise ValueError(f"symbol of {self.name!r} does not have parity {self.parity}")
        object.__setattr__(self, "symbol", _frozen(m))
        r = m[: self.grid.n // 2 + 1].copy()
        r[-1] = m[nyq]
        object.__setattr__(self, "_rsymbol", _frozen(r))

    @property
    def real_preserving(self):
        return self.parity != "odd-real"

    def apply(self, f):
        """Apply through the complex transform; always returns a complex field."""
        self.grid.check(f)
        return np.fft.ifft(np.fft.fft(f) * self.symbol)

    __call__ = apply

    def apply_real(self, f):
        """Real-to-real application via the real transform.

        Only defined for parities that map real fields to real fields.
        """
        if not self.real_preserving:
            raise ValueError(f"{self.name} (odd-real) does not map real fields to real fields")
        self.grid.check(f)
        return np.fft.irfft(np.fft.rfft(f) * self._rsymbol, n=self.grid.n)

    def sup(self):
        return float(np.max(np.abs(self.symbol)))


def smoothstep5(t):
    """Quintic C2 smoothstep on [0, 1], clipped outside."""
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10 - 15 * t + 6 * t**2)


def p_symbol(xi):
    """Odd cut-off inverse: ``1/xi`` for ``|xi| >= 2``, zero on ``[-1, 1]``."""
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)
    out = np.zeros_like(xi)
    nz = a > 0
    out[nz] = np.sign(xi[nz]) * smoothstep5(a[nz] - 1.0) / a[nz]
    return out


def _odd_samples(grid, values):
    values = np.array(values, dtype=float)
    values[grid.n // 2] = 0.0
    # enforce exact antisymmetry on the stored samples
    half = grid.n // 2
    values[half + 1:] = -values[1:half][::-1]
    return values


def make_p_multiplier(grid):
    return Multiplier("p", "odd-real", _odd_samples(grid, p_symbol(grid.freqs)).astype(complex), grid)


def make_q_multiplier(grid):
    """``q(D) = i p(D)``; maps real fields to real fields."""
    p = _odd_samples(grid, p_symbol(grid.freqs))
    return Multiplier("q", "odd-imaginary", 1j * p, grid)


def make_pd_multiplier(grid):
    """``p(D) D`` with symbol ``p(xi) xi``, identically 1 for ``|xi| >= 2``."""
    s = smoothstep5(np.abs(grid.freqs) - 1.0)
    s[grid.n // 2] = 0.0  # D drops Nyquist
    return Multiplier("pD", "even-real", s.astype(complex), grid)


def make_bracket_inv(grid):
    """``<D>^{-1} = (1 - d^2/dx^2)^{-1/2}``."""
    s = (1.0 + grid.freqs**2) ** -0.5
    return Multiplier("bracket_inv", "even-real", s.astype(complex), grid)
