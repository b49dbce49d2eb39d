"""Reference computations that share no code with the package."""

import numpy as np
from scipy.integrate import solve_ivp


def scalar_flat_solve(w0, L, a, b, t_end):
    """Solve ``w_t = a w_xxx + i w_xx + b |w_x|^2 w_x`` for complex periodic ``w``.

    Complex FFT; the linear part is an integrating factor and the cubic term
    goes to DOP853 at tight tolerances.
    """
    n = w0.size
    xi = 2 * np.pi * np.fft.fftfreq(n, d=L / n)
    xi[n // 2] = 0.0
    lin = a * (1j * xi) ** 3 + 1j * (1j * xi) ** 2

    def f(t, v):
        wh = np.exp(lin * t) * v
        wx = np.fft.ifft(1j * xi * wh)
        return np.exp(-lin * t) * np.fft.fft(b * np.abs(wx) ** 2 * wx)

    sol = solve_ivp(f, (0, t_end), np.fft.fft(w0), method="DOP853", rtol=1e-12, atol=1e-12)
    return np.fft.ifft(np.exp(lin * t_end) * sol.y[:, -1])
