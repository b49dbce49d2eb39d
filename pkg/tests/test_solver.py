import math
import time
import warnings

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from dispflow import presets
from dispflow.covariant import AmbientCurve, FlowParams, energy, flow_rhs
from dispflow.grid import make_grid
from dispflow.manifolds import S2, S6
from dispflow.solver import (
    BlowUpError,
    CFLWarning,
    Stepper,
    ambient_sobolev_distance,
    epsilon_continuation,
    evolve,
    plan_steps,
    read_snapshots,
    regrid,
    step_imex,
    write_snapshots,
)

from .oracles import scalar_flat_solve


def _da_rios_residual(omega, n=128, alpha=math.pi / 3):
    # u_t - u x u_xx for the rotating ansatz, evaluated analytically at t = 0
    g = make_grid(n)
    u = presets.latitude_circle(g, alpha)
    ut = omega * np.stack((-u.samples[1], u.samples[0], 0 * u.samples[2]))
    return np.max(np.abs(ut - flow_rhs(u, FlowParams())))


def test_da_rios_rate_certified():
    w = presets.da_rios_rate()
    assert w == pytest.approx(-2 * math.pi**2)
    assert _da_rios_residual(w) <= 1e-10
    assert _da_rios_residual(w * 1.001) > 1e-3


def test_da_rios_rotation():
    g = make_grid(128)
    w = presets.da_rios_rate()
    t0 = time.perf_counter()
    tr = evolve(presets.latitude_circle(g), FlowParams(t_end=0.1), records=4)
    elapsed = time.perf_counter() - t0
    exact = presets.latitude_circle(g, t=0.1, omega=w)
    assert tr.status == "ok"
    assert np.max(np.abs(tr.final.samples - exact.samples)) <= 1e-6
    assert elapsed < 10


def test_flat_target_matches_scalar_solver():
    g = make_grid(128)
    u0 = presets.flatc_data(g, seed=0)
    p = FlowParams(a=1.0, b=0.5, t_end=0.05)
    out = evolve(u0, p, records=2).final.samples
    ref = scalar_flat_solve(u0.samples[0] + 1j * u0.samples[1], g.period, 1.0, 0.5, 0.05)
    assert np.max(np.abs(out[0] + 1j * out[1] - ref)) <= 1e-7


def _phase_speed_oracle(u, params):
    # the rhs on a latitude circle is a multiple of d/dphi; rigid rotation about
    # the axis and translation in x act identically here, so only their sum is
    # identifiable: brute-force grid, then bounded refinement
    r = flow_rhs(u, params)
    dphi = np.stack((-u.samples[1], u.samples[0], 0 * u.samples[2]))

    def residual(w):
        return float(np.linalg.norm(r - w * dphi))

    grid = np.linspace(-200, 200, 4001)
    w0 = grid[np.argmin([residual(w) for w in grid])]
    res = minimize_scalar(residual, bounds=(w0 - 0.2, w0 + 0.2), method="bounded", options={"xatol": 1e-12})
    return res.x, res.fun


def test_fukumoto_miyazaki_phase_speed():
    g = make_grid(16)
    u0 = presets.latitude_circle(g)
    a = 1.0
    p = FlowParams(a=a, b=a / 2, t_end=0.01)
    w_oracle, resid = _phase_speed_oracle(u0, p)
    assert resid < 1e-8 * np.linalg.norm(flow_rhs(u0, p))
    tr = evolve(u0, p, records=2, diagnostics=False)
    s = tr.final.samples
    w_num = float(np.angle(np.exp(1j * np.arctan2(s[1, 0], s[0, 0])))) / p.t_end
    # circle stays a circle at the same latitude
    assert np.allclose(s[2], u0.samples[2, 0], atol=1e-9)
    assert abs(w_num - w_oracle) <= 1e-4 * abs(w_oracle)


def test_spectral_convergence():
    # the latitude circle is band-limited, so the error is the time error at
    # dt ~ 1/n^2: doubling n must cut it by 100 until the roundoff floor
    w = presets.da_rios_rate()
    errs = []
    for n in (16, 32, 64):
        g = make_grid(n)
        out = evolve(presets.latitude_circle(g), FlowParams(t_end=0.1), records=1, diagnostics=False).final
        errs.append(np.max(np.abs(out.samples - presets.latitude_circle(g, t=0.1, omega=w).samples)))
    for coarse, fine in zip(errs, errs[1:]):
        assert fine <= max(coarse / 100, 1e-12)


@pytest.mark.parametrize("target", [S2, S6])
def test_time_reversal(target):
    g = make_grid(128)
    u0 = presets.smooth_curve(target, g, seed=1)
    p = FlowParams(b=0.2)
    h = p.time_step(g)
    fwd, back = Stepper(target, g, p, h), Stepper(target, g, p, -h)
    s = np.array(u0.samples)
    for _ in range(100):
        s = fwd.step(s)
    assert np.max(np.abs(s - u0.samples)) > 1e-4
    for _ in range(100):
        s = back.step(s)
    assert np.max(np.abs(s - u0.samples)) <= 1e-6


def test_time_reversal_with_dispersion():
    g = make_grid(64)
    u0 = presets.smooth_curve(S6, g, seed=1)
    p = FlowParams(a=0.3, b=0.2)
    h = p.time_step(g, u0)
    s = np.array(u0.samples)
    for dt in (h, -h):
        st = Stepper(S6, g, p, dt)
        for _ in range(100):
            s = st.step(s)
    assert np.max(np.abs(s - u0.samples)) <= 1e-6


@pytest.mark.parametrize("target", ["S2", "S6", "FlatC"])
def test_energy_conserved(target):
    g = make_grid(128)
    u0 = presets.flatc_data(g) if target == "FlatC" else presets.smooth_curve(target, g)
    a = 1.0 if target == "FlatC" else 0.05
    tr = evolve(u0, FlowParams(a=a, b=0.5, t_end=0.002), records=10)
    E = np.array([r.E for r in tr.diag])
    assert np.max(np.abs(E - E[0])) / E[0] <= 1e-8
    assert max(r.constraint for r in tr.diag) <= 1e-10


def test_energy_dissipated_each_step():
    g = make_grid(64)
    u = presets.smooth_curve(S2, g, seed=2, amp=0.05)
    p = FlowParams(eps=1e-3)
    e = energy(u)
    for _ in range(50):
        u = step_imex(u, p)
        e_new = energy(u)
        assert e_new < e
        e = e_new


def test_constant_curve_fixed_point():
    g = make_grid(32)
    s = np.zeros((3, 32))
    s[2] = 1.0
    u = AmbientCurve(S2, g, s)
    out = step_imex(u, FlowParams(a=1.0, b=1.0, eps=0.1))
    assert np.array_equal(out.samples, s)


def test_cfl_warning():
    g = make_grid(32)
    u = presets.great_circle(S2, g)
    with pytest.warns(CFLWarning):
        step_imex(u, FlowParams(), dt=1.0 / g.xi_max**2)


def test_negative_dt_rejected_with_viscosity():
    g = make_grid(32)
    with pytest.raises(ValueError):
        Stepper(S2, g, FlowParams(eps=0.1), -1e-6)


def test_plan_lands_on_t_end():
    g = make_grid(64)
    p = FlowParams(t_end=0.0123)
    nsteps, dt = plan_steps(p, g)
    assert nsteps * dt == pytest.approx(0.0123, rel=1e-14)
    assert dt <= p.time_step(g)


def test_blowup_reported():
    # a flat target has no retraction to cap growth; a huge step overflows
    g = make_grid(32)
    u0 = presets.flatc_data(g)
    p = FlowParams(b=5.0, dt=1e-2, t_end=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = evolve(u0, p, records=50, diagnostics=False)
        assert tr.status == "blow-up"
        assert "blow-up" in tr.message
        assert tr.snapshots and tr.snapshots[-1][0] < 1.0
        with pytest.raises(BlowUpError) as info:
            evolve(u0, p, records=50, diagnostics=False, on_blowup="raise")
    assert info.value.trajectory.status == "blow-up"


def test_snapshot_roundtrip(tmp_path):
    g = make_grid(32)
    tr = evolve(presets.smooth_curve(S6, g), FlowParams(t_end=1e-3), records=3, diagnostics=False)
    path = tmp_path / "snap.bin"
    write_snapshots(path, tr)
    raw = path.read_bytes()
    assert raw[:4] == b"DFLW"
    L, arr = read_snapshots(path)
    assert L == 1.0
    assert arr.shape == (len(tr.snapshots), 7, 32)
    for block, (_, c) in zip(arr, tr.snapshots):
        assert np.array_equal(block, c.samples)


def test_snapshot_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(ValueError):
        read_snapshots(path)


def test_continuation_reference_distance_zero():
    g = make_grid(32)
    rows, _ = epsilon_continuation(presets.smooth_curve(S2, g), FlowParams(t_end=1e-3), [1e-2, 0.0], records=2)
    assert rows[-1].distance == 0.0
    assert rows[0].distance > 0.0


@pytest.mark.parametrize("eps_list", [[1e-3, 1e-2, 0.0], [1e-2, 1e-3]])
def test_continuation_list_checked(eps_list):
    g = make_grid(32)
    with pytest.raises(ValueError):
        epsilon_continuation(presets.smooth_curve(S2, g), FlowParams(t_end=1e-3), eps_list)


def test_regrid_preserves_band_limited_curve():
    u = presets.great_circle(S2, make_grid(32))
    v = regrid(u, 64)
    assert np.allclose(v.samples, presets.great_circle(S2, make_grid(64)).samples)
    assert ambient_sobolev_distance(v.grid, v.samples, v.samples, 2) == 0.0
