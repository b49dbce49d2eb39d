"""Command-line entry point.

Configuration comes from an optional flat ``key = value`` file (snake_case
keys, ``#`` comments) and from flags (kebab-case); flags win. Each scenario
writes CSV files, an optional SVG per CSV and ``manifest.json`` into
``output_dir``.

Exit codes: 0 ok, 1 failed invariant check, 2 configuration error,
3 numerical blow-up, 4 I/O error.
"""

import argparse
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__

SCENARIOS = ("linear-lab", "flow", "gauge-probe", "epsilon-continuation", "invariants")
PRESETS = ("none", "da-rios", "fukumoto-miyazaki")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class RunConfig:
    scenario: str = "flow"
    target: str = "s2"
    preset: str = "none"
    n: int = 128
    L: float | None = None  # default 1, or 2 pi for linear-lab
    a: float = 0.0
    b: float | None = None  # default 0, or a/2 under fukumoto-miyazaki
    eps: float = 0.0
    k_gauge: int = 2
    dt: float | None = None
    t_end: float = 0.1
    c_cfl: float = 0.5
    K_list: list = field(default_factory=lambda: [8, 16, 32])
    eps_list: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 0.0])
    amplitude: float = 1e-2
    alpha: float = math.pi / 3
    m: int = 1
    band: int = 8
    records: int = 50
    seed: int = 0
    output_dir: str = "dispflow-out"
    emit_svg: bool = False
    dump_snapshots: bool = False


_KINDS = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, raw):
    kind = _KINDS[key]
    text = str(raw).strip()
    try:
        if key in ("K_list",):
            return [int(v) for v in text.replace(",", " ").split()]
        if key in ("eps_list",):
            return [float(v) for v in text.replace(",", " ").split()]
        if kind in ("bool", bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in str(kind) and "float" not in str(kind):
            return int(text)
        if "float" in str(kind):
            if text.lower() in ("none", ""):
                return None
            return float(text)
        return text
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r}") from None


def read_config_file(path):
    """Flat UTF-8 ``key = value`` pairs."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    out = {}
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {num}", f"expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KINDS:
            raise ConfigError(key, "unknown key")
        out[key] = _convert(key, value)
    return out


def validate(cfg):
    if cfg.scenario not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {cfg.scenario!r}; expected one of {', '.join(SCENARIOS)}")
    if cfg.target.lower() not in ("s2", "s6", "flatc"):
        raise ConfigError("target", f"unknown target {cfg.target!r}; expected s2, s6 or flatc")
    cfg.target = cfg.target.lower()
    if cfg.preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset {cfg.preset!r}; expected one of {', '.join(PRESETS)}")
    if cfg.n < 16 or cfg.n % 2:
        raise ConfigError("n", f"grid size must be an even integer >= 16, got {cfg.n}")
    if cfg.L is None:
        cfg.L = 2 * math.pi if cfg.scenario == "linear-lab" else 1.0
    if not cfg.L > 0:
        raise ConfigError("L", f"period must be positive, got {cfg.L}")
    if cfg.preset == "da-rios":
        if cfg.a or cfg.eps or cfg.b:
            raise ConfigError("preset", "da-rios requires a = b = eps = 0")
        cfg.target = "s2"
    if cfg.b is None:
        cfg.b = cfg.a / 2 if cfg.preset == "fukumoto-miyazaki" else 0.0
    if not cfg.eps >= 0:
        raise ConfigError("eps", f"must be >= 0, got {cfg.eps}")
    if cfg.k_gauge < 1:
        raise ConfigError("k_gauge", f"must be >= 1, got {cfg.k_gauge}")
    if cfg.dt is not None and not cfg.dt > 0:
        raise ConfigError("dt", f"must be > 0, got {cfg.dt}")
    if not cfg.t_end >= 0:
        raise ConfigError("t_end", f"must be >= 0, got {cfg.t_end}")
    if cfg.records < 1:
        raise ConfigError("records", "must be >= 1")
    if cfg.scenario == "gauge-probe":
        if cfg.a == 0:
            raise ConfigError("a", "gauge undefined for a=0")
        if cfg.target == "flatc":
            raise ConfigError("target", "gauge-probe needs a sphere target (s2 or s6)")
        if not cfg.K_list:
            raise ConfigError("K_list", "empty")
        for K in cfg.K_list:
            if K < 1 or K > cfg.n // 8:
                raise ConfigError("K_list", f"K={K} must lie in 1..n/8={cfg.n // 8}")
    if cfg.scenario == "epsilon-continuation":
        e = cfg.eps_list
        if not e or e[-1] != 0.0:
            raise ConfigError("eps_list", "must end with 0")
        if any(y > x for x, y in zip(e, e[1:])) or any(x < 0 for x in e):
            raise ConfigError("eps_list", "must be nonnegative and sorted in decreasing order")
    if cfg.scenario == "linear-lab" and not 1 <= cfg.band <= cfg.n // 4:
        raise ConfigError("band", f"must lie in 1..n/4={cfg.n // 4}")
    return cfg


def build_parser():
    ap = argparse.ArgumentParser(prog="dispflow", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="flat key = value configuration file")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "K_list":
            flag = "--K-list"
        ap.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())
    return ap


def parse_config(argv=None):
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for key in _KINDS:
        raw = getattr(args, key)
        if raw is not None:
            values[key] = _convert(key, raw)
    return validate(RunConfig(**values))


# -- scenarios -------------------------------------------------------------------

def _params(cfg, **over):
    from .covariant import FlowParams

    p = FlowParams(a=cfg.a, b=cfg.b, eps=cfg.eps, k_gauge=cfg.k_gauge, dt=cfg.dt, t_end=cfg.t_end, c_cfl=cfg.c_cfl)
    return p.replace(**over) if over else p


def _initial(cfg, grid):
    from . import presets

    if cfg.target == "s2" and cfg.preset in ("da-rios", "fukumoto-miyazaki"):
        return presets.latitude_circle(grid, cfg.alpha, cfg.m)
    if cfg.target == "flatc":
        return presets.flatc_data(grid, cfg.seed)
    return presets.smooth_curve(cfg.target, grid, cfg.seed)


def _scenario_flow(cfg, out):
    from .diagnostics import diag_columns, diag_rows, write_csv
    from .grid import make_grid
    from .solver import evolve, write_snapshots

    g = make_grid(cfg.n, cfg.L)
    traj = evolve(_initial(cfg, g), _params(cfg), records=cfg.records)
    write_csv(os.path.join(out, "trajectory.csv"), diag_columns(cfg.k_gauge), diag_rows(traj.diag))
    if cfg.dump_snapshots:
        write_snapshots(os.path.join(out, "snapshots.bin"), traj)
    if traj.status != "ok":
        print(traj.message, file=sys.stderr)
        return EXIT_BLOWUP, ["trajectory.csv"]
    return EXIT_OK, ["trajectory.csv"]


def _scenario_linear(cfg, out):
    from . import linear_lab as ll
    from .diagnostics import write_csv
    from .grid import make_grid

    g = make_grid(cfg.n, cfg.L)
    co = ll.preset_coeffs(g)
    rng = np.random.default_rng(cfg.seed)
    U0 = ll.random_band_limited(g, rng, band=cfg.band)[0]
    traj = ll.evolve_linear(co, U0, cfg.t_end, dt=cfg.dt, records=cfg.records)
    write_csv(os.path.join(out, "linear.csv"), ll.LINEAR_COLUMNS, ll.linear_rows(co, traj))
    fields_ = ll.random_band_limited(g, rng, count=20)
    rows = []
    for name, op in (("r2", ll.r2_apply), ("r3", ll.r3_apply), ("r4", ll.r4_apply)):
        rows.append((name, ll.frequency_sweep(lambda U, op=op: op(co, U), g).slope))
    rows.append(
        (
            "r3_identity_residual",
            ll.commutator_residual(
                lambda U: ll.neg_commutator_lambda_d3(co, U), lambda U: ll.r3_identity_rhs(co, U), fields_, g
            ),
        )
    )
    write_csv(os.path.join(out, "remainders.csv"), ("quantity", "value"), rows)
    code = EXIT_OK if traj.status == "ok" else EXIT_BLOWUP
    return code, ["linear.csv", "remainders.csv"]


def _scenario_probe(cfg, out):
    from .diagnostics import write_csv
    from .gauge import PROBE_COLUMNS, probe_rows, probe_sweep
    from .grid import make_grid
    from .manifolds import get_target

    g = make_grid(cfg.n, cfg.L)
    res = probe_sweep(get_target(cfg.target), g, _params(cfg), cfg.K_list, cfg.amplitude, cfg.seed)
    write_csv(os.path.join(out, "probe.csv"), PROBE_COLUMNS, probe_rows(res))
    return EXIT_OK, ["probe.csv"]


def _scenario_continuation(cfg, out):
    from .diagnostics import write_csv
    from .grid import make_grid
    from .solver import epsilon_continuation

    g = make_grid(cfg.n, cfg.L)
    rows, _ = epsilon_continuation(_initial(cfg, g), _params(cfg), cfg.eps_list, records=cfg.records)
    cols = ("eps", "distance", "N_end", "N_max_ratio", "status")
    write_csv(
        os.path.join(out, "continuation.csv"),
        cols,
        [(r.eps, r.distance, r.n_gauged_end, r.n_gauged_max_ratio, r.status) for r in rows],
    )
    code = EXIT_BLOWUP if any(r.status != "ok" for r in rows) else EXIT_OK
    return code, ["continuation.csv"]


def property_suite(seed=0):
    """Fast structural checks: ``(name, value, threshold, passed)`` rows."""
    from . import linear_lab as ll
    from . import presets
    from .covariant import FlowParams, energy
    from .grid import make_grid, make_q_multiplier
    from .solver import evolve

    rng = np.random.default_rng(seed)
    rows = []

    def add(name, value, thr):
        rows.append((name, float(value), float(thr), bool(value <= thr)))

    worst = 0.0
    for n in (64, 128, 256):
        g = make_grid(n)
        q = make_q_multiplier(g)
        for _ in range(20):
            worst = max(worst, float(np.max(np.abs(q.apply(rng.standard_normal(n)).imag))))
    add("real_preserving_q", worst, 1e-13)

    g = make_grid(128, 2 * math.pi)
    co = ll.preset_coeffs(g)
    Us = ll.random_band_limited(g, rng, count=10)
    add(
        "r3_identity",
        ll.commutator_residual(lambda U: ll.neg_commutator_lambda_d3(co, U), lambda U: ll.r3_identity_rhs(co, U), Us, g),
        1e-9,
    )
    for name, op in (("r2", ll.r2_apply), ("r3", ll.r3_apply), ("r4", ll.r4_apply)):
        add(f"{name}_sweep_slope", ll.frequency_sweep(lambda U, op=op: op(co, U), g).slope, 0.1)

    g = make_grid(64)
    for tgt in ("s2", "s6", "flatc"):
        u0 = presets.flatc_data(g, seed) if tgt == "flatc" else presets.smooth_curve(tgt, g, seed)
        p = FlowParams(t_end=0.005)
        tr = evolve(u0, p, records=5, diagnostics=False)
        e0 = energy(u0)
        add(f"energy_drift_{tgt}", abs(energy(tr.final) - e0) / e0, 1e-8)
        add(f"constraint_{tgt}", max(c.constraint for _, c in tr.snapshots), 1e-10)
    return rows


def _scenario_invariants(cfg, out):
    from .diagnostics import write_csv

    rows = property_suite(cfg.seed)
    width = max(len(r[0]) for r in rows)
    for name, value, thr, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {value:.3e} <= {thr:.1e}")
    write_csv(os.path.join(out, "invariants.csv"), ("check", "value", "threshold", "passed"), rows)
    return (EXIT_OK if all(r[3] for r in rows) else EXIT_CHECK), ["invariants.csv"]


DISPATCH = {
    "flow": _scenario_flow,
    "linear-lab": _scenario_linear,
    "gauge-probe": _scenario_probe,
    "epsilon-continuation": _scenario_continuation,
    "invariants": _scenario_invariants,
}


def _versions():
    from . import kernels

    v = {"dispflow": __version__, "python": platform.python_version(), "numpy": np.__version__, "backend": kernels.BACKEND}
    if kernels.HAS_NUMBA:
        import numba

        v["numba"] = numba.__version__
    return v


def run(cfg):
    """Execute one scenario; returns the exit status."""
    out = cfg.output_dir
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    t0 = time.perf_counter()
    try:
        code, files = DISPATCH[cfg.scenario](cfg, out)
        if cfg.emit_svg:
            from .diagnostics import svg_from_csv

            x_for = {"probe.csv": "K", "continuation.csv": "eps", "remainders.csv": None, "invariants.csv": None}
            for name in list(files):
                x = x_for.get(name, "t")
                if x is None:
                    continue
                svg = name[:-4] + ".svg"
                svg_from_csv(os.path.join(out, name), os.path.join(out, svg), x=x)
                files.append(svg)
        manifest = {
            "config": asdict(cfg),
            "versions": _versions(),
            "wall_time_s": time.perf_counter() - t0,
            "exit_code": code,
            "files": files,
        }
        with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
    except OSError as exc:
        print(f"error: I/O failure on {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return code


def main(argv=None):
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
