import os
import subprocess
import sys

import numpy as np
import pytest

from dispflow import kernels

PAIRS = [
    ("node_dot", 2, 3),
    ("sphere_project", 2, 7),
    ("cross3", 2, 3),
    ("cross7", 2, 7),
    ("sphere_curvature", 3, 7),
]


@pytest.mark.parametrize("name,nargs,d", PAIRS)
def test_loop_matches_numpy(name, nargs, d):
    rng = np.random.default_rng(0)
    args = [rng.standard_normal((d, 50)) for _ in range(nargs)]
    a = getattr(kernels, name + "_np")(*args)
    b = getattr(kernels, name + "_loop")(*args)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


def test_normalize_variants():
    y = np.random.default_rng(1).standard_normal((7, 40))
    assert np.allclose(kernels.normalize_np(y), kernels.normalize_loop(y))


def test_complex_inputs_promoted():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
    y = rng.standard_normal((3, 8))
    assert np.allclose(kernels.cross3(x, y), kernels.cross3_np(x, y))


def test_backend_flag():
    assert kernels.BACKEND in ("numba", "numpy")


def test_disable_flag_forces_numpy():
    env = dict(os.environ, DISPFLOW_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from dispflow import kernels; print(kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"
