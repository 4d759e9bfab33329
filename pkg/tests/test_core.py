import os
import subprocess
import sys

import numpy as np
import pytest

from noncutoff import _core_py, core
from noncutoff.norms import VelocityGrid

compiled = pytest.importorskip("noncutoff._core")


def _inputs(n, N, seed):
    g = VelocityGrid(n, N, 6.0)
    rng = np.random.default_rng(seed)
    F = rng.normal(size=g.points.shape[:-1])
    P = rng.uniform(0.5, 2.0, size=F.shape)
    return F, P, g.points, g.h


@pytest.mark.parametrize("n,N", [(2, 24), (3, 10)])
@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_backends_agree(n, N, s):
    F, P, V, h = _inputs(n, N, seed=n + 10 * N)
    a = _core_py.nsg_pair_sum(F, P, V, h, s, d_min=h)
    b = compiled.nsg_pair_sum(F, P, V, h, s, d_min=h)
    assert b == pytest.approx(a, rel=1e-12)


def test_pair_sum_zero_on_constants():
    F, P, V, h = _inputs(2, 16, seed=1)
    F[:] = 2.5
    assert compiled.nsg_pair_sum(F, P, V, h, 0.3, d_min=h) == 0.0
    assert _core_py.nsg_pair_sum(F, P, V, h, 0.3, d_min=h) == 0.0


def test_empty_distance_window():
    F, P, V, h = _inputs(2, 16, seed=2)
    assert compiled.nsg_pair_sum(F, P, V, h, 0.3, d_min=2.0, d_max=1.0) == 0.0


def test_lattice_offsets_half_space():
    off = core.lattice_offsets(2, 2.0)
    # one of each +-d pair, no zero offset
    keys = {tuple(o) for o in off}
    assert (0, 0) not in keys
    assert all(tuple(-o) not in keys for o in off)
    assert len(keys) == len(off) == 6


def test_backend_selection():
    assert core.BACKEND == "cython"
    env = dict(os.environ, NONCUTOFF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from noncutoff import core; print(core.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
