"""The compiled kernels and their pure-Python twins must agree bit for bit."""
import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from ecdlab import _pykernels
from ecdlab._backend import BACKEND, compiled_kernels
from ecdlab.secd_sim import SimConfig, prepare

ck = compiled_kernels()
needs_c = pytest.mark.skipif(ck is None, reason="compiled extension not built")


def test_backend_flag():
    assert BACKEND in ("compiled", "python")


def test_pure_python_switch():
    env = dict(os.environ, ECDLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ecdlab; print(ecdlab.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_c
def test_uniform_streams_identical():
    for seed, idx in ((0, 0), (123, 7), (2**63 + 5, 2**40)):
        np.testing.assert_array_equal(np.asarray(ck.uniform_stream(seed, idx, 500)),
                                      np.asarray(_pykernels.uniform_stream(seed, idx, 500)))


@needs_c
def test_uniforms_in_unit_interval():
    u = np.asarray(ck.uniform_stream(1, 1, 100000))
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.005


@needs_c
def test_time_table_identical(quartic121, maps121):
    st = prepare(quartic121, maps121, SimConfig(1.0))
    x = np.linspace(st.x_d, maps121.L_classical, 1001)
    np.testing.assert_array_equal(np.asarray(ck.w_eval(*st.table.args(), x)),
                                  np.asarray(_pykernels.w_eval(*st.table.args(), x)))


@needs_c
@pytest.mark.parametrize("u0", [1, -1])
def test_trajectories_identical(quartic121, maps121, u0):
    st = prepare(quartic121, maps121, SimConfig(1.0))
    args = (*st.table.args(), st.x_hit, st.x_d, st.tail_cost, 1.0, u0, 1e7, 17, 0, 300)
    a = ck.simulate_batch(*args, 1)
    b = _pykernels.simulate_batch(*args, 1)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(np.asarray(x), np.asarray(y))


@needs_c
def test_flip_counts_identical():
    np.testing.assert_array_equal(np.asarray(ck.count_flips(2.0, 5.0, 3, 1000)),
                                  np.asarray(_pykernels.count_flips(2.0, 5.0, 3, 1000)))


@needs_c
def test_eigensolvers_agree():
    rng = np.random.default_rng(5)
    d, e = rng.normal(size=300), rng.normal(size=299)
    wc = np.asarray(ck.tridiag_eigvals(d, e))
    wp = np.asarray(_pykernels.tridiag_eigvals(d, e))
    np.testing.assert_allclose(wc, wp, atol=1e-12)
    zc = np.asarray(ck.tridiag_eigvecs(d, e, wc, 1e-5))
    zp = np.asarray(_pykernels.tridiag_eigvecs(d, e, wc, 1e-5))
    np.testing.assert_allclose(zc, zp, atol=1e-9)
