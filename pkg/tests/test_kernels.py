import math

import numpy as np
import pytest

from ldlab._accel import ENV_FLAG, NUMBA_AVAILABLE, backend_name, use_numba
from ldlab.kernels import gas_sweep, orlicz_coordinate_steps, pair_log_sum
from ldlab.orlicz import OrliczFunction

BACKENDS = ["numba", "numpy"] if NUMBA_AVAILABLE else ["numpy"]


def set_backend(monkeypatch, backend):
    monkeypatch.setenv(ENV_FLAG, "0" if backend == "numba" else "1")
    assert backend_name() == backend


@pytest.mark.parametrize("value,expected", [("", True), ("0", True), ("false", True), ("1", False), ("yes", False)])
def test_env_flag_parsing(monkeypatch, value, expected):
    monkeypatch.setenv(ENV_FLAG, value)
    assert use_numba() is (expected and NUMBA_AVAILABLE)


@pytest.mark.parametrize("backend", BACKENDS)
def test_pair_log_sum_direct(monkeypatch, backend):
    set_backend(monkeypatch, backend)
    rng = np.random.default_rng(0)
    x, w = rng.standard_normal(30), rng.random(30)
    i, j = np.triu_indices(30, 1)
    ref = 2 * np.sum(w[i] * w[j] * np.log(np.abs(x[i] - x[j])))
    assert pair_log_sum(x, w) == pytest.approx(ref, rel=1e-12)
    x[3] = x[7]
    assert pair_log_sum(x, w) == -math.inf


def _gas_run(monkeypatch, backend, mode):
    set_backend(monkeypatch, backend)
    rng = np.random.default_rng(1)
    chains, n = 3, 12
    x = np.sort(rng.standard_normal((chains, n)), axis=1)
    if mode == 1:
        x = np.abs(x) + 0.1
    total = np.zeros(chains, dtype=np.int64)
    for _ in range(10):
        normals, uniforms = rng.standard_normal((chains, n)), rng.random((chains, n))
        total += gas_sweep(x, np.full(chains, 0.2), 2.0, 1.5, float(n), mode, normals, uniforms)
    return x, total


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")
@pytest.mark.parametrize("mode", [0, 1])
def test_gas_sweep_backends_agree(monkeypatch, mode):
    xa, acc_a = _gas_run(monkeypatch, "numba", mode)
    xb, acc_b = _gas_run(monkeypatch, "numpy", mode)
    assert np.array_equal(acc_a, acc_b)
    assert np.allclose(xa, xb, rtol=0, atol=1e-12)
    if mode == 1:
        assert np.all(xa > 0)


@pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")
@pytest.mark.parametrize("M", [
    OrliczFunction.power(1.5),
    OrliczFunction.exp_minus_one(),
    OrliczFunction.piecewise_polynomial([0.0, 1.0], [[0.0, 0.0, 1.0], [-1.0, 2.0]]),
], ids=lambda m: m.name)
def test_orlicz_steps_backends_agree(monkeypatch, M):
    rng = np.random.default_rng(2)
    chains, d, steps = 3, 8, 500
    coords, u = rng.integers(0, d, (chains, steps)), rng.random((chains, steps))
    out = {}
    for backend in BACKENDS:
        set_backend(monkeypatch, backend)
        x = np.zeros((chains, d))
        orlicz_coordinate_steps(x, float(d) * 0.7, M, coords, u)
        assert np.all(np.sum(M(x), axis=1) <= d * 0.7 * (1 + 1e-10))
        out[backend] = x
    assert np.allclose(out["numba"], out["numpy"], rtol=1e-9, atol=1e-9)
