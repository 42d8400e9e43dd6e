"""Hot loops with a numba implementation and a numpy fallback.

Every public function here dispatches on :func:`ldlab._accel.use_numba`.
Random numbers are drawn by the caller and passed in, so both backends walk
the same trajectory.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import njit, use_numba

KIND_POWER = 0
KIND_EXPM1 = 1
KIND_PIECEWISE = 2


# ----------------------------------------------------------- pair log energy
@njit(cache=True)
def _pair_log_sum_nb(x, w):
    n = x.shape[0]
    total = 0.0
    for i in range(n):
        xi = x[i]
        acc = 0.0
        for j in range(i + 1, n):
            d = abs(xi - x[j])
            if d == 0.0:
                return -np.inf
            acc += w[j] * math.log(d)
        total += 2.0 * w[i] * acc
    return total


def _pair_log_sum_np(x, w, block=1024):
    n = x.shape[0]
    total = 0.0
    for start in range(0, n, block):
        stop = min(start + block, n)
        d = np.abs(x[start:stop, None] - x[None, :])
        rows = np.arange(start, stop)
        d[rows - start, rows] = 1.0
        if np.any(d == 0.0):
            return -np.inf
        total += float(w[start:stop] @ np.log(d) @ w)
    return total


def pair_log_sum(x: np.ndarray, w: np.ndarray) -> float:
    """``sum_{i != j} w_i w_j log|x_i - x_j|``; ``-inf`` if two atoms coincide."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if use_numba():
        return float(_pair_log_sum_nb(x, w))
    return _pair_log_sum_np(x, w)


# ------------------------------------------------------ eigenvalue-gas sweep
@njit(cache=True)
def _gas_sweep_nb(x, step, beta, p, coef, mode, normals, uniforms):
    chains, n = x.shape
    accepted = np.zeros(chains, dtype=np.int64)
    half_p = 0.5 * p
    for c in range(chains):
        for i in range(n):
            xi = x[c, i]
            yi = xi + step[c] * normals[c, i]
            if mode == 1:
                if yi <= 0.0:
                    continue
                delta = -coef * (yi**half_p - xi**half_p) + (0.5 * beta - 1.0) * (math.log(yi) - math.log(xi))
            else:
                delta = -coef * (abs(yi) ** p - abs(xi) ** p)
            inter = 0.0
            bad = False
            for j in range(n):
                if j == i:
                    continue
                dy = abs(yi - x[c, j])
                if dy == 0.0:
                    bad = True
                    break
                inter += math.log(dy) - math.log(abs(xi - x[c, j]))
            if bad:
                continue
            delta += beta * inter
            if math.log(uniforms[c, i]) < delta:
                x[c, i] = yi
                accepted[c] += 1
    return accepted


def _gas_sweep_np(x, step, beta, p, coef, mode, normals, uniforms):
    chains, n = x.shape
    accepted = np.zeros(chains, dtype=np.int64)
    idx = np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n):
            xi = x[:, i].copy()
            yi = xi + step * normals[:, i]
            if mode == 1:
                ok = yi > 0.0
                ys = np.where(ok, yi, 1.0)
                delta = -coef * (ys ** (0.5 * p) - xi ** (0.5 * p)) + (0.5 * beta - 1.0) * (np.log(ys) - np.log(xi))
            else:
                ok = np.ones(chains, dtype=bool)
                delta = -coef * (np.abs(yi) ** p - np.abs(xi) ** p)
            others = x[:, idx != i]
            dy = np.abs(yi[:, None] - others)
            ok &= np.all(dy > 0.0, axis=1)
            inter = np.sum(np.log(dy) - np.log(np.abs(xi[:, None] - others)), axis=1)
            delta = delta + beta * inter
            acc = ok & (np.log(uniforms[:, i]) < delta)
            x[acc, i] = yi[acc]
            accepted += acc
    return accepted


def gas_sweep(x, step, beta, p, coef, mode, normals, uniforms) -> np.ndarray:
    """One systematic-scan Metropolis sweep over all coordinates of every chain.

    ``x`` (chains, n) is updated in place; returns accepted moves per chain.
    ``mode`` 0 is the symmetric gas on the line, 1 the gas on ``(0, inf)``.
    """
    args = (
        x,
        np.ascontiguousarray(step, dtype=np.float64),
        float(beta),
        float(p),
        float(coef),
        int(mode),
        np.ascontiguousarray(normals, dtype=np.float64),
        np.ascontiguousarray(uniforms, dtype=np.float64),
    )
    if use_numba():
        return _gas_sweep_nb(*args)
    return _gas_sweep_np(*args)


# ------------------------------------------- Orlicz-ball coordinate sampler
@njit(cache=True)
def _m_eval(kind, p, knots, table, t):
    if kind == KIND_POWER:
        return t**p
    if kind == KIND_EXPM1:
        return math.expm1(t) - t
    k = 0
    for r in range(knots.shape[0]):
        if t >= knots[r]:
            k = r
    out = 0.0
    for j in range(table.shape[1] - 1, -1, -1):
        out = out * t + table[k, j]
    return out


@njit(cache=True)
def _m_inv(kind, p, knots, table, y):
    if y <= 0.0:
        return 0.0
    if kind == KIND_POWER:
        return y ** (1.0 / p)
    hi = 1.0
    while _m_eval(kind, p, knots, table, hi) < y:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _m_eval(kind, p, knots, table, mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


@njit(cache=True)
def _orlicz_coord_nb(x, budget, kind, p, knots, table, coords, uniforms):
    chains, d = x.shape
    steps = coords.shape[1]
    for c in range(chains):
        s = 0.0
        for i in range(d):
            s += _m_eval(kind, p, knots, table, abs(x[c, i]))
        for k in range(steps):
            i = coords[c, k]
            rest = s - _m_eval(kind, p, knots, table, abs(x[c, i]))
            if rest < 0.0:
                rest = 0.0
            r = _m_inv(kind, p, knots, table, budget - rest)
            y = (2.0 * uniforms[c, k] - 1.0) * r
            x[c, i] = y
            s = rest + _m_eval(kind, p, knots, table, abs(y))


def _orlicz_coord_np(x, budget, M, coords, uniforms):
    chains, _ = x.shape
    rows = np.arange(chains)
    s = np.sum(M(x), axis=1)
    for k in range(coords.shape[1]):
        i = coords[:, k]
        rest = np.maximum(s - M(x[rows, i]), 0.0)
        r = M.inv(budget - rest)
        y = (2.0 * uniforms[:, k] - 1.0) * r
        x[rows, i] = y
        s = rest + M(y)


def orlicz_coordinate_steps(x, budget, M, coords, uniforms) -> None:
    """Coordinate-direction hit-and-run inside ``{sum M(x_i) <= budget}``.

    Each step picks coordinate ``coords[c, k]`` and redraws it uniformly on
    the exact chord ``[-M^{-1}(b), M^{-1}(b)]`` where ``b`` is the budget
    left by the other coordinates.  ``x`` is updated in place.
    """
    coords = np.ascontiguousarray(coords, dtype=np.int64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if use_numba() and M.kind in (KIND_POWER, KIND_EXPM1, KIND_PIECEWISE) and math.isinf(M.domain_bound):
        if M.kind == KIND_PIECEWISE:
            knots, table = M.params
        else:
            knots, table = np.zeros(1), np.zeros((1, 1))
        p = M.params[0] if M.kind == KIND_POWER else 1.0
        _orlicz_coord_nb(
            x, float(budget), M.kind, float(p),
            np.ascontiguousarray(knots, dtype=np.float64),
            np.ascontiguousarray(table, dtype=np.float64),
            coords, uniforms,
        )
    else:
        _orlicz_coord_np(x, float(budget), M, coords, uniforms)
