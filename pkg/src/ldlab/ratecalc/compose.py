"""Contraction principle and products of independent variables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .core import RateFunction


@dataclass(frozen=True)
class ContractionResult:
    """Infimum over a fiber with its location; ``flag`` is ok, boundary or empty-fiber."""

    value: float
    argmin: object
    flag: str = "ok"


def _scan_minimize(func: Callable[[float], float], lo: float, hi: float, n: int = 161, log: bool = False):
    """Grid scan followed by bounded Brent refinement around the best cell."""
    if log:
        grid = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    else:
        grid = np.linspace(lo, hi, n)
    vals = np.array([func(float(s)) for s in grid])
    if not np.any(np.isfinite(vals)):
        return math.inf, float(grid[0])
    k = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.inf)))
    best_v, best_s = float(vals[k]), float(grid[k])
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, n - 1)]
    if b > a:
        scale = max(abs(a), abs(b), 1e-300)
        res = minimize_scalar(lambda s: func(float(s)), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * scale})
        if res.fun < best_v:
            best_v, best_s = float(res.fun), float(res.x)
    return best_v, best_s


def contract_rate(
    base,
    mapping: Callable,
    y: float,
    search_region: Sequence,
    *,
    fiber: Optional[Callable[[float], object]] = None,
    fiber_log: bool = False,
    penalty: float = 1e8,
    n_grid: int = 401,
    full_output: bool = False,
):
    """``inf {base(x) : mapping(x) = y, x in search_region}``.

    Three strategies are used depending on what is known about the fiber:

    * ``fiber`` given: ``search_region`` is an interval of a parameter ``s``
      and ``fiber(s)`` is a point with ``mapping(fiber(s)) = y``; the
      infimum is a 1-d minimisation over ``s``.
    * ``fiber`` given with a box ``search_region``: Nelder-Mead over the
      box-valued fiber parameter.
    * one-dimensional region ``(a, b)``: the fiber points are the roots of
      ``mapping(x) - y``, bracketed on a grid and refined by Brent's method.
    * a box ``[(a1, b1), (a2, b2), ...]``: penalised minimisation of
      ``base(x) + penalty * (mapping(x) - y)^2`` from several starts.

    The result is ``+inf`` (flag ``"empty-fiber"``) when no fiber point is
    found, and carries flag ``"boundary"`` when the minimiser sits on the
    edge of the region, which suggests the region was too small.
    """
    if fiber is not None and np.ndim(search_region) == 2:
        return _fiber_box(base, fiber, np.asarray(search_region, dtype=float), full_output)
    if fiber is not None:
        lo, hi = map(float, search_region)

        def along(s: float) -> float:
            try:
                return float(base(fiber(s)))
            except (ValueError, ZeroDivisionError, OverflowError):
                return math.inf

        val, s = _scan_minimize(along, lo, hi, n=min(n_grid, 41), log=fiber_log)
        flag = "ok"
        if not math.isfinite(val):
            flag = "empty-fiber"
        elif min(abs(s - lo), abs(hi - s)) <= 1e-9 * max(1.0, abs(s)):
            flag = "boundary"
        return _out(val, fiber(s) if math.isfinite(val) else None, flag, full_output)

    region = np.asarray(search_region, dtype=float)
    if region.ndim == 1:
        a, b = float(region[0]), float(region[1])
        grid = np.linspace(a, b, n_grid)
        resid = np.array([float(mapping(v)) - y for v in grid])
        roots = [float(v) for v, r in zip(grid, resid) if r == 0.0]
        for i in range(n_grid - 1):
            r0, r1 = resid[i], resid[i + 1]
            if np.isfinite(r0) and np.isfinite(r1) and r0 * r1 < 0:
                roots.append(brentq(lambda v: float(mapping(v)) - y, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
        if not roots:
            return _out(math.inf, None, "empty-fiber", full_output)
        vals = [float(base(r)) for r in roots]
        k = int(np.argmin(vals))
        flag = "ok"
        if min(abs(roots[k] - a), abs(b - roots[k])) <= 1e-12 * max(1.0, abs(roots[k])):
            flag = "boundary"
        return _out(vals[k], roots[k], flag, full_output)

    lows, highs = region[:, 0], region[:, 1]

    def penalised(x):
        if np.any(x < lows) or np.any(x > highs):
            return math.inf
        return float(base(x)) + penalty * (float(mapping(x)) - y) ** 2

    rng = np.random.default_rng(7)
    starts = [0.5 * (lows + highs)] + list(lows + (highs - lows) * rng.random((6, len(lows))))
    best = None
    for s in starts:
        res = minimize(penalised, s, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000, "adaptive": True})
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not math.isfinite(best.fun) or abs(float(mapping(best.x)) - y) > 1e-4:
        return _out(math.inf, None, "empty-fiber", full_output)
    flag = "boundary" if np.any(np.isclose(best.x, lows) | np.isclose(best.x, highs)) else "ok"
    return _out(float(base(best.x)), best.x, flag, full_output)


def _fiber_box(base, fiber, box, full_output):
    lows, highs = box[:, 0], box[:, 1]

    def along(s):
        if np.any(s < lows) or np.any(s > highs):
            return math.inf
        return float(base(fiber(s)))

    start = 0.5 * (lows + highs)
    res = minimize(along, start, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 4000, "adaptive": True,
                            "initial_simplex": start + np.vstack([np.zeros(len(start)),
                                                                 0.1 * np.diag(highs - lows)])})
    res = minimize(along, res.x, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000, "adaptive": True})
    if not math.isfinite(res.fun):
        return _out(math.inf, None, "empty-fiber", full_output)
    edge = np.isclose(res.x, lows, atol=1e-8) | np.isclose(res.x, highs, atol=1e-8)
    return _out(float(res.fun), fiber(res.x), "boundary" if np.any(edge) else "ok", full_output)


def _out(val, arg, flag, full_output):
    if full_output:
        return val, ContractionResult(val, arg, flag)
    return val


def combine_independent_product(
    r1: RateFunction, r2: RateFunction, z: float, *, n_scan: int = 61, full_output: bool = False
):
    """Rate of a product ``Z1 Z2`` of independent non-negative variables.

    ``inf {r1(z1) + r2(z2) : z1 z2 = z, z1, z2 >= 0}``, found by a scan in
    ``log z1`` over the range allowed by both domain hints followed by Brent
    refinement.  At ``z = 0`` one factor must vanish, giving
    ``min(r1(0) + inf r2, inf r1 + r2(0))``.
    """
    z = float(z)
    if z < 0:
        return _out(math.inf, None, "outside-domain", full_output)
    lo1, hi1 = max(r1.domain_hint[0], 0.0), r1.domain_hint[1]
    lo2, hi2 = max(r2.domain_hint[0], 0.0), r2.domain_hint[1]
    if z == 0.0:
        inf1 = 0.0 if r1.minimizer is not None else _grid_inf(r1)
        inf2 = 0.0 if r2.minimizer is not None else _grid_inf(r2)
        val = min(r1(0.0) + inf2, inf1 + r2(0.0))
        return _out(val, (0.0, None), "ok", full_output)
    a = max(lo1, z / hi2 if hi2 > 0 else math.inf, 1e-300)
    b = min(hi1, z / lo2 if lo2 > 0 else math.inf)
    if not math.isfinite(b):
        b = max(a, 1.0) * 1e6
    if not b > a:
        if b == a:
            val = r1(a) + r2(z / a)
            return _out(val, (a, z / a), "ok", full_output)
        return _out(math.inf, None, "empty-fiber", full_output)
    if a <= 1e-300:
        a = b * 1e-12

    def total(z1: float) -> float:
        return r1(z1) + r2(z / z1)

    val, z1 = _scan_minimize(total, a, b, n=n_scan, log=True)
    for edge in (a, b):
        v = total(edge)
        if v < val:
            val, z1 = v, edge
    return _out(val, (z1, z / z1), "ok", full_output)


def _grid_inf(r: RateFunction) -> float:
    lo, hi = r.domain_hint
    lo = max(lo, -1e6)
    hi = min(hi, 1e6)
    return float(np.min(r(np.linspace(lo, hi, 2001))))
