"""Numerical Legendre-Fenchel transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ..errors import DomainError
from .core import CumulantFunction, RateFunction

T_MAX = 1e7
SLOPE_TOL = 1e-9


@dataclass(frozen=True)
class LegendreResult:
    """Value of a Legendre transform with the maximising tilt.

    ``flag`` is ``"ok"``, ``"boundary"`` (supremum at the edge of the
    effective domain), ``"asymptotic"`` (finite supremum approached as the
    tilt diverges), ``"unbounded"`` (value is ``+inf``) or ``"outside-domain"``.
    """

    value: float
    argmax: np.ndarray | float
    flag: str = "ok"


def _as_cumulant(f) -> CumulantFunction:
    return f if isinstance(f, CumulantFunction) else CumulantFunction(f, dim=1)


def legendre_1d(f, x: float, *, t0: float = 0.0, step: Optional[float] = None, full_output: bool = False):
    """``sup_t [t x - f(t)]`` for a convex function of one variable.

    The maximiser of the concave objective is bracketed by step doubling from
    ``t0``; if a doubling leaves the effective domain, the domain edge is
    located by bisection and the bracket is closed there.  The bracket is
    then refined with bounded Brent search.  A slope that never turns before
    ``|t| = 1e7`` yields ``+inf`` with flag ``"unbounded"``.
    """
    f = _as_cumulant(f)
    x = float(x)

    def g(t: float) -> float:
        v = f(t)
        return -math.inf if v == math.inf else x * t - v

    g0 = g(t0)
    if not math.isfinite(g0):
        raise DomainError("the cumulant function must be finite at the starting tilt")
    h = step if step is not None else 0.1 * f.scale * max(1.0, abs(t0))
    gp, gm = g(t0 + h), g(t0 - h)
    flag = "ok"
    if gp <= g0 and gm <= g0:
        lo, hi = t0 - h, t0 + h
    else:
        direction = 1.0 if gp > gm else -1.0
        a, b = t0, t0 + direction * h
        ga, gb = g0, (gp if direction > 0 else gm)
        while True:
            c = b + 2.0 * (b - a)
            gc = g(c)
            if gc == -math.inf:
                # walked out of the effective domain: locate its edge
                inside, outside = b, c
                for _ in range(200):
                    mid = 0.5 * (inside + outside)
                    if g(mid) > -math.inf:
                        inside = mid
                    else:
                        outside = mid
                    if abs(outside - inside) <= 1e-14 * max(1.0, abs(inside)):
                        break
                lo, hi = sorted((a, inside))
                edge_val = g(inside)
                res = minimize_scalar(lambda t: -g(t), bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-13 * max(1.0, abs(inside))})
                val, arg = -res.fun, res.x
                for cand in (b, inside):
                    if g(cand) > val:
                        val, arg = g(cand), cand
                if abs(arg - inside) <= 1e-9 * max(1.0, abs(inside)) or edge_val >= val - 1e-12:
                    flag = "boundary"
                return _finish(val, arg, flag, full_output)
            if gc < gb:
                lo, hi = sorted((a, c))
                break
            a, b, ga, gb = b, c, gb, gc
            if abs(c) > T_MAX:
                slope = (gb - ga) / abs(b - a)
                if slope > SLOPE_TOL * (1.0 + abs(x)):
                    return _finish(math.inf, c, "unbounded", full_output)
                return _finish(gb, b, "asymptotic", full_output)
    res = minimize_scalar(lambda t: -g(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13 * max(1.0, abs(lo), abs(hi))})
    val, arg = -res.fun, res.x
    if g0 > val:
        val, arg = g0, t0
    return _finish(val, arg, flag, full_output)


class _Unbounded(Exception):
    pass


def _finish(val, arg, flag, full_output):
    if full_output:
        return val, LegendreResult(val, arg, flag)
    return val


def legendre_nd(
    f: CumulantFunction,
    x,
    *,
    starts: Optional[Iterable] = None,
    n_random: int = 1,
    seed: int = 20240521,
    full_output: bool = False,
):
    """``sup_t [<t, x> - f(t)]`` for a convex function of 2 or 3 variables.

    Nelder-Mead is run from the origin, any user-supplied ``starts`` and
    ``n_random`` seeded random points, each followed by a restart with a
    smaller simplex; the best value wins.  Points outside the effective
    domain evaluate to ``+inf`` in the minimised objective, which keeps the
    search inside the domain.
    """
    x = np.asarray(x, dtype=float).reshape(f.dim)
    rng = np.random.default_rng(seed)

    def obj(t):
        if not np.all(np.isfinite(t)) or np.linalg.norm(t) > T_MAX:
            raise _Unbounded(t)
        v = f(t)
        return math.inf if v == math.inf else v - float(np.dot(t, x))

    cands = [np.zeros(f.dim)]
    if starts is not None:
        cands.extend(np.asarray(s, dtype=float).reshape(f.dim) for s in starts)
    cands.extend(0.5 * f.scale * rng.standard_normal((n_random, f.dim)))
    valid = [c for c in cands if math.isfinite(obj(c))]
    if not valid:
        return _finish(math.inf, cands[0], "outside-domain", full_output)

    best_val, best_t = math.inf, valid[0]
    for c in valid:
        t, val = c, obj(c)
        for size in (0.5 * f.scale, 0.02 * f.scale):
            simplex = t + np.vstack([np.zeros(f.dim), size * np.eye(f.dim)])
            try:
                res = minimize(
                    obj, t, method="Nelder-Mead",
                    options={"initial_simplex": simplex, "xatol": 1e-10, "fatol": 1e-14,
                             "maxiter": 3000 * f.dim, "maxfev": 6000 * f.dim, "adaptive": True},
                )
            except _Unbounded as exc:
                return _finish(math.inf, exc.args[0], "unbounded", full_output)
            if res.fun <= val:
                t, val = res.x, res.fun
            if val < -1e12:
                return _finish(math.inf, t, "unbounded", full_output)
        if val < best_val:
            best_val, best_t = val, t
    return _finish(-best_val, best_t, "ok", full_output)


def conjugate_rate(f: CumulantFunction, domain_hint=(-math.inf, math.inf), speed: str = "n",
                   minimizer: Optional[float] = None, name: str = "legendre") -> RateFunction:
    """Wrap the 1-d Legendre transform of ``f`` as a :class:`RateFunction`."""
    return RateFunction(lambda v: legendre_1d(f, v), domain_hint, speed, minimizer, name)
