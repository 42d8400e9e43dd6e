"""Quadrature helpers shared by the numerical modules."""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy import integrate as _si
from scipy.special import logsumexp

EPSABS = 1e-14
EPSREL = 1e-12


def integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Iterable[float] = (),
    epsabs: float = EPSABS,
    epsrel: float = EPSREL,
    limit: int = 400,
) -> float:
    """Adaptive quadrature of ``func`` over ``[a, b]``, split at ``points``.

    Infinite endpoints are passed to QUADPACK's transformed rules; interior
    break points are used to cut the interval so that kinks and integrable
    singularities sit on panel boundaries.
    """
    if a == b:
        return 0.0
    if a > b:
        return -integrate(func, b, a, points, epsabs, epsrel, limit)
    cuts = sorted({float(p) for p in points if a < p < b})
    edges = [a, *cuts, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = _si.quad(func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit)
        total += val
    return total


@lru_cache(maxsize=16)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    lo = edges[:-1, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    nodes = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


_SCAN_INF = np.concatenate([[0.0], np.geomspace(1e-7, 1e7, 700)])
_SCAN_UNIT = np.unique(
    np.concatenate(
        [
            np.linspace(0.0, 1.0, 257),
            np.geomspace(1e-9, 0.5, 60),
            1.0 - np.geomspace(1e-9, 0.5, 60),
        ]
    )
)


def log_int_exp(
    log_f: Callable[[np.ndarray], np.ndarray],
    a: float = 0.0,
    b: float = np.inf,
    *,
    scale: float = 1.0,
    drop: float = 60.0,
    order: int = 24,
    max_panels: int = 48,
) -> float:
    """Return ``log \\int_a^b exp(log_f(x)) dx`` for a vectorised ``log_f``.

    The integrand is scanned on a graded grid to locate the region where it
    is within ``exp(-drop)`` of its maximum; that region is then integrated
    with composite Gauss-Legendre panels, refined geometrically towards the
    endpoints so that bounded integrands with singular derivatives at the
    ends (``x**q`` with ``q < 1``) are handled.  Works entirely in log space.
    """
    if np.isfinite(b):
        grid = a + (b - a) * _SCAN_UNIT
    else:
        grid = a + scale * _SCAN_INF
    with np.errstate(all="ignore"):
        vals = np.asarray(log_f(grid), dtype=float)
    # +inf marks an integrable singularity (typically at an endpoint); it is
    # resolved by the graded panels rather than by the scan
    vals = np.where(np.isnan(vals) | (vals == np.inf), -np.inf, vals)
    peak = np.max(vals)
    if not np.isfinite(peak):
        return -np.inf
    above = np.nonzero(vals >= peak - drop)[0]
    i0, i1 = above[0], above[-1]
    if not np.isfinite(b) and i1 == len(grid) - 1:
        return np.inf
    lo = grid[max(i0 - 1, 0)]
    hi = grid[min(i1 + 1, len(grid) - 1)]
    inner = grid[(grid > lo) & (grid < hi)]
    if inner.size > max_panels:
        pick = np.linspace(0, inner.size - 1, max_panels).round().astype(int)
        inner = inner[pick]
    width = hi - lo
    grading = np.geomspace(1e-16, 0.02, 18) * width
    edges = np.unique(np.concatenate([[lo, hi], inner, lo + grading, hi - grading]))
    nodes, weights = _panel_nodes(edges, order)
    with np.errstate(all="ignore"):
        lv = np.asarray(log_f(nodes), dtype=float)
    lv = np.where(np.isnan(lv), -np.inf, lv)
    if np.any(lv == np.inf):
        return np.inf
    return float(logsumexp(lv, b=weights))


def graded_rule(
    a: float,
    b: float,
    singular: Iterable[float] = (),
    order: int = 16,
    levels: int = 24,
    ratio: float = 0.15,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``[a, b]`` graded towards ``singular`` points.

    Panels shrink geometrically (by ``ratio``) towards every listed point and
    towards both endpoints, which resolves integrable algebraic and
    logarithmic singularities located there.
    """
    cuts = sorted({float(s) for s in singular if a < s < b})
    edges = [a, *cuts, b]
    pieces = []
    for u, v in zip(edges[:-1], edges[1:]):
        w = v - u
        grade = w * 0.5 * ratio ** np.arange(1, levels + 1)
        pieces.append(np.concatenate([[u, 0.5 * (u + v), v], u + grade, v - grade]))
    panel_edges = np.unique(np.concatenate(pieces))
    return _panel_nodes(panel_edges, order)
