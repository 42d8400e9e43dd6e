"""Relative entropy and logarithmic energy of measures on the line."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .._quad import graded_rule, integrate
from ..kernels import pair_log_sum
from ..measures import Density1D, EmpiricalMeasure


def relative_entropy(nu: Density1D | EmpiricalMeasure, lam: Density1D | EmpiricalMeasure) -> float:
    """Relative entropy ``H(nu | lam) = int log(dnu/dlam) dnu`` in ``[0, inf]``.

    Densities are handled by quadrature.  An empirical measure is singular
    with respect to any density, so ``H(empirical | density) = inf``; see
    :func:`relative_entropy_smoothed` for a kernel-smoothed estimate.
    """
    if isinstance(nu, EmpiricalMeasure):
        if isinstance(lam, EmpiricalMeasure):
            return _discrete_kl(nu, lam)
        return math.inf
    if isinstance(lam, EmpiricalMeasure):
        return math.inf
    lo, hi = nu.support
    llo, lhi = lam.support
    if lo < llo or hi > lhi:
        # nu may still vanish outside lam's support; check the leaked mass
        leak = 0.0
        if lo < llo:
            leak += integrate(nu._scalar_pdf, lo, llo)
        if hi > lhi:
            leak += integrate(nu._scalar_pdf, lhi, hi)
        if leak > 0:
            return math.inf
        lo, hi = max(lo, llo), min(hi, lhi)

    def integrand(x: float) -> float:
        a = np.array([x])
        lf = float(nu.logpdf(a)[0])
        if lf == -math.inf:
            return 0.0
        lg = float(lam.logpdf(a)[0])
        if lg == -math.inf:
            raise _Singular
        return math.exp(lf) * (lf - lg)

    points = sorted(set(nu._points()) | set(lam.breakpoints))
    try:
        val = integrate(integrand, lo, hi, points)
    except _Singular:
        return math.inf
    return max(val, 0.0) if val > -1e-12 else val


class _Singular(Exception):
    pass


def _discrete_kl(nu: EmpiricalMeasure, lam: EmpiricalMeasure) -> float:
    lam_map: dict[float, float] = {}
    for a, w in zip(lam.atoms, lam.weights):
        lam_map[a] = lam_map.get(a, 0.0) + w
    nu_map: dict[float, float] = {}
    for a, w in zip(nu.atoms, nu.weights):
        nu_map[a] = nu_map.get(a, 0.0) + w
    total = 0.0
    for a, w in nu_map.items():
        if w == 0:
            continue
        ref = lam_map.get(a, 0.0)
        if ref == 0:
            return math.inf
        total += w * math.log(w / ref)
    return max(total, 0.0)


def relative_entropy_smoothed(
    sample: EmpiricalMeasure | np.ndarray, lam: Density1D, bandwidth: Optional[float | str] = None
) -> float:
    """Approximate ``H(nu | lam)`` from samples of ``nu`` by Gaussian-kernel smoothing.

    This is an estimator, not the relative entropy of the empirical measure
    (which is infinite).  ``bandwidth`` is passed to
    :class:`scipy.stats.gaussian_kde`.
    """
    from scipy.stats import gaussian_kde

    if isinstance(sample, EmpiricalMeasure):
        kde = gaussian_kde(sample.atoms, bw_method=bandwidth, weights=sample.weights)
        atoms = sample.atoms
    else:
        atoms = np.asarray(sample, dtype=float).ravel()
        kde = gaussian_kde(atoms, bw_method=bandwidth)
    spread = 8.0 * math.sqrt(float(kde.covariance[0, 0]))
    lo, hi = float(atoms.min()) - spread, float(atoms.max()) + spread
    lo, hi = max(lo, lam.support[0]), min(hi, lam.support[1])
    grid = np.linspace(lo, hi, 4001)
    dens = kde(grid)
    dens /= np.trapezoid(dens, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(dens > 0, dens * (np.log(dens) - lam.logpdf(grid)), 0.0)
    return float(np.trapezoid(integrand, grid))


def log_energy(mu: Density1D | EmpiricalMeasure) -> float:
    """Logarithmic energy ``iint log|x - y| dmu(x) dmu(y)``.

    For an empirical measure the diagonal ``i = j`` is excluded and the sum
    is normalised by the off-diagonal weight ``1 - sum w_i^2``; coincident
    atoms and point masses give ``-inf``.  For a density, the logarithmic
    potential ``U(x) = int log|x - y| f(y) dy`` is integrated against ``f``
    with Gauss-Legendre panels graded towards ``x``, the endpoints and the
    density's break points (where log and inverse-root singularities live).
    """
    if isinstance(mu, EmpiricalMeasure):
        off = 1.0 - float(np.sum(mu.weights**2))
        if mu.size < 2 or off <= 0:
            return -math.inf
        return pair_log_sum(mu.atoms, mu.weights) / off
    lo, hi = mu._effective_range()
    brk = [b for b in mu.breakpoints if lo < b < hi]
    xs, wx = graded_rule(lo, hi, brk)
    fx = mu.pdf(xs)
    keep = fx > 0
    xs, wx, fx = xs[keep], wx[keep] * fx[keep], fx[keep]
    total = 0.0
    for x, w in zip(xs, wx):
        ys, wy = graded_rule(lo, hi, [*brk, x])
        d = np.abs(ys - x)
        with np.errstate(divide="ignore"):
            vals = np.where(d > 0, np.log(d), 0.0) * mu.pdf(ys)
        total += w * float(np.dot(wy, vals))
    return total
