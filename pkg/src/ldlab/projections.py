"""Large deviations of random projections of high-dimensional random vectors.

A random vector ``X^{(n)}`` in ``R^n`` is projected onto a Haar-random
``k``-frame.  Its behaviour is governed by the thin-shell statistic
``||X||_2 / sqrt(n)`` through a rate function ``J_X`` (speed ``n`` under
assumption ``Astar``, a slower speed under assumption ``B``) and by the Haar
frame itself.  This module evaluates the resulting projection rates in the
constant, sublinear and linear regimes of ``k`` and provides the catalogue of
``J_X`` functions used as examples.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import kstest, norm

from ._quad import log_int_exp
from .distributions import log_moment_Mpq
from .errors import DomainError, NumericalFlagError
from .measures import Density1D, EmpiricalMeasure
from .orlicz import OrliczFunction, gibbs_measure, solve_alpha_star
from .ratecalc import (
    CumulantFunction,
    RateFunction,
    legendre_1d,
    legendre_nd,
    rate_lqnorm_high,
    relative_entropy,
)

ZERO_TOL = 1e-9
FINGERPRINT_TOL = 1e-3


@dataclass(frozen=True)
class ThinShellAssumption:
    """A large deviation assumption on ``||X^{(n)}||_2 / sqrt(n)``.

    ``label`` is ``"Astar"`` (speed ``n``), ``"B"`` (speed slower than
    ``n``) or ``"A"`` (generic speed).  ``jx`` is the rate function and
    ``minimizer_m`` its zero, the thin-shell constant.
    """

    label: str
    speed: str
    jx: RateFunction
    minimizer_m: Optional[float] = None

    def __post_init__(self):
        if self.label not in ("Astar", "B", "A"):
            raise DomainError("label must be 'Astar', 'B' or 'A'")
        if self.minimizer_m is not None:
            v = self.jx(self.minimizer_m)
            if not v <= ZERO_TOL:
                raise DomainError(f"J_X does not vanish at the declared minimizer (value {v:.3g})")


# ---------------------------------------------------------- 1-d minimisation
def _minimize_on(func: Callable[[float], float], lo: float, hi: float, n: int = 81,
                 log: bool = True) -> tuple[float, float]:
    """Scan plus bounded refinement on ``[lo, hi]``, endpoints included."""
    if log and lo > 0:
        grid = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    else:
        grid = np.linspace(lo, hi, n)
    vals = np.array([func(float(c)) for c in grid])
    finite = np.isfinite(vals)
    if not finite.any():
        return math.inf, float(grid[0])
    k = int(np.argmin(np.where(finite, vals, np.inf)))
    best_v, best_c = float(vals[k]), float(grid[k])
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n - 1)]
    if b > a:
        res = minimize_scalar(func, bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * max(abs(a), abs(b))})
        if res.fun < best_v:
            best_v, best_c = float(res.fun), float(res.x)
    return best_v, best_c


def _jx_window(jx: RateFunction, lo: float, hi: float) -> tuple[float, float]:
    """Intersect ``[lo, hi]`` with the positive part of ``jx``'s domain hint."""
    a, b = jx.domain_hint
    return max(lo, a, 0.0), min(hi, b)


# ------------------------------------------------------------ constant regime
def rate_projection_constant(x, assumption: ThinShellAssumption, full_output: bool = False):
    """Rate of a ``k``-dimensional projection (``k`` fixed) of ``X^{(n)}`` onto a Haar frame.

    ``Astar``: ``inf_{c in (0,1)} [J_X(r / c) - log(1 - c^2) / 2]``;
    ``B``: ``inf_{c > 0} [J_X(r / c) + c^2 / 2]``, with ``r = ||x||_2``.
    At ``r = 0`` the lower semicontinuous envelope, ``0``, is returned (the
    literal formula may give ``J_X(0) = inf``).  With ``full_output`` a
    ``(value, c, flag)`` triple is returned; ``flag`` is ``"boundary"`` when
    the optimal ``c`` sits at the edge of the feasible interval.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = float(np.linalg.norm(x))
    jx = assumption.jx
    if r == 0.0:
        out = (0.0, 0.0, "envelope")
        return out if full_output else 0.0
    if assumption.label == "Astar":
        c_lo, c_hi = 0.0, 1.0

        def obj(c: float) -> float:
            if not 0.0 < c < 1.0:
                return math.inf
            return jx(r / c) - 0.5 * math.log1p(-c * c)
    elif assumption.label == "B":
        c_lo, c_hi = 0.0, math.inf

        def obj(c: float) -> float:
            if not c > 0.0:
                return math.inf
            return jx(r / c) + 0.5 * c * c
    else:
        raise DomainError("the constant-regime rate is available under assumptions Astar and B")

    # c-range on which J_X(r / c) can be finite
    z_lo, z_hi = _jx_window(jx, 0.0, math.inf)
    lo = max(c_lo, r / z_hi if z_hi < math.inf else 0.0)
    hi = min(c_hi, r / z_lo if z_lo > 0 else math.inf)
    if lo >= hi:
        out = (math.inf, math.nan, "infeasible")
        return out if full_output else math.inf
    lo_eval = lo if lo > 0 else 1e-8 * r
    hi_eval = hi if hi < math.inf else max(10.0, 10.0 * r)
    if c_hi == 1.0 and hi_eval >= 1.0:
        hi_eval = 1.0 - 1e-12
    val, c = _minimize_on(obj, lo_eval, hi_eval)
    for cand in (lo_eval, hi_eval):
        v = obj(cand)
        if v < val:
            val, c = v, cand
    flag = "ok"
    if math.isfinite(val) and min(abs(c - lo_eval), abs(c - hi_eval)) <= 1e-9 * max(1.0, c):
        flag = "boundary"
    out = (val, c, flag)
    return out if full_output else val


def rate_row_haar(y) -> float:
    """Speed-``n`` rate of ``sqrt(n)`` times ``k`` coordinates of a Haar row: ``-log(1 - ||y||^2) / 2``."""
    s = float(np.sum(np.square(np.atleast_1d(np.asarray(y, dtype=float)))))
    if s >= 1.0:
        return math.inf
    return -0.5 * math.log1p(-s)


# -------------------------------------------------- sublinear / linear regime
def _gaussian_re(h: float, m2: float, c: float) -> float:
    """``H(mu | N(0, c^2))`` from the entropy ``h`` and second moment ``m2`` of ``mu``."""
    return -h + 0.5 * math.log(2.0 * math.pi * c * c) + 0.5 * m2 / (c * c)


def gaussian_fingerprint(mu: Density1D | EmpiricalMeasure, tol: float = FINGERPRINT_TOL) -> Optional[float]:
    """Return ``c`` if ``mu`` is recognised as ``N(0, c^2)``, else ``None``.

    The test compares the first four moments with those of ``N(0, c^2)``,
    ``c^2`` being the second moment, and the Kolmogorov distance with
    ``tol``.  Exact Gaussianity is not decidable numerically; this is a
    tolerance-based fingerprint.
    """
    if isinstance(mu, EmpiricalMeasure):
        a = mu.atoms
        w = mu.weights
        m1 = float(np.dot(w, a))
        m2 = float(np.dot(w, a * a))
        m3 = float(np.dot(w, a**3))
        m4 = float(np.dot(w, a**4))
    else:
        m1 = mu.mean()
        m2 = mu.moment(2)
        m3 = mu.moment(3, absolute=False)
        m4 = mu.moment(4)
    if not m2 > 0:
        return None
    c = math.sqrt(m2)
    if abs(m1) > tol * c or abs(m3) > tol * c**3 or abs(m4 - 3.0 * m2 * m2) > tol * m2 * m2:
        return None
    if isinstance(mu, EmpiricalMeasure):
        if not np.allclose(mu.weights, mu.weights[0]):
            return None
        ks = kstest(mu.atoms, norm(scale=c).cdf).statistic
    else:
        grid = np.linspace(-8.0 * c, 8.0 * c, 4001)
        ks = float(np.max(np.abs(mu.cdf(grid) - norm.cdf(grid, scale=c))))
    return c if ks <= tol else None


def rate_sublinear(mu: Density1D | EmpiricalMeasure, assumption: ThinShellAssumption, regime: str) -> float:
    """Speed-``k`` rate of the empirical measure of ``sqrt(n)`` times a projection, ``1 << k << n``.

    ``s_gg_k`` (``s_n`` much larger than ``k``): ``H(mu | N(0, m^2))``;
    ``s_eq_k``: ``inf_{c > 0} [H(mu | N(0, c^2)) + J_X(c)]``;
    ``s_ll_k``: ``J_X(c)`` if ``mu = N(0, c^2)`` and ``+inf`` otherwise.
    Relative entropies against centred Gaussians are evaluated in closed form
    from the entropy and second moment of ``mu``; measures without a density
    have infinite relative entropy.
    """
    jx = assumption.jx
    if regime == "s_gg_k":
        m = assumption.minimizer_m
        if m is None:
            raise DomainError("regime s_gg_k needs the minimizer m of J_X")
        if isinstance(mu, EmpiricalMeasure):
            return math.inf
        return relative_entropy(mu, _centred_gaussian(m))
    if regime == "s_eq_k":
        if isinstance(mu, EmpiricalMeasure):
            return math.inf
        h = mu.entropy()
        m2 = mu.moment(2)
        lo, hi = _jx_window(jx, 1e-6, 1e6)
        if lo <= 0:
            lo = 1e-6
        val, _ = _minimize_on(lambda c: _gaussian_re(h, m2, c) + jx(c), lo, hi, n=161)
        return max(val, 0.0)
    if regime == "s_ll_k":
        c = gaussian_fingerprint(mu)
        return math.inf if c is None else jx(c)
    raise DomainError("regime must be 's_gg_k', 's_eq_k' or 's_ll_k'")


def _centred_gaussian(c: float) -> Density1D:
    from .measures import gaussian_density

    return gaussian_density(c * c)


def rate_linear(mu: Density1D | EmpiricalMeasure, assumption: ThinShellAssumption, lam: float,
                regime: str) -> float:
    """Speed-``n`` rate of the empirical projection measure when ``k / n -> lam``.

    ``s_eq_n``::

        inf_{c > sqrt(lam M2)} [J_X(c) - (1-lam)/2 log(1 - lam M2 / c^2) + lam log c]
            - lam h(mu) + lam/2 log(2 pi e) + (1-lam)/2 log(1-lam)

    with ``M2`` the second moment and ``h`` the differential entropy of
    ``mu``; at ``lam = 1`` the ``(1 - lam)`` terms vanish (``0 log 0 = 0``).
    A measure without a density has ``h = -inf`` and the rate is ``+inf``
    (a warning is issued).  ``s_ll_n``: ``J_X(c)`` for ``mu = N(0, c^2)``,
    ``+inf`` otherwise.
    """
    if not 0.0 < lam <= 1.0:
        raise DomainError("lam must lie in (0, 1]")
    jx = assumption.jx
    if regime == "s_ll_n":
        c = gaussian_fingerprint(mu)
        return math.inf if c is None else jx(c)
    if regime != "s_eq_n":
        raise DomainError("regime must be 's_eq_n' or 's_ll_n'")
    if isinstance(mu, EmpiricalMeasure):
        warnings.warn("measure without density: entropy is -inf and the rate is +inf", stacklevel=2)
        return math.inf
    h = mu.entropy()
    if not math.isfinite(h):
        raise NumericalFlagError("entropy integral diverged", flag="entropy")
    m2 = mu.moment(2)
    one_minus = 1.0 - lam

    def obj(c: float) -> float:
        ratio = lam * m2 / (c * c)
        if ratio >= 1.0:
            return math.inf
        val = jx(c) + lam * math.log(c)
        if one_minus > 0:
            val -= 0.5 * one_minus * math.log1p(-ratio)
        return val

    c_min = math.sqrt(lam * m2)
    lo, hi = _jx_window(jx, c_min * (1.0 + 1e-12), max(1e3, 1e3 * c_min))
    if lo >= hi:
        return math.inf
    val, _ = _minimize_on(obj, lo, hi, n=161)
    const = -lam * h + 0.5 * lam * math.log(2.0 * math.pi * math.e)
    if one_minus > 0:
        const += 0.5 * one_minus * math.log(one_minus)
    return max(val + const, 0.0) if val + const > -1e-9 else val + const


def differential_entropy(mu: Density1D) -> float:
    """``-int f log f`` by quadrature."""
    return mu.entropy()


# ------------------------------------------------------------ J_X catalogue
def jx_product(cumulant_of_square: CumulantFunction, x: float) -> float:
    """Speed-``n`` rate of ``||X||_2 / sqrt(n)`` for iid coordinates: ``Lambda*_{X^2}(x^2)``."""
    if x < 0:
        return math.inf
    return legendre_1d(cumulant_of_square, x * x)


def chi_square_cumulant() -> CumulantFunction:
    """``log E exp(t Z^2) = -log(1 - 2t) / 2`` for a standard Gaussian ``Z``."""
    return CumulantFunction(lambda t: -0.5 * math.log1p(-2.0 * t), dim=1,
                            effective_domain=lambda t: t[0] < 0.5, scale=0.25, name="chi_square")


def gaussian_product_assumption() -> ThinShellAssumption:
    """iid standard Gaussian coordinates: ``J_X(x) = (x^2 - 1 - 2 log x) / 2``."""
    cum = chi_square_cumulant()
    jx = RateFunction(lambda v: jx_product(cum, v), (0.0, math.inf), "n", 1.0, "gaussian_product")
    return ThinShellAssumption("Astar", "n", jx, 1.0)


def jx_lp(x: float, p: float) -> float:
    """``J_X`` for ``X`` uniform in ``n^{1/p} B_p^n``.

    ``p in [1, 2)``: ``x^p / p`` on ``x >= 0`` (assumption ``B``, speed
    ``n^{2p/(2+p)}``); ``p = 2``: ``-log x`` on ``(0, 1]``; ``p > 2``:
    ``inf_{y in [x, 1]} [log(y / x) + F_p(y)]`` where ``F_p`` is the rate of
    ``||Y||_2 / sqrt(n)`` over ``||Y||_p / n^{1/p}`` for iid p-Gaussian ``Y``
    (a Legendre transform in two variables evaluated at ``(y^2, 1)``).
    """
    p = float(p)
    if p < 1:
        raise DomainError("jx_lp needs p >= 1")
    if p < 2:
        return x**p / p if x >= 0 else math.inf
    if p == 2:
        return -math.log(x) if 0 < x <= 1 else math.inf
    if x <= 0 or x > 1:
        return math.inf
    return rate_lqnorm_high(x, p, 2.0)


def lp_minimizer(p: float) -> float:
    """Thin-shell constant of ``n^{1/p} B_p^n``: ``sqrt(M_p(2))`` (``0`` for ``p < 2``, ``1`` for ``p = 2``)."""
    if p < 2:
        return 0.0
    if p == 2:
        return 1.0
    return math.exp(0.5 * log_moment_Mpq(p, 2.0))


def lp_assumption(p: float) -> ThinShellAssumption:
    """The ``J_X`` of the scaled ``l_p`` ball wrapped as an assumption."""
    p = float(p)
    m = lp_minimizer(p)
    if p < 2:
        r = 2.0 * p / (2.0 + p)
        jx = RateFunction(lambda v: jx_lp(v, p), (0.0, math.inf), f"n^{r:g}", 0.0, f"lp(p={p:g})")
        return ThinShellAssumption("B", f"n^{r:g}", jx, 0.0)
    cache: dict[float, float] = {}

    def ev(v: float) -> float:
        key = round(v, 12)
        if key not in cache:
            cache[key] = jx_lp(v, p)
        return cache[key]

    jx = RateFunction(ev, (0.0, 1.0), "n", m, f"lp(p={p:g})")
    return ThinShellAssumption("Astar", "n", jx, m)


def _log_partition_2d(M: OrliczFunction, s: float, t: float) -> float:
    """``log int exp(s M(x) + t x^2) dx`` for ``s < 0``."""
    if not s < 0:
        return math.inf
    L = float(M.inv(np.array([1.0 / abs(s)]))[0])
    if not L > 0 or not math.isfinite(L):
        L = 1.0
    if t < 0:
        L = min(L, 1.0 / math.sqrt(-t))

    def log_f(x):
        return s * M(x) + t * x * x

    return math.log(2.0) + log_int_exp(log_f, 0.0, M.domain_bound, scale=L)


def orlicz_superquadratic_minimizer(M: OrliczFunction) -> float:
    """``sqrt(E x^2)`` under the Gibbs law whose ``M``-moment equals 1."""
    tilt = solve_alpha_star(M, 1.0)
    return math.sqrt(gibbs_measure(M, tilt.alpha_star).moment(2))


def jx_orlicz_superquadratic(z: float, M: OrliczFunction, full_output: bool = False):
    """``J_X`` for ``X`` uniform in the Orlicz ball ``{sum M(x_i) <= n}``, ``M`` superquadratic.

    ``J(1, z^2) - sup_{s < 0} [s - log int e^{s M}]`` where
    ``J(u, v) = sup_{s < 0, t} [s u + t v - log int e^{s M(x) + t x^2} dx]``.
    The second supremum is the negated limiting log-volume at radius 1.
    """
    if not M.superquadratic:
        raise DomainError("jx_orlicz_superquadratic needs a superquadratic Orlicz function")
    if z < 0:
        return math.inf
    tilt = solve_alpha_star(M, 1.0)
    cum = CumulantFunction(lambda st: _log_partition_2d(M, st[0], st[1]), dim=2,
                           effective_domain=lambda st: st[0] < 0, scale=0.25 * abs(tilt.alpha_star),
                           name=f"orlicz2d({M.name})")
    val, info = legendre_nd(cum, np.array([1.0, z * z]), starts=[np.array([tilt.alpha_star, 0.0])],
                            n_random=0, full_output=True)
    res = val + tilt.log_volume_limit
    res = max(res, 0.0) if res > -1e-9 else res
    return (res, info) if full_output else res


def orlicz_assumption(M: OrliczFunction) -> ThinShellAssumption:
    """The Orlicz-ball ``J_X`` wrapped as an assumption."""
    m = orlicz_superquadratic_minimizer(M)
    jx = RateFunction(lambda v: jx_orlicz_superquadratic(v, M), (0.0, math.inf), "n", m, f"orlicz({M.name})")
    return ThinShellAssumption("Astar", "n", jx, m)


def minus_log_assumption() -> ThinShellAssumption:
    """``J_X(x) = -log x`` on ``(0, 1]`` (the uniform Euclidean ball)."""
    jx = RateFunction(lambda v: jx_lp(v, 2.0), (0.0, 1.0), "n", 1.0, "minus_log")
    return ThinShellAssumption("Astar", "n", jx, 1.0)


def thin_shell_statistic(x: np.ndarray) -> np.ndarray:
    """``||x||_2 / sqrt(n)`` along the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.mean(x * x, axis=-1))
