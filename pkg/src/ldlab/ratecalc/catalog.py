"""Catalogue of rate functions for norms of random points in lp balls."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .._quad import log_int_exp
from ..distributions import log_moment_Mpq, moment_Mpq
from ..errors import DomainError
from .compose import combine_independent_product, contract_rate
from .core import CumulantFunction, RateFunction
from .legendre import legendre_1d, legendre_nd


def _log_cp(p: float) -> float:
    return math.log(2.0) + math.log(p) / p + gammaln(1.0 + 1.0 / p)


# ------------------------------------------------------------------ cumulants
def gaussian_cumulant(sigma2: float = 1.0) -> CumulantFunction:
    return CumulantFunction(lambda t: 0.5 * sigma2 * t * t, dim=1, name="gaussian")


def rademacher_cumulant() -> CumulantFunction:
    return CumulantFunction(lambda t: abs(t) + math.log1p(math.exp(-2.0 * abs(t))) - math.log(2.0),
                            dim=1, name="rademacher")


def cumulant_lq_lp(t1: float, t2: float, p: float, q: float) -> float:
    """``log int exp(t1 |s|^q + t2 |s|^p) f_p(s) ds`` with ``f_p`` the p-Gaussian density.

    Finite on ``R x (-inf, 1/p)`` when ``q < p``; ``+inf`` for ``t2 >= 1/p``.
    """
    p, q = float(p), float(q)
    if not q < p:
        raise DomainError("cumulant_lq_lp needs q < p")
    if t2 >= 1.0 / p:
        return math.inf
    c = 1.0 / p - t2
    scale = c ** (-1.0 / p)
    if t1 > 0:
        scale = max(scale, (t1 * q / (c * p)) ** (1.0 / (p - q)))

    def log_f(s):
        return t1 * s**q - c * s**p

    return math.log(2.0) + log_int_exp(log_f, 0.0, math.inf, scale=scale) - _log_cp(p)


def lq_lp_cumulant(p: float, q: float) -> CumulantFunction:
    """The joint cumulant of ``(|Y|^q, |Y|^p)`` as a 2-d :class:`CumulantFunction`."""
    return CumulantFunction(
        lambda t: cumulant_lq_lp(t[0], t[1], p, q),
        dim=2,
        effective_domain=lambda t: t[1] < 1.0 / p,
        scale=min(1.0, 0.5 / p),
        name=f"lq_lp(p={p:g},q={q:g})",
    )


def _log_mgf_square(s: float, p: float) -> float:
    """``log E exp(s Y^2)`` for ``Y`` p-Gaussian with ``p > 2``."""
    scale = p ** (1.0 / p)
    if s > 0:
        scale = max(scale, (2.0 * s) ** (1.0 / (p - 2.0)))
    return math.log(2.0) + log_int_exp(lambda y: s * y * y - y**p / p, 0.0, math.inf, scale=scale) - _log_cp(p)


def gkr_cumulant(p: float) -> CumulantFunction:
    """Joint cumulant of ``(Z^2, Y Z, |Y|^p)`` for independent ``Z ~ N(0,1)``, ``Y`` p-Gaussian.

    Integrating ``Z`` out in closed form leaves a 1-d integral over ``Y``;
    for ``p = 2`` that integral is also closed form.
    """
    p = float(p)

    def ev(t):
        t0, t1, t2 = t
        a = 1.0 - p * t2
        b = 1.0 - 2.0 * t0
        s = 0.5 * t1 * t1 * a ** (-2.0 / p) / b
        if p == 2.0:
            if s >= 0.5:
                return math.inf
            inner = -0.5 * math.log1p(-2.0 * s)
        else:
            inner = _log_mgf_square(s, p)
        return -math.log(a) / p - 0.5 * math.log(b) + inner

    return CumulantFunction(ev, dim=3, effective_domain=lambda t: t[0] < 0.5 and t[2] < 1.0 / p,
                            scale=0.25, name=f"gkr(p={p:g})")


# ------------------------------------------------------------ rate catalogue
def rate_uniform_power(z: float) -> float:
    """Rate of ``U^{1/n}``: ``-log z`` on ``(0, 1]``, ``+inf`` elsewhere."""
    return -math.log(z) + 0.0 if 0.0 < z <= 1.0 else math.inf


def uniform_power_rate() -> RateFunction:
    return RateFunction(rate_uniform_power, (0.0, 1.0), "n", 1.0, "uniform_power")


def rate_gkr_lowp(x: float, p: float) -> float:
    """``|x|^{r_p} / r_p`` with ``r_p = 2p / (2 + p)``, for ``p in [1, 2)``."""
    if not 1.0 <= p < 2.0:
        raise DomainError("rate_gkr_lowp needs p in [1, 2)")
    r = 2.0 * p / (2.0 + p)
    return abs(x) ** r / r


def rate_gkr_highp(x: float, p: float, *, method: str = "reduced", full_output: bool = False):
    """Rate of the annealed one-dimensional projection for ``p >= 2``.

    ``p = 2`` uses ``-log(1 - x^2) / 2``.  For ``p > 2``, ``method="fiber"``
    minimises the Legendre transform of :func:`gkr_cumulant` over
    ``{tau0^{-1/2} tau1 tau2^{-1/p} = x}``, parametrised by
    ``(log tau0, log tau2)``.  The default ``method="reduced"`` uses that
    ``x`` is independent of ``(tau0, tau2)``, so the fiber infimum sits at
    ``tau0 = tau2 = 1``, and evaluates a single transform there.
    """
    p = float(p)
    if p < 2.0:
        raise DomainError("rate_gkr_highp needs p >= 2")
    x = abs(float(x))
    if p == 2.0:
        val = -0.5 * math.log1p(-x * x) if x < 1.0 else math.inf
        return (val, None) if full_output else val
    if x == 0.0:
        return (0.0, None) if full_output else 0.0
    f = gkr_cumulant(p)
    if method == "reduced":
        val, info = legendre_nd(f, np.array([1.0, x, 1.0]), n_random=0, full_output=True)
        return (val, info) if full_output else val

    def fiber(s):
        t0, t2 = math.exp(s[0]), math.exp(s[1])
        return np.array([t0, x * math.sqrt(t0) * t2 ** (1.0 / p), t2])

    return contract_rate(
        lambda tau: legendre_nd(f, tau, n_random=0),
        None, x, [(-1.5, 1.5), (-1.5, 1.5)], fiber=fiber, full_output=full_output,
    )


def gkr_highp_rate(p: float, method: str = "reduced") -> RateFunction:
    return RateFunction(lambda v: rate_gkr_highp(v, p, method=method), (-math.inf, math.inf), "n", 0.0,
                        f"gkr_highp(p={p:g})")


def rate_lqnorm_low(z: float, p: float, q: float) -> float:
    """Stretched rate ``(1/p)(z^q - M_p(q))^{p/q}`` for ``z >= M_p(q)^{1/q}`` (``q > p``)."""
    if not q > p >= 1:
        raise DomainError("rate_lqnorm_low needs q > p >= 1")
    m = moment_Mpq(p, q)
    if z < 0 or z**q < m:
        return 0.0 if abs(z**q - m) <= 1e-15 * m else math.inf
    return (z**q - m) ** (p / q) / p


def lq_conjugate(p: float, q: float, x: float, y: float, starts=None, full_output: bool = False):
    """Legendre transform of :func:`cumulant_lq_lp` at ``(x, y)``."""
    return legendre_nd(lq_lp_cumulant(p, q), np.array([x, y]), starts=starts, n_random=0,
                       full_output=full_output)


def rate_lqnorm_ratio(z2: float, p: float, q: float, *, method: str = "reduced", full_output: bool = False):
    """Rate of ``(S_q/n)^{1/q} / (S_p/n)^{1/p}`` for iid p-Gaussian coordinates.

    ``inf {Lambda*(x, y) : x^{1/q} y^{-1/p} = z2}``.  ``method="fiber"``
    contracts along the fiber parametrised by ``log y``; the default
    ``"reduced"`` evaluates ``Lambda*(z2^q, 1)``, which is exact because the
    ratio is independent of ``S_p``.
    """
    if z2 <= 0 or z2 > 1.0:
        # power-mean inequality: the ratio never exceeds 1 when q < p
        return (math.inf, None) if full_output else math.inf
    if method == "reduced":
        return lq_conjugate(p, q, z2**q, 1.0, full_output=full_output)
    warm = {"t": None}

    def base(pt):
        val, info = lq_conjugate(p, q, pt[0], pt[1], starts=None if warm["t"] is None else [warm["t"]],
                                 full_output=True)
        warm["t"] = info.argmax
        return val

    def fiber(log_y):
        y = math.exp(log_y)
        return (z2 * y ** (1.0 / p)) ** q, y

    return contract_rate(base, None, z2, (-2.0, 2.0), fiber=fiber, full_output=full_output)


def rate_lqnorm_high(z: float, p: float, q: float, *, method: str = "reduced") -> float:
    """Speed-n rate of ``n^{1/p - 1/q} ||Z||_q`` for ``Z`` uniform in the ``l_p^n`` ball, ``q < p``.

    Combines ``-log`` on ``(0, 1]`` (the radial factor ``U^{1/n}``) with
    :func:`rate_lqnorm_ratio` through :func:`combine_independent_product`.
    """
    if not 1.0 <= q < p:
        raise DomainError("rate_lqnorm_high needs 1 <= q < p")
    if z <= 0:
        return math.inf
    return combine_independent_product(uniform_power_rate(), lqnorm_ratio_rate(p, q, method), z)


@lru_cache(maxsize=64)
def lqnorm_ratio_rate(p: float, q: float, method: str = "reduced") -> RateFunction:
    cache: dict[float, float] = {}

    def ev(v: float) -> float:
        key = round(v, 12)
        if key not in cache:
            cache[key] = rate_lqnorm_ratio(v, p, q, method=method)
        return cache[key]

    m = math.exp(log_moment_Mpq(p, q) / q)
    return RateFunction(ev, (0.0, 1.0), "n", m, f"lq_ratio(p={p:g},q={q:g})")


def rate_stretched_cramer(a: float, c: float, r: float, m: float) -> float:
    """Upper-tail stretched-exponential rate ``c (a - m)^r`` for ``a > m``; ``0`` for ``a <= m``."""
    if not c > 0 or not 0 < r < 1:
        raise DomainError("need c > 0 and r in (0, 1)")
    return c * (a - m) ** r if a > m else 0.0


def mdp_sigma2(p: float, q: float) -> float:
    """Asymptotic variance ``(1/q^2)(G(1/p)G((2q+1)/p)/G((q+1)/p)^2 - 1) - 1/p``."""
    ratio = math.exp(gammaln(1.0 / p) + gammaln((2.0 * q + 1.0) / p) - 2.0 * gammaln((q + 1.0) / p))
    s2 = (ratio - 1.0) / (q * q) - 1.0 / p
    if not s2 > 0:
        raise DomainError(f"sigma^2 = {s2:.6g} <= 0: (p, q) = ({p}, {q}) is not a valid pair")
    return s2


def mdp_rate(t: float, sigma2: float) -> float:
    """Gaussian moderate-deviation rate ``t^2 / (2 sigma^2)``."""
    if not sigma2 > 0:
        raise DomainError("sigma^2 must be positive")
    return t * t / (2.0 * sigma2)


def cramer_rate(cumulant: CumulantFunction, domain_hint=(-math.inf, math.inf), minimizer=None) -> RateFunction:
    return RateFunction(lambda v: legendre_1d(cumulant, v), domain_hint, "n", minimizer, cumulant.name)


def catalog_rate(name: str, **params) -> RateFunction:
    """Look up a catalogue rate by name; used by the command-line interface."""
    if name == "uniform_power":
        return uniform_power_rate()
    if name == "gkr_lowp":
        p = params["p"]
        return RateFunction(lambda v: rate_gkr_lowp(v, p), (-math.inf, math.inf), "n^(2p/(2+p))", 0.0, name)
    if name == "gkr_highp":
        return gkr_highp_rate(params["p"], params.get("method", "reduced"))
    if name == "lqnorm_low":
        p, q = params["p"], params["q"]
        m = moment_Mpq(p, q) ** (1.0 / q)
        return RateFunction(lambda v: rate_lqnorm_low(v, p, q), (m, math.inf), "n^(p/q)", m, name)
    if name == "lqnorm_high":
        p, q = params["p"], params["q"]
        method = params.get("method", "reduced")
        m = moment_Mpq(p, q) ** (1.0 / q)
        return RateFunction(lambda v: rate_lqnorm_high(v, p, q, method=method), (0.0, math.inf), "n", m, name)
    if name == "stretched_cramer":
        c, r, m = params["c"], params["r"], params.get("m", 0.0)
        return RateFunction(lambda v: rate_stretched_cramer(v, c, r, m), (-math.inf, math.inf), "n^r", m, name)
    if name == "mdp":
        s2 = mdp_sigma2(params["p"], params["q"])
        return RateFunction(lambda v: mdp_rate(v, s2), (-math.inf, math.inf), "b_n^2", 0.0, name)
    raise DomainError(f"unknown catalogue rate {name!r}")


CATALOG_NAMES = ("uniform_power", "gkr_lowp", "gkr_highp", "lqnorm_low", "lqnorm_high", "stretched_cramer", "mdp")
