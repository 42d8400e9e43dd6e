"""Reference one-dimensional laws: p-generalised Gaussians and Ullman laws."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from ._quad import integrate
from .errors import DomainError, RangeError
from .measures import Density1D

__all__ = [
    "p_gaussian_pdf",
    "p_gaussian_logpdf",
    "p_gaussian_density",
    "p_gaussian_sample",
    "moment_Mpq",
    "ullman_density",
    "ullman_support_bp",
    "ullman_law",
    "UllmanLaw",
    "gibbs_density",
]


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 0 or not np.isfinite(p):
        raise DomainError(f"p must be a positive finite number, got {p}")
    if p < 1:
        warnings.warn(f"p = {p} < 1: the lp 'ball' is not convex", stacklevel=3)
    return p


def _log_norm_const(p: float) -> float:
    # log(2 p^{1/p} Gamma(1 + 1/p))
    return math.log(2.0) + math.log(p) / p + gammaln(1.0 + 1.0 / p)


def p_gaussian_logpdf(x, p: float):
    """Log-density of the p-generalised Gaussian ``exp(-|x|^p/p)/c_p``."""
    p = _check_p(p)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("p_gaussian_pdf requires finite arguments")
    out = -np.abs(x) ** p / p - _log_norm_const(p)
    return out if out.ndim else float(out)


def p_gaussian_pdf(x, p: float):
    """Density ``exp(-|x|^p / p) / (2 p^{1/p} Gamma(1 + 1/p))``.

    Examples
    --------
    >>> round(p_gaussian_pdf(0.0, 2), 6)
    0.398942
    """
    return np.exp(p_gaussian_logpdf(x, p))


def _p_gaussian_cdf(x, p: float):
    x = np.asarray(x, dtype=float)
    return 0.5 + 0.5 * np.sign(x) * gammainc(1.0 / p, np.abs(x) ** p / p)


def _p_gaussian_sf(x, p: float):
    x = np.asarray(x, dtype=float)
    upper = 0.5 * gammaincc(1.0 / p, np.abs(x) ** p / p)
    return np.where(x >= 0, upper, 1.0 - upper)


def p_gaussian_sample(p: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw from the p-generalised Gaussian.

    Uses ``sign * (p G)^{1/p}`` with ``G ~ Gamma(1/p, 1)`` and an independent
    random sign.  For ``p = 2`` the law is standard normal and numpy's normal
    generator is used directly.
    """
    p = _check_p(p)
    if p == 2.0:
        return rng.standard_normal(size)
    g = rng.standard_gamma(1.0 / p, size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return sign * (p * g) ** (1.0 / p)


def p_gaussian_density(p: float) -> Density1D:
    """The p-generalised Gaussian as a :class:`Density1D`."""
    p = _check_p(p)
    c = _log_norm_const(p)
    return Density1D(
        log_pdf=lambda x: -np.abs(x) ** p / p - c,
        breakpoints=(0.0,),
        cdf_func=lambda x: _p_gaussian_cdf(x, p),
        sf_func=lambda x: _p_gaussian_sf(x, p),
        sampler=lambda rng, size: p_gaussian_sample(p, rng, size),
        name=f"p-gaussian(p={p:g})",
        normalization_checked=True,
        mode=0.0,
    )


def log_moment_Mpq(p: float, q: float) -> float:
    """Logarithm of :func:`moment_Mpq`."""
    p = float(p)
    q = float(q)
    if not p > 0:
        raise DomainError("p must be positive")
    if not q > -1:
        raise DomainError("the absolute moment of order q exists only for q > -1")
    return (q / p) * math.log(p) - math.log(q + 1.0) + gammaln(1.0 + (q + 1.0) / p) - gammaln(1.0 + 1.0 / p)


def moment_Mpq(p: float, q: float) -> float:
    """Absolute moment ``E|Y|^q`` of the p-generalised Gaussian.

    Closed form ``p^{q/p} Gamma(1 + (q+1)/p) / ((q+1) Gamma(1 + 1/p))``.
    Raises :class:`RangeError` when the value overflows.
    """
    val = log_moment_Mpq(p, q)
    if val > 709.0:
        raise RangeError(f"M_p(q) overflows for p={p}, q={q}")
    return math.exp(val)


# --------------------------------------------------------------- Ullman laws
def _ullman_scalar(x: float, p: float) -> float:
    ax = abs(x)
    if ax >= 1.0:
        return 0.0
    if p == 1.0:
        return math.log((1.0 + math.sqrt(1.0 - ax * ax)) / ax) / math.pi if ax > 0 else math.inf
    if p == 2.0:
        return 2.0 / math.pi * math.sqrt(1.0 - ax * ax)
    if math.isinf(p):
        return 1.0 / (math.pi * math.sqrt(1.0 - ax * ax))
    upper = math.sqrt(1.0 - ax * ax)
    if ax == 0.0:
        return p / (math.pi * (p - 1.0)) if p > 1 else math.inf
    e = 0.5 * (p - 2.0)
    a2 = ax * ax
    val = integrate(lambda s: (a2 + s * s) ** e, 0.0, upper, points=(min(ax, 0.5 * upper),))
    return p / math.pi * val


def ullman_density(x, p: float):
    """Ullman density ``h_p`` on ``[-1, 1]``.

    ``h_p(x) = (p/pi) int_{|x|}^1 t^{p-1} / sqrt(t^2 - x^2) dt``, evaluated by
    closed forms for ``p`` in {1, 2, inf} and by quadrature after the
    substitution ``t = sqrt(x^2 + s^2)`` otherwise.
    """
    p = float(p)
    if not p > 0:
        raise DomainError("p must be positive")
    x = np.asarray(x, dtype=float)
    out = np.vectorize(lambda v: _ullman_scalar(float(v), p), otypes=[float])(x)
    return out if out.ndim else float(out)


def ullman_support_bp(p: float) -> float:
    """Right endpoint ``b_p = (p sqrt(pi) Gamma(p/2) / Gamma((p+1)/2))^{1/p}``; ``b_inf = 1``."""
    p = float(p)
    if math.isinf(p):
        return 1.0
    if not p > 0:
        raise DomainError("p must be positive")
    log_b = (math.log(p) + 0.5 * math.log(math.pi) + gammaln(p / 2.0) - gammaln((p + 1.0) / 2.0)) / p
    return math.exp(log_b)


def _ullman_unit_cdf(p: float):
    if p == 2.0:
        def cdf(x):
            x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
            return 0.5 + (x * np.sqrt(1.0 - x * x) + np.arcsin(x)) / np.pi
        return cdf
    if math.isinf(p):
        def cdf(x):
            x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
            return 0.5 + np.arcsin(x) / np.pi
        return cdf
    if p == 1.0:
        def cdf(x):
            x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
            ax = np.abs(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                body = np.where(ax > 0, ax * np.log((1.0 + np.sqrt(1.0 - ax * ax)) / ax), 0.0)
            return 0.5 + np.sign(x) * (body + np.arcsin(ax)) / np.pi
        return cdf
    return None


@dataclass(frozen=True, eq=False)
class UllmanLaw:
    """Ullman law of order ``p`` rescaled to ``[-b_p, b_p]``.

    ``density`` is the law of the rescaled eigenvalues; ``singular_variant``
    is the image under ``|x|``, i.e. density ``2 b_p^{-1} h_p(x / b_p)`` on
    ``[0, b_p]``.  ``unit`` is ``h_p`` itself on ``[-1, 1]``.
    """

    p: float
    b_p: float
    unit: Density1D
    density: Density1D
    singular_variant: Density1D


@lru_cache(maxsize=32)
def ullman_law(p: float) -> UllmanLaw:
    p = float(p)
    b = ullman_support_bp(p)
    unit_cdf = _ullman_unit_cdf(p)

    def log_h(x):
        with np.errstate(divide="ignore"):
            return np.log(ullman_density(x, p))

    unit = Density1D(
        log_pdf=log_h,
        support=(-1.0, 1.0),
        breakpoints=(0.0,),
        cdf_func=unit_cdf,
        name=f"ullman(p={p:g})",
        mode=0.0,
    )
    scaled_cdf = None if unit_cdf is None else (lambda x: unit_cdf(np.asarray(x) / b))
    density = Density1D(
        log_pdf=lambda x: log_h(np.asarray(x) / b) - math.log(b),
        support=(-b, b),
        breakpoints=(0.0,),
        cdf_func=scaled_cdf,
        name=f"ullman-scaled(p={p:g})",
        mode=0.0,
    )
    sing_cdf = None if unit_cdf is None else (lambda x: np.clip(2.0 * unit_cdf(np.asarray(x) / b) - 1.0, 0.0, 1.0))
    singular = Density1D(
        log_pdf=lambda x: math.log(2.0) + log_h(np.asarray(x) / b) - math.log(b),
        support=(0.0, b),
        cdf_func=sing_cdf,
        name=f"ullman-singular(p={p:g})",
    )
    return UllmanLaw(p=p, b_p=b, unit=unit, density=density, singular_variant=singular)


def gibbs_density(M, alpha: float) -> Density1D:
    """Gibbs density ``exp(alpha M(x) - phi(alpha))`` for an Orlicz function ``M`` and ``alpha < 0``.

    ``M`` may be an :class:`ldlab.orlicz.OrliczFunction` or a plain vectorised
    callable (treated as a non-superquadratic Orlicz function on the line).
    """
    from .orlicz import OrliczFunction, gibbs_measure

    if not isinstance(M, OrliczFunction):
        M = OrliczFunction(M, name="custom")
    return gibbs_measure(M, alpha)


def abs_power_density(p: float, q: float) -> Density1D:
    """Law of ``|Y|^q`` for ``Y`` p-Gaussian, on ``[0, inf)``.

    ``P(|Y|^q > x) = Q(1/p, x^{p/q} / p)`` with ``Q`` the regularised upper
    incomplete gamma function; for ``p = 1, q = 2`` this is ``exp(-sqrt(x))``.
    """
    p = _check_p(p)
    q = float(q)
    if not q > 0:
        raise DomainError("q must be positive")
    c = _log_norm_const(p)

    def log_pdf(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            y = x ** (1.0 / q)
            return math.log(2.0 / q) - y**p / p - c + (1.0 / q - 1.0) * np.log(x)

    def sf(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return gammaincc(1.0 / p, x ** (p / q) / p)

    def cdf(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return gammainc(1.0 / p, x ** (p / q) / p)

    return Density1D(
        log_pdf=log_pdf,
        support=(0.0, math.inf),
        cdf_func=cdf,
        sf_func=sf,
        sampler=lambda rng, size: np.abs(p_gaussian_sample(p, rng, size)) ** q,
        name=f"|p-gaussian(p={p:g})|^{q:g}",
        normalization_checked=True,
        mode=0.0,
    )
