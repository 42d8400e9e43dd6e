"""Independent numerical checks of large deviation rates.

Two ways of computing small probabilities are provided: a deterministic
FFT convolution of lattice-discretised densities (:func:`fft_tail`) and
exponentially tilted importance sampling (:func:`tilted_rare_event`,
:func:`lqnorm_rare_event`).  :func:`fit_ldp_slope` turns a sequence of
log-probabilities into an empirical rate, and the experiment drivers package
the checks used by the command line and the acceptance tests.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve
from scipy.special import log_ndtr, logsumexp

from ._quad import log_int_exp
from .distributions import log_moment_Mpq, p_gaussian_logpdf
from .errors import DomainError, NumericalFlagError
from .measures import Density1D
from .orlicz import OrliczFunction
from .ratecalc import (
    combine_independent_product,
    cumulant_lq_lp,
    lq_conjugate,
    lqnorm_ratio_rate,
    mdp_sigma2,
    uniform_power_rate,
)
from .sampling import sample_lp_ball, sample_uniform_orlicz_ball

MAX_FFT_N = 2**14
TRUNCATION_TOL = 1e-12
ESS_FLOOR = 100.0


# ------------------------------------------------------------ FFT tails
def _lower_cut(density: Density1D) -> float:
    lo = density.support[0]
    if math.isfinite(lo):
        return lo
    x = -1.0
    while float(density.cdf(np.array([x]))[0]) > 1e-17:
        x *= 1.5
        if x < -1e8:
            raise DomainError("could not locate the lower tail of the density")
    return x


def _cell_log_masses(density: Density1D, edges: np.ndarray) -> np.ndarray:
    """Log-masses of ``[edges[i], edges[i+1])``, computed from cdf or sf for accuracy."""
    cdf = np.asarray(density.cdf(edges), dtype=float)
    sf = np.asarray(density.sf(edges), dtype=float)
    upper = cdf[:-1] > 0.5
    mass = np.where(upper, sf[:-1] - sf[1:], cdf[1:] - cdf[:-1])
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(mass, 0.0))


def _conv_capped(a: np.ndarray, b: np.ndarray, cap: int, theta: float) -> tuple[np.ndarray, float]:
    c = fftconvolve(a, b)
    np.maximum(c, 0.0, out=c)
    if c.size > cap + 1:
        extra = c[cap + 1 :]
        fold = np.exp(-theta * np.arange(1, extra.size + 1))
        c[cap] += math.fsum(extra * fold)
        c = c[: cap + 1]
    s = float(c.sum())
    return c / s, math.log(s)


def fft_tail(
    density: Density1D,
    n: int,
    threshold: float,
    *,
    h: Optional[float] = None,
    lower: Optional[float] = None,
    max_bins: int = 2**20,
    full_output: bool = False,
):
    """``log P(X_1 + ... + X_n >= threshold)`` for iid ``X_i`` with the given density.

    The density is discretised on a lattice of step ``h`` whose cells are
    aligned so that ``threshold / n`` is a cell boundary (``n = 1`` is then
    exact).  After shifting to non-negative values each summand can be
    capped at the threshold without changing the event, which keeps the
    lattice finite even for heavy tails.  The lattice law is exponentially
    tilted so that the threshold is typical, convolved ``n`` times by
    repeated squaring with FFTs (mass beyond the cap is folded back with its
    tilt correction), and the tilt is undone in log space.  A sum landing
    exactly on the threshold contributes half its mass.

    ``lower`` fixes the left end of the grid; if more than ``1e-12`` of the
    mass lies below it a :class:`DomainError` asks for a wider grid.
    """
    n = int(n)
    if not 1 <= n <= MAX_FFT_N:
        raise DomainError(f"n must lie in [1, {MAX_FFT_N}]")
    if lower is None:
        lower = _lower_cut(density)
    elif float(density.cdf(np.array([lower]))[0]) > TRUNCATION_TOL:
        raise DomainError("more than 1e-12 of the mass lies below the grid; widen it")
    target = threshold / n
    if target <= lower:
        out = (0.0, {"h": h, "bins": 0, "theta": 0.0})
        return out if full_output else 0.0
    if h is None:
        sd = math.sqrt(density.variance())
        h = max(0.01 * sd, n * (target - lower) / (0.5 * max_bins))
    k = math.ceil((target + 0.5 * h - lower) / h)
    x0 = target + 0.5 * h - k * h
    s_t = round(2.0 * n * (target - x0) / h) / 2.0
    cap = int(math.floor(s_t)) + 1
    if cap + 1 > max_bins:
        raise DomainError(f"lattice needs {cap + 1} bins (> {max_bins}); increase h")
    xs = x0 + h * np.arange(cap + 1)
    edges = np.concatenate([[-math.inf], xs[1:] - 0.5 * h, [math.inf]])
    if math.isfinite(density.support[0]):
        edges[0] = density.support[0]
    logp = _cell_log_masses(density, edges)

    if n == 1:
        val = float(logp[cap])
        out = (val, {"h": h, "bins": cap + 1, "theta": 0.0})
        return out if full_output else val

    idx = np.arange(cap + 1, dtype=float)

    def tilted_mean(theta: float) -> float:
        lq = logp + theta * idx
        lq -= logsumexp(lq)
        return float(np.dot(np.exp(lq), idx))

    goal = s_t / n
    theta = 0.0
    if tilted_mean(0.0) < goal:
        hi = 1e-6
        while tilted_mean(hi) < goal:
            hi *= 2.0
            if hi > 1e6:
                raise NumericalFlagError("could not find a tilt reaching the threshold", flag="tilt")
        theta = brentq(lambda t: tilted_mean(t) - goal, 0.0, hi, xtol=1e-14, rtol=1e-12)
    log_z = float(logsumexp(logp + theta * idx))
    q = np.exp(logp + theta * idx - log_z)

    result, log_r = None, 0.0
    base, log_b = q, 0.0
    m = n
    while m:
        if m & 1:
            if result is None:
                result, log_r = base.copy(), log_b
            else:
                result, s = _conv_capped(result, base, cap, theta)
                log_r += log_b + s
        m >>= 1
        if m:
            base, s = _conv_capped(base, base, cap, theta)
            log_b = 2.0 * log_b + s
    above = np.arange(cap + 1) > s_t
    terms = list(result[above] * np.exp(-theta * (idx[above] - s_t)))
    if s_t == int(s_t):
        terms.append(0.5 * result[int(s_t)])
    tail = math.fsum(terms)
    val = -math.inf if tail <= 0 else math.log(tail) - theta * s_t + n * log_z + log_r
    val = min(val, 0.0)
    out = (val, {"h": h, "bins": cap + 1, "theta": theta / h})
    return out if full_output else val


# ------------------------------------------------------- importance sampling
@dataclass(frozen=True)
class RareEventEstimate:
    """Log-probability estimate; ``std_err`` is the delta-method error of the log."""

    log_prob: float
    std_err: float
    ess: float
    tilt: object
    samples: int
    flag: str = "ok"


def _summarise(log_w: np.ndarray, tilt, samples: int) -> RareEventEstimate:
    finite = np.isfinite(log_w)
    if not finite.any():
        return RareEventEstimate(-math.inf, math.inf, 0.0, tilt, samples, "no-hits")
    top = float(np.max(log_w[finite]))
    w = np.where(finite, np.exp(log_w - top), 0.0)
    mean = float(w.mean())
    sd = float(w.std(ddof=1)) if samples > 1 else math.inf
    ess = float(w.sum() ** 2 / np.sum(w * w))
    flag = "ok" if ess >= ESS_FLOOR else "low-ess"
    return RareEventEstimate(math.log(mean) + top, sd / math.sqrt(samples) / mean, ess, tilt, samples, flag)


def log_mgf(base: Density1D, theta: float) -> float:
    """``log int exp(theta x) f(x) dx`` by log-space quadrature; ``+inf`` if divergent."""
    lo, hi = base.support
    c = base.mode if np.isfinite(base.mode) else (lo if math.isfinite(lo) else 0.0)
    c = min(max(c, lo), hi)
    sd = math.sqrt(base.variance())

    def g(x):
        return theta * x + base.logpdf(x)

    parts = []
    if hi > c:
        span = hi - c
        parts.append(log_int_exp(lambda u: g(c + u), 0.0, span, scale=sd))
    if lo < c:
        span = c - lo
        parts.append(log_int_exp(lambda u: g(c - u), 0.0, span, scale=sd))
    return float(np.logaddexp.reduce(parts))


def _tilted_mean(base: Density1D, theta: float) -> float:
    d = 1e-5 * max(1.0, abs(theta))
    return (log_mgf(base, theta + d) - log_mgf(base, theta - d)) / (2.0 * d)


def tilted_rare_event(
    base: Density1D,
    n: int,
    threshold: float,
    samples: int,
    rng: np.random.Generator,
    *,
    tilt: Optional[float] = None,
    direction: str = "upper",
    batch: int = 2000,
) -> RareEventEstimate:
    """Importance-sampling estimate of ``P(S_n >= threshold)`` (or ``<=`` for ``direction="lower"``).

    Coordinates are drawn from ``exp(tilt x - Lambda(tilt)) f(x)`` and
    weighted by ``exp(-tilt S_n + n Lambda(tilt))``.  By default the tilt
    makes the tilted mean of ``S_n`` equal to the threshold.  ``tilt = 0``
    is plain Monte Carlo.  Estimates with effective sample size below 100
    are flagged ``"low-ess"``.
    """
    if direction not in ("upper", "lower"):
        raise DomainError("direction must be 'upper' or 'lower'")
    goal = threshold / n
    if tilt is None:
        mean0 = _tilted_mean(base, 0.0)
        rare = goal > mean0 if direction == "upper" else goal < mean0
        if not rare:
            tilt = 0.0
        else:
            sign = 1.0 if direction == "upper" else -1.0
            hi = 0.1
            while True:
                if hi > 1e6 or not math.isfinite(log_mgf(base, sign * hi * (1 + 1e-4))):
                    raise DomainError("no exponential moment reaches the threshold; use fft_tail")
                if sign * (_tilted_mean(base, sign * hi) - goal) >= 0:
                    break
                hi *= 2.0
            tilt = sign * brentq(lambda t: sign * (_tilted_mean(base, sign * t) - goal), 0.0, hi, xtol=1e-12)
    tilt = float(tilt)
    if tilt == 0.0:
        law, lam = base, 0.0
    else:
        lam = log_mgf(base, tilt)
        if not math.isfinite(lam):
            raise DomainError("base law has no exponential moment at this tilt")
        center = _tilted_mean(base, tilt)
        law = Density1D(
            log_pdf=lambda x: tilt * x + base.logpdf(x) - lam,
            support=base.support,
            breakpoints=base.breakpoints,
            name=f"tilted({base.name})",
            normalization_checked=True,
            mode=center,
        )
    log_w = np.empty(samples)
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        s = law.sample(rng, m * n).reshape(m, n).sum(axis=1)
        hit = s >= threshold if direction == "upper" else s <= threshold
        log_w[done : done + m] = np.where(hit, -tilt * s + n * lam, -math.inf)
        done += m
    return _summarise(log_w, tilt, samples)


def lqnorm_rare_event(
    p: float,
    q: float,
    n: int,
    z: float,
    samples: int,
    rng: np.random.Generator,
    *,
    batch: int = 2000,
) -> RareEventEstimate:
    """Estimate ``P(n^{1/p - 1/q} ||Z||_q <= z)`` (``z`` below the typical value) or ``>= z`` (above) for ``Z`` uniform in ``B_p^n``, ``q < p``.

    ``Z = U^{1/n} Y / ||Y||_p``.  The uniform factor is integrated out
    exactly given ``Y``; the coordinates of ``Y`` are drawn from the
    exponential tilt of ``(|y|^q, |y|^p)`` that makes the optimal ratio
    ``(S_q/n)^{1/q} / (S_p/n)^{1/p}`` typical.
    """
    if not 1.0 <= q < p:
        raise DomainError("need 1 <= q < p")
    ratio_rate = lqnorm_ratio_rate(p, q)
    m = ratio_rate.minimizer
    lower = z < m
    if lower:
        _, info = combine_independent_product(uniform_power_rate(), ratio_rate, z, full_output=True)
        y_star = info.argmin[1]
    else:
        y_star = z
    _, leg = lq_conjugate(p, q, y_star**q, 1.0, full_output=True)
    t1, t2 = (float(v) for v in leg.argmax)
    lam = cumulant_lq_lp(t1, t2, p, q)
    law = Density1D(
        log_pdf=lambda y: t1 * np.abs(y) ** q + t2 * np.abs(y) ** p + p_gaussian_logpdf(y, p) - lam,
        breakpoints=(0.0,),
        name="tilted-lq",
        normalization_checked=True,
        mode=0.0,
    )
    log_w = np.empty(samples)
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        a = np.abs(law.sample(rng, k * n).reshape(k, n))
        sq = np.sum(a**q, axis=1)
        sp = np.sum(a**p, axis=1)
        ratio = (sq / n) ** (1.0 / q) / (sp / n) ** (1.0 / p)
        lr = n * np.log(z / ratio)
        if lower:
            rb = np.minimum(lr, 0.0)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                rb = np.where(lr < 0, np.log(-np.expm1(np.minimum(lr, 0.0))), -math.inf)
        log_w[done : done + k] = rb - t1 * sq - t2 * sp + n * lam
        done += k
    return _summarise(log_w, (t1, t2), samples)


# ------------------------------------------------------------- slope fits
@dataclass(frozen=True)
class LdpSlopeEstimate:
    """Least-squares fit ``log P(n) ~ slope * s(n) + intercept`` (optionally ``+ c log n``)."""

    n_grid: tuple
    log_probs: tuple
    speed_values: tuple
    fitted_slope: float
    r_squared: float
    intercept: float = 0.0
    log_coefficient: float = 0.0
    std_errs: tuple = ()
    flag: str = "ok"

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.n_grid[:-1], self.n_grid[1:])):
            raise DomainError("n_grid must be strictly increasing")


def fit_ldp_slope(
    n_grid: Sequence[int],
    log_probs: Sequence[float],
    speed: Callable[[float], float] = lambda n: n,
    *,
    log_correction: bool = False,
    std_errs: Sequence[float] = (),
) -> LdpSlopeEstimate:
    """Fit the exponential decay rate of a sequence of log-probabilities.

    The slope of ``log P`` against ``s(n)`` estimates ``-I``.  With
    ``log_correction`` a ``log n`` regressor absorbs polynomial prefactors.
    A zero probability gives slope ``-inf`` with flag ``"zero-probability"``.
    """
    n_arr = np.asarray(n_grid, dtype=float)
    y = np.asarray(log_probs, dtype=float)
    need = 4 if log_correction else 3
    if n_arr.size < need:
        raise DomainError(f"need at least {need} grid points")
    s = np.array([float(speed(v)) for v in n_arr])
    if np.any(y == -math.inf):
        return LdpSlopeEstimate(tuple(n_grid), tuple(y), tuple(s), -math.inf, 0.0, flag="zero-probability",
                                std_errs=tuple(std_errs))
    cols = [s, np.ones_like(s)]
    if log_correction:
        cols.append(np.log(n_arr))
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / sst)
    return LdpSlopeEstimate(
        tuple(int(v) for v in n_grid), tuple(y), tuple(s), float(coef[0]), r2, float(coef[1]),
        float(coef[2]) if log_correction else 0.0, tuple(std_errs),
    )


# ----------------------------------------------------------- experiments
@dataclass(frozen=True)
class MdpResult:
    """Moderate-deviation check for ``||Z||_q`` with ``Z`` uniform in ``B_p^n``."""

    n: int
    b_n: float
    sigma2: float
    sigma2_hat: float
    t_grid: np.ndarray
    log_tail: np.ndarray
    std_err: np.ndarray
    counts: np.ndarray
    rate: np.ndarray
    gaussian_log_tail: np.ndarray
    flags: tuple = field(default_factory=tuple)


def mdp_experiment(
    p: float,
    q: float,
    gamma: float,
    n: int,
    samples: int,
    rng: np.random.Generator,
    t_grid: Optional[Sequence[float]] = None,
    batch: int = 500,
    min_count: int = 10,
) -> MdpResult:
    """Simulate ``(sqrt(n) / b_n) (n^{1/p - 1/q} ||Z||_q / M_p(q)^{1/q} - 1)`` with ``b_n = n^gamma``.

    Reports the sample variance of ``sqrt(n) (...)`` against ``sigma^2``,
    and ``(1/b_n^2) log`` of the empirical upper tail at each ``t`` against
    ``-t^2 / (2 sigma^2)`` and against the finite-``n`` Gaussian value
    ``log Phibar(b_n t / sigma) / b_n^2``.  Levels with fewer than
    ``min_count`` exceedances are flagged.
    """
    if not 0.0 < gamma < 0.5:
        raise DomainError("gamma must lie in (0, 1/2)")
    sigma2 = mdp_sigma2(p, q)
    b = n**gamma
    scale = n ** (1.0 / p - 1.0 / q) / math.exp(log_moment_Mpq(p, q) / q)
    v = np.empty(samples)
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        z = sample_lp_ball(n, p, rng, k)
        norm_q = np.sum(np.abs(z) ** q, axis=1) ** (1.0 / q)
        v[done : done + k] = math.sqrt(n) * (scale * norm_q - 1.0)
        done += k
    sigma2_hat = float(np.var(v, ddof=1))
    if t_grid is None:
        t_grid = np.linspace(0.0, 2.0 * math.sqrt(sigma2) / b, 9)
    t_grid = np.asarray(t_grid, dtype=float)
    stat = v / b
    counts = np.array([int(np.sum(stat >= t)) for t in t_grid])
    frac = counts / samples
    with np.errstate(divide="ignore", invalid="ignore"):
        log_tail = np.log(frac) / b**2
        se = np.sqrt((1.0 - frac) / np.maximum(counts, 1)) / b**2
    rate = -t_grid**2 / (2.0 * sigma2)
    gauss = log_ndtr(-b * t_grid / math.sqrt(sigma2)) / b**2
    flags = tuple(f"low-count@t={t:.4g}" for t, c in zip(t_grid, counts) if c < min_count)
    return MdpResult(n, b, sigma2, sigma2_hat, t_grid, log_tail, se, counts, rate, gauss, flags)


def norm_ldp_experiment(
    n_grid: Sequence[int],
    threshold: float,
    samples: int,
    rng: np.random.Generator,
    *,
    square_law: Optional[Density1D] = None,
    sampler: Optional[Callable[[int, np.random.Generator, int], np.ndarray]] = None,
    direction: str = "lower",
    log_correction: bool = False,
) -> tuple[LdpSlopeEstimate, list[RareEventEstimate]]:
    """Slope of ``log P(||X||_2 / sqrt(n) <= z)`` (or ``>= z``) across ``n_grid``.

    With ``square_law`` (the law of ``X_i^2`` for iid coordinates) each
    probability is a sum event estimated by :func:`tilted_rare_event`.
    Otherwise ``sampler(n, rng, size)`` provides vectors for plain Monte
    Carlo, whose estimates carry the flag ``"plain-mc"``.
    """
    if (square_law is None) == (sampler is None):
        raise DomainError("provide exactly one of square_law and sampler")
    ests = []
    for n in n_grid:
        if square_law is not None:
            est = tilted_rare_event(square_law, n, n * threshold**2, samples, rng, direction=direction)
        else:
            x = sampler(n, rng, samples)
            stat = np.sqrt(np.mean(x * x, axis=1))
            hit = stat <= threshold if direction == "lower" else stat >= threshold
            k = int(hit.sum())
            if k == 0:
                est = RareEventEstimate(-math.inf, math.inf, 0.0, 0.0, samples, "no-hits")
            else:
                frac = k / samples
                est = RareEventEstimate(math.log(frac), math.sqrt((1 - frac) / k), float(k), 0.0, samples,
                                        "plain-mc")
        ests.append(est)
    fit = fit_ldp_slope(n_grid, [e.log_prob for e in ests], log_correction=log_correction,
                        std_errs=[e.std_err for e in ests])
    return fit, ests


def dichotomy_fraction(
    M1: OrliczFunction,
    R1: float,
    M2: OrliczFunction,
    R2: float,
    d: int,
    samples: int,
    rng: np.random.Generator,
    method: str = "rejection",
) -> tuple[float, float]:
    """Monte-Carlo fraction of the Orlicz ball ``B_{M1}(d R1)`` lying in ``B_{M2}(d R2)``.

    Returns the fraction and its binomial standard error.
    """
    pts = sample_uniform_orlicz_ball(d, M1, R1, rng, samples, method=method)
    inside = np.sum(M2(pts), axis=1) <= d * R2
    frac = float(inside.mean())
    return frac, math.sqrt(max(frac * (1.0 - frac), 1.0 / samples) / samples)


def write_ldp_csv(path: str | Path, fit: LdpSlopeEstimate, rate_prediction: Sequence[float]) -> Path:
    """CSV with columns ``n, s_n, log_prob, std_err, rate_prediction``."""
    path = Path(path)
    errs = fit.std_errs or (math.nan,) * len(fit.n_grid)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "s_n", "log_prob", "std_err", "rate_prediction"])
        for row in zip(fit.n_grid, fit.speed_values, fit.log_probs, errs, rate_prediction):
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    return path


@dataclass(frozen=True)
class CellCheck:
    """Empirical versus exact probabilities of polygonal cells."""

    exact: np.ndarray
    empirical: np.ndarray
    std_err: np.ndarray

    @property
    def z_scores(self) -> np.ndarray:
        return (self.empirical - self.exact) / self.std_err


def polygon_cell_probabilities(points: np.ndarray, cells: Sequence, body_area: float, body=None) -> CellCheck:
    """Compare hit frequencies of planar polygons with their exact uniform probabilities.

    ``cells`` are shapely polygons (or coordinate lists).  The exact
    probability is ``area(cell & body) / body_area``; with ``body=None`` the
    cells are assumed to lie inside the body.  Standard errors use the exact
    probability.
    """
    import shapely
    from shapely.geometry import Polygon

    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must have shape (m, 2)")
    exact, emp = [], []
    for cell in cells:
        poly = cell if hasattr(cell, "area") else Polygon(cell)
        area = poly.intersection(body).area if body is not None else poly.area
        exact.append(area / body_area)
        emp.append(float(np.mean(shapely.contains_xy(poly, pts[:, 0], pts[:, 1]))))
    exact_a = np.array(exact)
    se = np.sqrt(exact_a * (1.0 - exact_a) / pts.shape[0])
    return CellCheck(exact_a, np.array(emp), se)
