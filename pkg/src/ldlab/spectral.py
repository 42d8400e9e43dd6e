"""Eigenvalue gases and spectra of random points in Schatten-class balls.

A uniform point of the unit Schatten ``p``-ball of self-adjoint ``n x n``
matrices (real, complex or quaternionic: ``beta = 1, 2, 4``) has eigenvalue
vector distributed as ``U^{1/l} X / ||X||_p`` where ``X`` follows the gas
``exp(-sum |x_i|^p) prod_{i<j} |x_i - x_j|^beta`` and ``l = n + beta n(n-1)/2``
is the real dimension.  Squared singular values of non-self-adjoint square
matrices follow the analogous gas on ``(0, inf)`` with the extra factor
``prod x_i^{beta/2 - 1}`` and exponent ``p/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import kstest

from .distributions import p_gaussian_sample
from .errors import DomainError, NumericalFlagError
from .kernels import gas_sweep
from .measures import Density1D, EmpiricalMeasure
from .ratecalc.functionals import log_energy

RHAT_LIMIT = 1.05
SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class GasParams:
    """Parameters of an eigenvalue gas.

    ``scaled_by_n`` multiplies the confining potential by ``n`` (the
    normalisation under which the empirical measure has a limit); the
    normalised direction ``X / ||X||_p`` does not depend on it.
    """

    n: int
    beta: float
    p: float
    selfadjoint: bool = True
    scaled_by_n: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if self.beta not in (1, 2, 4):
            raise DomainError("beta must be 1, 2 or 4")
        if not (self.p > 0 and math.isfinite(self.p)):
            raise DomainError("p must be positive and finite for the gas")

    @property
    def dimension(self) -> float:
        """Real dimension ``l`` of the matrix space (exponent of the radial factor)."""
        pairs = self.beta * self.n * (self.n - 1) / 2.0
        if self.selfadjoint:
            return self.n + pairs
        return pairs + self.n * self.beta / 2.0

    @property
    def coef(self) -> float:
        return float(self.n) if self.scaled_by_n else 1.0

    @property
    def mode(self) -> int:
        return 0 if self.selfadjoint else 1


def gas_log_density(x, params: GasParams) -> float:
    """Unnormalised log-density of the gas at ``x``; ``-inf`` at coincident points."""
    x = np.asarray(x, dtype=float)
    n = params.n
    if x.shape != (n,):
        raise DomainError(f"expected a vector of length {n}")
    if not params.selfadjoint and np.any(x <= 0):
        return -math.inf
    diff = np.abs(x[:, None] - x[None, :])[np.triu_indices(n, 1)]
    if np.any(diff == 0):
        return -math.inf
    inter = params.beta * float(np.sum(np.log(diff)))
    if params.selfadjoint:
        return -params.coef * float(np.sum(np.abs(x) ** params.p)) + inter
    return (
        -params.coef * float(np.sum(x ** (0.5 * params.p)))
        + inter
        + (0.5 * params.beta - 1.0) * float(np.sum(np.log(x)))
    )


def split_rhat(draws: np.ndarray) -> float:
    """Split-R-hat of a scalar summary; ``draws`` has shape ``(n_draws, n_chains)``."""
    draws = np.asarray(draws, dtype=float)
    half = draws.shape[0] // 2
    if half < 2:
        return math.inf
    parts = np.concatenate([draws[:half], draws[half : 2 * half]], axis=1)
    m = parts.shape[0]
    means = parts.mean(axis=0)
    w = parts.var(axis=0, ddof=1).mean()
    b = m * means.var(ddof=1)
    if w == 0:
        return 1.0 if b == 0 else math.inf
    var_plus = (m - 1) / m * w + b / m
    return float(math.sqrt(var_plus / w))


@dataclass(frozen=True)
class GasRun:
    """Output of :func:`gas_mcmc`: ``samples`` has shape ``(n_draws, n_chains, n)``."""

    samples: np.ndarray
    acceptance_rate: float
    step_size: np.ndarray
    rhat: float
    params: GasParams


def _initial_state(params: GasParams, chains: int, rng: np.random.Generator) -> np.ndarray:
    n = params.n
    scale = 1.0 if params.scaled_by_n else n ** (1.0 / params.p)
    y = p_gaussian_sample(params.p, rng, (chains, n)) * scale
    if not params.selfadjoint:
        y = np.abs(y) ** 2 + 1e-3 * scale
    y = np.sort(y, axis=1)
    # break exact ties, which have zero density
    y += 1e-9 * scale * np.arange(n)[None, :]
    return y


def gas_mcmc(
    params: GasParams,
    rng: np.random.Generator,
    n_draws: int,
    chains: int = 4,
    burn_in: int = 1000,
    thin: int = 5,
    target_accept: float = 0.3,
) -> GasRun:
    """Metropolis sampler for the eigenvalue gas.

    Systematic-scan single-coordinate Gaussian proposals; each chain's step
    size is tuned during burn-in towards ``target_accept`` and frozen
    afterwards.  Chains start from sorted iid p-Gaussian draws.  ``burn_in``
    and ``thin`` count sweeps.  The returned R-hat is the larger of the
    split-R-hats of ``mean |x|^p`` and ``max |x|`` across chains.
    """
    n = params.n
    x = _initial_state(params, chains, rng)
    for c in range(chains):
        for _ in range(100):
            if math.isfinite(gas_log_density(x[c], params)):
                break
            x[c] = _initial_state(params, 1, rng)[0]
        else:
            raise NumericalFlagError("could not find a finite starting state", flag="init")
    spread = float(np.mean(np.std(x, axis=1))) or 1.0
    step = np.full(chains, 2.0 * spread / max(n, 1))
    for k in range(burn_in):
        acc = gas_sweep(x, step, params.beta, params.p, params.coef, params.mode,
                        rng.standard_normal((chains, n)), rng.random((chains, n)))
        gain = 1.0 / (1.0 + k) ** 0.3
        step *= np.exp(gain * (acc / n - target_accept))
    out = np.empty((n_draws, chains, n))
    total_acc = 0
    for k in range(n_draws):
        for _ in range(thin):
            acc = gas_sweep(x, step, params.beta, params.p, params.coef, params.mode,
                            rng.standard_normal((chains, n)), rng.random((chains, n)))
            total_acc += int(acc.sum())
        out[k] = x
    rate = total_acc / (n_draws * thin * chains * n)
    pw = np.mean(np.abs(out) ** params.p, axis=2)
    mx = np.max(np.abs(out), axis=2)
    rhat = max(split_rhat(pw), split_rhat(mx)) if chains > 1 else math.nan
    return GasRun(out, rate, step.copy(), rhat, params)


@dataclass(frozen=True)
class SpectralSample:
    """Eigenvalue (or squared singular value) vectors of random matrices.

    ``points`` has shape ``(m, n)``: ``m`` matrices of size ``n``, normalised
    to the unit Schatten ball.  :meth:`measure` pools the rescaled
    coordinates ``n^{1/p} points`` (``n^{2/p}`` for squared singular values)
    into one empirical measure.
    """

    points: np.ndarray
    p: float
    kind: str = "eigenvalues"
    rhat: float = math.nan
    acceptance_rate: float = math.nan

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def scaled_points(self) -> np.ndarray:
        e = 1.0 / self.p if self.kind == "eigenvalues" else 2.0 / self.p
        return self.n**e * self.points

    def measure(self) -> EmpiricalMeasure:
        return EmpiricalMeasure.from_samples(self.scaled_points().ravel())


def _draw_gas(params, rng, size, chains, burn_in, thin, strict):
    per_chain = math.ceil(size / chains)
    run = gas_mcmc(params, rng, per_chain, chains=chains, burn_in=burn_in, thin=thin)
    if strict and not run.rhat < RHAT_LIMIT:
        raise NumericalFlagError(f"gas chains did not mix: R-hat {run.rhat:.3f}", flag="rhat")
    x = run.samples.reshape(-1, params.n)[:size]
    return x, run


def sample_schatten_eigs(
    n: int,
    p: float,
    beta: int,
    rng: np.random.Generator,
    size: int,
    mode: str = "uniform",
    chains: int = 4,
    burn_in: int = 1000,
    thin: int = 5,
    strict: bool = False,
) -> SpectralSample:
    """Eigenvalues of uniform (or cone-measure) points of the self-adjoint Schatten ``p``-ball.

    ``X / ||X||_p`` with ``X`` drawn from the gas by :func:`gas_mcmc`, times
    ``U^{1/l}`` for ``mode="uniform"``.
    """
    params = GasParams(n, beta, p, selfadjoint=True)
    x, run = _draw_gas(params, rng, size, chains, burn_in, thin, strict)
    pts = x / np.sum(np.abs(x) ** p, axis=1, keepdims=True) ** (1.0 / p)
    if mode == "uniform":
        pts *= rng.random((pts.shape[0], 1)) ** (1.0 / params.dimension)
    elif mode != "cone":
        raise DomainError("mode must be 'uniform' or 'cone'")
    return SpectralSample(pts, p, "eigenvalues", run.rhat, run.acceptance_rate)


def sample_schatten_singular_sq(
    n: int,
    p: float,
    beta: int,
    rng: np.random.Generator,
    size: int,
    mode: str = "uniform",
    chains: int = 4,
    burn_in: int = 1000,
    thin: int = 5,
    strict: bool = False,
) -> SpectralSample:
    """Squared singular values of uniform points of the square Schatten ``p``-ball.

    Normalised by ``||X||_{p/2}``; the radial exponent is
    ``1 / (beta n (n-1)/2 + n beta/2)``.
    """
    params = GasParams(n, beta, p, selfadjoint=False)
    x, run = _draw_gas(params, rng, size, chains, burn_in, thin, strict)
    h = 0.5 * p
    pts = x / np.sum(x**h, axis=1, keepdims=True) ** (1.0 / h)
    if mode == "uniform":
        pts *= rng.random((pts.shape[0], 1)) ** (1.0 / params.dimension)
    elif mode != "cone":
        raise DomainError("mode must be 'uniform' or 'cone'")
    return SpectralSample(pts, p, "singular_sq", run.rhat, run.acceptance_rate)


# ------------------------------------------------------------ matrix oracles
def gaussian_selfadjoint(n: int, beta: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Gaussian self-adjoint matrices whose Frobenius norm is a standard Gaussian vector norm.

    ``beta = 1`` real symmetric, ``beta = 2`` complex Hermitian.
    """
    if beta == 1:
        g = rng.standard_normal((size, n, n)) / math.sqrt(2.0)
        a = np.triu(g, 1)
        a = a + np.swapaxes(a, 1, 2)
        idx = np.arange(n)
        a[:, idx, idx] = rng.standard_normal((size, n))
        return a
    if beta == 2:
        g = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / math.sqrt(2.0)
        a = np.triu(g, 1)
        a = a + np.conj(np.swapaxes(a, 1, 2))
        idx = np.arange(n)
        a[:, idx, idx] = rng.standard_normal((size, n))
        return a
    raise DomainError("matrix oracles are available for beta in {1, 2}")


def frobenius_ball_eigs(n: int, beta: int, rng: np.random.Generator, size: int) -> SpectralSample:
    """Eigenvalues of uniform points of the unit Frobenius ball by direct diagonalisation."""
    a = gaussian_selfadjoint(n, beta, rng, size)
    ev = np.linalg.eigvalsh(a)
    dim = n + beta * n * (n - 1) / 2.0
    norm = np.sqrt(np.sum(ev**2, axis=1, keepdims=True))
    pts = ev / norm * rng.random((size, 1)) ** (1.0 / dim)
    return SpectralSample(pts, 2.0, "eigenvalues")


def frobenius_ball_singular_sq(n: int, beta: int, rng: np.random.Generator, size: int) -> SpectralSample:
    """Squared singular values of uniform points of the unit Frobenius ball of square matrices."""
    if beta == 1:
        a = rng.standard_normal((size, n, n))
    elif beta == 2:
        a = rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))
    else:
        raise DomainError("matrix oracles are available for beta in {1, 2}")
    s2 = np.linalg.svd(a, compute_uv=False) ** 2
    dim = beta * n * n
    pts = s2 / np.sum(s2, axis=1, keepdims=True) * rng.random((size, 1)) ** (2.0 / dim)
    return SpectralSample(np.sort(pts, axis=1), 2.0, "singular_sq")


# ------------------------------------------------------------- rates & tests
def schatten_constant(p: float) -> float:
    """``log(sqrt(pi) p Gamma(p/2) / (2^p sqrt(e) Gamma((p+1)/2)))``."""
    return (
        0.5 * math.log(math.pi) + math.log(p) + gammaln(0.5 * p)
        - p * math.log(2.0) - 0.5 - gammaln(0.5 * (p + 1.0))
    )


def schatten_rate(mu: Density1D | EmpiricalMeasure, p: float, beta: float, selfadjoint: bool = True) -> float:
    """Speed-``n^2`` rate of the rescaled spectral measure of a Schatten-ball point.

    Self-adjoint, ``p < inf``: ``-(beta/2) E(mu) + (beta/(2p)) C_p`` when
    ``int |x|^p dmu <= 1``; ``p = inf``: ``-(beta/2) E(mu) - (beta/2) log 2``
    when ``mu`` lives on ``[-1, 1]``; non-self-adjoint (measures on
    ``(0, inf)`` of squared singular values): constant ``(beta/p) C_p`` and
    constraint ``int x^{p/2} dmu <= 1``.  ``E`` is :func:`log_energy`, and the
    value is ``+inf`` when the constraint fails.
    """
    if math.isinf(p):
        if not selfadjoint:
            raise DomainError("p = inf is supported for self-adjoint ensembles only")
        if isinstance(mu, EmpiricalMeasure):
            ok = bool(np.all(np.abs(mu.atoms) <= 1.0 + SUPPORT_TOL))
        else:
            ok = mu.support[0] >= -1.0 - SUPPORT_TOL and mu.support[1] <= 1.0 + SUPPORT_TOL
        if not ok:
            return math.inf
        return _clamp(-0.5 * beta * log_energy(mu) - 0.5 * beta * math.log(2.0))
    expo = p if selfadjoint else 0.5 * p
    if isinstance(mu, EmpiricalMeasure):
        if not selfadjoint and np.any(mu.atoms < 0):
            return math.inf
        moment = mu.moment(expo)
    else:
        if not selfadjoint and mu.support[0] < 0:
            return math.inf
        moment = mu.moment(expo)
    if moment > 1.0 + SUPPORT_TOL:
        return math.inf
    const = (0.5 * beta / p if selfadjoint else beta / p) * schatten_constant(p)
    return _clamp(-0.5 * beta * log_energy(mu) + const)


def _clamp(val: float) -> float:
    # quadrature roundoff around an exact zero
    return max(val, 0.0) if val > -1e-10 else val


def spectral_distance(sample: SpectralSample | EmpiricalMeasure | np.ndarray, law: Density1D,
                      metric: str = "kolmogorov") -> float:
    """Distance between pooled (rescaled) spectral points and a reference law.

    ``kolmogorov`` is the sup-distance of distribution functions;
    ``wasserstein1`` integrates ``|F_n - F|`` on a fine grid.  The law's cdf
    is its closed form when available and cumulative quadrature otherwise.
    """
    if isinstance(sample, SpectralSample):
        x = sample.scaled_points().ravel()
    elif isinstance(sample, EmpiricalMeasure):
        if not np.allclose(sample.weights, sample.weights[0]):
            raise DomainError("weighted empirical measures are not supported here")
        x = sample.atoms
    else:
        x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    if metric == "kolmogorov":
        return float(kstest(x, law.cdf).statistic)
    if metric == "wasserstein1":
        xs = np.sort(x)
        lo = min(xs[0], law.support[0] if np.isfinite(law.support[0]) else xs[0])
        hi = max(xs[-1], law.support[1] if np.isfinite(law.support[1]) else xs[-1])
        grid = np.linspace(lo, hi, 200001)
        emp = np.searchsorted(xs, grid, side="right") / xs.size
        return float(np.trapezoid(np.abs(emp - law.cdf(grid)), grid))
    raise DomainError("metric must be 'kolmogorov' or 'wasserstein1'")
