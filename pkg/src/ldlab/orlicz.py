"""Orlicz balls: Gibbs tilts, volume asymptotics, intersections and Sanov rates.

An Orlicz function ``M`` is even, convex, ``M(0) = 0`` and increasing on
``[0, inf)``.  The Orlicz ball of radius ``R`` in dimension ``d`` is
``{x : sum_i M(x_i) <= d R}``.  Its volume is governed by the exponential
tilt ``mu_alpha(dx) = exp(alpha M(x) - phi(alpha)) dx`` with the unique
``alpha* < 0`` solving ``phi'(alpha*) = R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaln

from ._quad import integrate
from .errors import DomainError, NumericalFlagError
from .measures import Density1D, EmpiricalMeasure

ALPHA_TOL = 1e-8
CRITICAL_BAND = 1e-8

KIND_POWER = 0
KIND_EXPM1 = 1
KIND_PIECEWISE = 2
KIND_GENERIC = -1


@dataclass(frozen=True, eq=False)
class OrliczFunction:
    """An even convex function with ``M(0) = 0``.

    Parameters
    ----------
    func : callable
        Vectorised evaluation of ``M`` on ``[0, inf)``; evenness is imposed by
        evaluating at ``|x|``.
    name : str
        Human-readable label.
    superquadratic : bool
        Whether ``M(t) / t^2 -> inf``; required by the projection rates.
    domain_bound : float
        ``M`` is ``+inf`` for ``|x| > domain_bound``.
    kind, params : int, tuple
        Compact description used by the compiled samplers.
    """

    func: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    superquadratic: bool = False
    domain_bound: float = math.inf
    kind: int = KIND_GENERIC
    params: tuple = ()
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    spec: dict = field(default_factory=dict)

    def __call__(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        if math.isinf(self.domain_bound):
            out = self.func(ax)
        else:
            with np.errstate(all="ignore"):
                out = np.where(ax <= self.domain_bound, self.func(np.minimum(ax, self.domain_bound)), np.inf)
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def inv(self, y):
        """Inverse of ``M`` restricted to ``[0, domain_bound]``."""
        y = np.asarray(y, dtype=float)
        if self.inverse is not None:
            return self.inverse(y)
        return np.vectorize(self._inv_scalar, otypes=[float])(y)

    def _inv_scalar(self, y: float) -> float:
        if y <= 0:
            return 0.0
        hi = 1.0
        while float(self(hi)) < y:
            hi *= 2.0
            if hi > self.domain_bound:
                return self.domain_bound
        return brentq(lambda t: float(self(t)) - y, 0.0, hi, xtol=1e-15, rtol=1e-15)

    # ---------------------------------------------------------- constructors
    @classmethod
    def power(cls, p: float) -> "OrliczFunction":
        """``M(t) = |t|^p`` (superquadratic when ``p > 2``)."""
        p = float(p)
        if not p >= 1:
            raise DomainError("power Orlicz functions need p >= 1")
        return cls(
            func=lambda t: t**p,
            name=f"power(p={p:g})",
            superquadratic=p > 2,
            kind=KIND_POWER,
            params=(p,),
            inverse=lambda y: np.maximum(y, 0.0) ** (1.0 / p),
            spec={"type": "power", "p": p},
        )

    @classmethod
    def exp_minus_one(cls) -> "OrliczFunction":
        """``M(t) = exp(|t|) - 1 - |t|``."""
        return cls(
            func=lambda t: np.expm1(t) - t,
            name="exp_minus_one",
            superquadratic=True,
            kind=KIND_EXPM1,
            params=(),
            spec={"type": "named", "name": "exp_minus_one"},
        )

    @classmethod
    def piecewise_polynomial(cls, knots: Sequence[float], coeffs: Sequence[Sequence[float]]) -> "OrliczFunction":
        """Piecewise polynomial in ``|t|``.

        ``knots = [0, k_1, ..., k_m]`` and ``coeffs[i]`` holds the ascending
        polynomial coefficients on ``[k_i, k_{i+1})`` (the last piece extends
        to infinity).  Continuity, ``M(0) = 0`` and convexity are checked on a
        grid.
        """
        knots_a = np.asarray(knots, dtype=float)
        if knots_a.ndim != 1 or knots_a.size != len(coeffs) or knots_a[0] != 0 or np.any(np.diff(knots_a) <= 0):
            raise DomainError("knots must start at 0, increase strictly and match the number of pieces")
        deg = max(len(c) for c in coeffs)
        table = np.zeros((len(coeffs), deg))
        for i, c in enumerate(coeffs):
            table[i, : len(c)] = c

        def func(t):
            t = np.asarray(t, dtype=float)
            idx = np.clip(np.searchsorted(knots_a, t, side="right") - 1, 0, len(knots_a) - 1)
            out = np.zeros_like(t)
            for j in range(deg - 1, -1, -1):
                out = out * t + table[idx, j]
            return out

        top = table[-1]
        nz = np.nonzero(top)[0]
        lead = nz[-1] if nz.size else 0
        m = cls(
            func=func,
            name="piecewise",
            superquadratic=bool(lead > 2 and top[lead] > 0),
            kind=KIND_PIECEWISE,
            params=(knots_a, table),
            spec={"type": "piecewise", "knots": knots_a.tolist(), "coeffs": [list(map(float, c)) for c in coeffs]},
        )
        m.validate()
        return m

    @classmethod
    def from_spec(cls, spec: dict) -> "OrliczFunction":
        """Build from a JSON-style description.

        Accepted forms: ``{"type": "power", "p": 2}``,
        ``{"type": "piecewise", "knots": [...], "coeffs": [[...], ...]}`` and
        ``{"type": "named", "name": "exp_minus_one"}``.
        """
        if not isinstance(spec, dict) or "type" not in spec:
            raise DomainError("Orlicz spec must be an object with a 'type' key")
        kind = spec["type"]
        extra = set(spec) - {"type", "p", "knots", "coeffs", "name"}
        if extra:
            raise DomainError(f"unknown Orlicz spec keys: {sorted(extra)}")
        if kind == "power":
            return cls.power(spec["p"])
        if kind == "piecewise":
            return cls.piecewise_polynomial(spec["knots"], spec["coeffs"])
        if kind == "named":
            if spec.get("name") == "exp_minus_one":
                return cls.exp_minus_one()
            raise DomainError(f"unknown named Orlicz function {spec.get('name')!r}")
        raise DomainError(f"unknown Orlicz spec type {kind!r}")

    def validate(self, upper: float = 10.0) -> None:
        """Spot-check ``M(0) = 0``, monotonicity and convexity on a grid."""
        top = min(upper, self.domain_bound)
        t = np.linspace(0.0, top, 2001)
        m = np.asarray(self.func(t), dtype=float)
        scale = max(1.0, float(np.max(np.abs(m))))
        if abs(m[0]) > 1e-12:
            raise DomainError("Orlicz function must vanish at 0")
        if np.any(np.diff(m) < -1e-12 * scale):
            raise DomainError("Orlicz function must be non-decreasing on [0, inf)")
        if np.any(np.diff(m, 2) < -1e-9 * scale):
            raise DomainError("Orlicz function must be convex")


# --------------------------------------------------------------- tilted laws
def _length_scale(M: OrliczFunction, alpha: float) -> float:
    """Point ``L`` where ``|alpha| M(L) = 1`` (capped by the domain bound)."""
    target = 1.0 / abs(alpha)
    L = float(M.inv(np.array([target]))[0])
    if not L > 0:
        L = 1.0
    return min(L, M.domain_bound)


def _tilted_integral(M: OrliczFunction, alpha: float, power: int, shift: float = 0.0) -> float:
    """``int_0^b (M(x) - shift)^power exp(alpha M(x)) dx`` by quadrature."""
    L = _length_scale(M, alpha)
    b = M.domain_bound

    def f(x: float) -> float:
        m = float(M.func(np.array([x]))[0])
        w = alpha * m
        if w < -745.0:
            return 0.0
        return (m - shift) ** power * math.exp(w)

    if math.isinf(b):
        return integrate(f, 0.0, L) + integrate(f, L, 8.0 * L) + integrate(f, 8.0 * L, math.inf)
    return integrate(f, 0.0, min(L, b)) + (integrate(f, L, b) if L < b else 0.0)


def _check_alpha(M: OrliczFunction, alpha: float) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise DomainError("alpha must be finite")
    if alpha >= 0 and math.isinf(M.domain_bound):
        raise DomainError("phi(alpha) is finite only for alpha < 0 when M is unbounded")
    return alpha


def phi(M: OrliczFunction, alpha: float) -> float:
    """Log-partition function ``phi(alpha) = log int exp(alpha M(x)) dx``."""
    alpha = _check_alpha(M, alpha)
    return math.log(2.0 * _tilted_integral(M, alpha, 0))


def phi_prime(M: OrliczFunction, alpha: float) -> float:
    """``phi'(alpha)``: the mean of ``M`` under the tilted law."""
    alpha = _check_alpha(M, alpha)
    return _tilted_integral(M, alpha, 1) / _tilted_integral(M, alpha, 0)


def phi_doubleprime(M: OrliczFunction, alpha: float) -> float:
    """``phi''(alpha)``: the variance of ``M`` under the tilted law."""
    alpha = _check_alpha(M, alpha)
    z = _tilted_integral(M, alpha, 0)
    mean = _tilted_integral(M, alpha, 1) / z
    return _tilted_integral(M, alpha, 2, shift=mean) / z


@dataclass(frozen=True)
class TiltSolution:
    """Solution of ``phi'(alpha) = R``."""

    alpha_star: float
    phi_at: float
    sigma2_star: float
    R: float
    residual: float

    @property
    def log_volume_limit(self) -> float:
        return self.phi_at - self.alpha_star * self.R


def max_achievable_radius(M: OrliczFunction) -> float:
    """Supremum of ``phi'(alpha)`` over ``alpha < 0``."""
    if math.isinf(M.domain_bound):
        return math.inf
    b = M.domain_bound
    return integrate(lambda x: float(M.func(np.array([x]))[0]), 0.0, b) / b


def solve_alpha_star(M: OrliczFunction, R: float) -> TiltSolution:
    """Solve ``phi'(alpha) = R`` for ``alpha < 0``.

    Brackets in ``log|alpha|`` on a doubling schedule, then refines with
    Brent's method.  Raises :class:`DomainError` when ``R`` is outside the
    achievable range ``(0, sup phi')``.
    """
    R = float(R)
    rmax = max_achievable_radius(M)
    if not (R > 0 and R < rmax):
        raise DomainError(f"radius R={R} outside the achievable range (0, {rmax:g}) for {M.name}")

    def g(log_a: float) -> float:
        return phi_prime(M, -math.exp(log_a)) - R

    lo = hi = 0.0
    glo = ghi = g(0.0)
    steps = 0
    if ghi > 0:
        while ghi > 0:
            lo, glo = hi, ghi
            hi += math.log(2.0)
            ghi = g(hi)
            steps += 1
            if steps > 400:
                raise DomainError(f"could not bracket alpha* for R={R}")
        a, b = lo, hi
    else:
        while glo < 0:
            hi, ghi = lo, glo
            lo -= math.log(2.0)
            glo = g(lo)
            steps += 1
            if steps > 400:
                raise DomainError(f"could not bracket alpha* for R={R}")
        a, b = lo, hi
    log_a = brentq(g, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    alpha = -math.exp(log_a)
    resid = abs(phi_prime(M, alpha) - R)
    if resid > ALPHA_TOL * max(1.0, R):
        raise NumericalFlagError(f"alpha* residual {resid:.3g} exceeds tolerance", flag="alpha_residual")
    return TiltSolution(
        alpha_star=alpha,
        phi_at=phi(M, alpha),
        sigma2_star=phi_doubleprime(M, alpha),
        R=R,
        residual=resid,
    )


def gibbs_measure(M: OrliczFunction, alpha: float) -> Density1D:
    """The tilted law ``exp(alpha M(x) - phi(alpha)) dx`` as a :class:`Density1D`."""
    alpha = _check_alpha(M, alpha)
    log_z = phi(M, alpha)
    sampler = None
    cdf = None
    if M.kind == KIND_POWER:
        p = M.params[0]
        a = abs(alpha)

        def sampler(rng, size):
            u = rng.standard_gamma(1.0 / p, size)
            sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
            return sign * (u / a) ** (1.0 / p)

        def cdf(x):
            x = np.asarray(x, dtype=float)
            return 0.5 + 0.5 * np.sign(x) * gammainc(1.0 / p, a * np.abs(x) ** p)

    b = M.domain_bound
    return Density1D(
        log_pdf=lambda x: alpha * M(x) - log_z,
        support=(-b, b),
        breakpoints=(0.0,),
        cdf_func=cdf,
        sampler=sampler,
        name=f"gibbs({M.name}, alpha={alpha:.6g})",
        normalization_checked=True,
        mode=0.0,
    )


# ---------------------------------------------------------------- volumes
def log_volume_limit(M: OrliczFunction, R: float) -> float:
    """``lim (1/d) log vol(B_M^d(dR)) = phi(alpha*) - alpha* R``."""
    return solve_alpha_star(M, R).log_volume_limit


@dataclass(frozen=True)
class VolumeEstimate:
    d: int
    log_volume: float
    log_volume_limit: float
    tilt: TiltSolution

    @property
    def volume(self) -> float:
        return math.exp(self.log_volume) if self.log_volume < 709 else math.inf


def volume_estimate(M: OrliczFunction, R: float, d: int) -> VolumeEstimate:
    """Sharp volume asymptotics for the Orlicz ball, computed in log space.

    ``vol ~ exp(d [phi(alpha*) - alpha* R]) / (|alpha*| sqrt(2 pi d sigma*^2))``.
    """
    if int(d) != d or d < 1:
        raise DomainError("dimension must be a positive integer")
    tilt = solve_alpha_star(M, R)
    lv = (
        d * tilt.log_volume_limit
        - math.log(abs(tilt.alpha_star))
        - 0.5 * math.log(2.0 * math.pi * d * tilt.sigma2_star)
    )
    return VolumeEstimate(d=int(d), log_volume=lv, log_volume_limit=tilt.log_volume_limit, tilt=tilt)


def power_ball_log_volume(d: int, p: float, R: float) -> float:
    """Exact ``log vol {x in R^d : sum |x_i|^p <= d R}``."""
    return (d / p) * math.log(d * R) + d * (math.log(2.0) + gammaln(1.0 + 1.0 / p)) - gammaln(1.0 + d / p)


def power_log_volume_limit(p: float, R: float) -> float:
    """Closed form ``(1/p) log(e p R) + log(2 Gamma(1 + 1/p))`` for ``M = |t|^p``."""
    return math.log(math.e * p * R) / p + math.log(2.0) + gammaln(1.0 + 1.0 / p)


# ------------------------------------------------------------ intersections
@dataclass(frozen=True)
class DichotomyResult:
    """Outcome of the intersection test; ``label`` is zero, one, critical or inconclusive."""

    label: str
    theta: float
    R2: float
    second_moment: float


def intersection_ratio_limit(
    M1: OrliczFunction, R1: float, M2: OrliczFunction, R2: float, band: float = CRITICAL_BAND
) -> DichotomyResult:
    """Limit of ``vol(B1 cap B2) / vol(B1)`` as the dimension grows.

    ``theta = E[M2]`` under the Gibbs tilt of ``B1``.  The ratio tends to 1
    when ``theta < R2`` and to 0 when ``theta > R2``; values within
    ``band * max(1, R2)`` of ``R2`` are reported as critical.
    """
    tilt = solve_alpha_star(M1, R1)
    mu = gibbs_measure(M1, tilt.alpha_star)
    with np.errstate(all="ignore"):
        theta = mu.expect(lambda x: float(M2(x)))
        second = mu.expect(lambda x: float(M2(x)) ** 2)
    if not np.isfinite(theta) or not np.isfinite(second):
        return DichotomyResult("inconclusive", theta, float(R2), second)
    if abs(theta - R2) <= band * max(1.0, abs(R2)):
        label = "critical"
    elif theta < R2:
        label = "one"
    else:
        label = "zero"
    return DichotomyResult(label, theta, float(R2), second)


# --------------------------------------------------------------- Sanov rates
def moment_map(mu: Density1D | EmpiricalMeasure, M: OrliczFunction) -> float:
    """``int M dmu``."""
    if isinstance(mu, EmpiricalMeasure):
        return mu.expect(M)
    return mu.expect(lambda x: float(M(x)))


def orlicz_sanov_rate(mu: Density1D | EmpiricalMeasure, M: OrliczFunction, R: float) -> float:
    """Rate of the empirical measure of a uniform point in the Orlicz ball.

    ``H(mu | mu_{alpha*}) + alpha* (int M dmu - R)`` when ``int M dmu <= R``,
    ``+inf`` otherwise.
    """
    from .ratecalc import relative_entropy

    m = moment_map(mu, M)
    if m > R * (1.0 + 1e-12):
        return math.inf
    tilt = solve_alpha_star(M, R)
    h = relative_entropy(mu, gibbs_measure(M, tilt.alpha_star))
    return h + tilt.alpha_star * (m - R)
