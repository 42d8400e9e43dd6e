"""Probability measures on the real line: densities and empirical measures."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._quad import integrate
from .errors import DomainError, NumericalFlagError

NORMALIZATION_TOL = 1e-6
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Density1D:
    """A probability density on an interval of the real line.

    Parameters
    ----------
    log_pdf : callable
        Vectorised log-density.  Values outside ``support`` are forced to
        ``-inf`` by :meth:`logpdf`.
    support : tuple of float
        Closed interval carrying the mass (endpoints may be infinite).
    breakpoints : tuple of float
        Interior points where the density has a kink or an integrable
        singularity; quadrature panels are cut there.
    cdf_func, sf_func : callable, optional
        Closed-form distribution and survival functions, used instead of
        cumulative quadrature when provided.
    sampler : callable, optional
        ``sampler(rng, size)`` drawing exact samples.
    """

    log_pdf: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] = (-np.inf, np.inf)
    breakpoints: tuple[float, ...] = ()
    cdf_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sf_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    name: str = "density"
    normalization_checked: bool = False
    mode: float = field(default=np.nan)

    # ------------------------------------------------------------------ values
    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        with np.errstate(all="ignore"):
            out = np.where(inside, self.log_pdf(np.where(inside, x, 0.5 * (_fin(lo) + _fin(hi)))), -np.inf)
        return out if out.ndim else float(out)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def _scalar_pdf(self, x: float) -> float:
        return float(np.exp(self.logpdf(np.array([x]))[0]))

    def _points(self) -> list[float]:
        pts = list(self.breakpoints)
        lo, hi = self.support
        if lo == -np.inf and hi == np.inf:
            pts.append(0.0 if not np.isfinite(self.mode) else self.mode)
        return pts

    # -------------------------------------------------------------- integrals
    def expect(self, g: Callable[[float], float], a: Optional[float] = None, b: Optional[float] = None) -> float:
        """Integral of ``g * pdf`` over ``[a, b]`` (default: the support)."""
        lo, hi = self.support
        a = lo if a is None else max(a, lo)
        b = hi if b is None else min(b, hi)

        def integrand(x: float) -> float:
            fx = self._scalar_pdf(x)
            return 0.0 if fx == 0.0 else g(x) * fx

        return integrate(integrand, a, b, self._points())

    def mass(self) -> float:
        return self.expect(lambda x: 1.0)

    def checked(self, tol: float = NORMALIZATION_TOL) -> "Density1D":
        """Return a copy flagged as normalised after verifying the total mass."""
        total = self.mass()
        if abs(total - 1.0) > tol:
            raise NumericalFlagError(
                f"density {self.name!r} integrates to {total:.10g}, not 1", flag="normalization"
            )
        return replace(self, normalization_checked=True)

    def moment(self, q: float, absolute: bool = True) -> float:
        if absolute:
            return self.expect(lambda x: abs(x) ** q)
        return self.expect(lambda x: x**q)

    def mean(self) -> float:
        return self.expect(lambda x: x)

    def variance(self) -> float:
        m = self.mean()
        return self.expect(lambda x: (x - m) ** 2)

    def entropy(self) -> float:
        """Differential entropy ``-\\int f log f``."""

        def integrand(x: float) -> float:
            lf = float(self.logpdf(np.array([x]))[0])
            return 0.0 if lf == -np.inf else -lf * np.exp(lf)

        lo, hi = self.support
        return integrate(integrand, lo, hi, self._points())

    # ---------------------------------------------------------- distribution
    @cached_property
    def _cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self._effective_range()
        base = np.linspace(0.0, 1.0, 1025)
        ends = np.geomspace(1e-9, 1e-3, 20)
        unit = np.unique(np.concatenate([base, ends, 1.0 - ends]))
        grid = lo + (hi - lo) * unit
        for b in self.breakpoints:
            if lo < b < hi:
                width = (hi - lo) * np.geomspace(1e-9, 1e-3, 20)
                grid = np.concatenate([grid, b - width, b + width, [b]])
        grid = np.unique(grid)
        left = 0.0
        if self.support[0] < lo:
            left = integrate(self._scalar_pdf, self.support[0], lo)
        cells = np.array(
            [integrate(self._scalar_pdf, a, b) for a, b in zip(grid[:-1], grid[1:])]
        )
        cum = left + np.concatenate([[0.0], np.cumsum(cells)])
        total = cum[-1] + (integrate(self._scalar_pdf, hi, self.support[1]) if self.support[1] > hi else 0.0)
        return grid, cum / total

    def _effective_range(self) -> tuple[float, float]:
        lo, hi = self.support
        if np.isfinite(lo) and np.isfinite(hi):
            return lo, hi
        center = self.mode if np.isfinite(self.mode) else (0.0 if not np.isfinite(lo) else lo)
        ref = float(self.logpdf(np.array([center]))[0])
        if not np.isfinite(lo):
            step = 1.0
            lo = center - step
            while float(self.logpdf(np.array([lo]))[0]) > ref - 40.0:
                step *= 1.5
                lo = center - step
        if not np.isfinite(hi):
            step = 1.0
            hi = center + step
            while float(self.logpdf(np.array([hi]))[0]) > ref - 40.0:
                step *= 1.5
                hi = center + step
        return lo, hi

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.cdf_func is not None:
            return self.cdf_func(x)
        grid, cum = self._cdf_table
        interp = PchipInterpolator(grid, cum, extrapolate=False)
        out = interp(np.clip(x, grid[0], grid[-1]))
        out = np.where(x < grid[0], 0.0, np.where(x > grid[-1], 1.0, out))
        return np.clip(out, 0.0, 1.0)

    def sf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.sf_func is not None:
            return self.sf_func(x)
        if self.cdf_func is not None:
            return 1.0 - self.cdf_func(x)
        return np.array([self.expect(lambda t: 1.0, a=float(v)) for v in np.atleast_1d(x)]).reshape(x.shape)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw samples: exact sampler if provided, else numerical inversion."""
        if self.sampler is not None:
            return np.asarray(self.sampler(rng, size), dtype=float)
        return self._inverse_sampler(rng, size)

    def _inverse_sampler(self, rng: np.random.Generator, size: int) -> np.ndarray:
        from scipy.stats.sampling import NumericalInversePolynomial

        dens = self

        class _Dist:
            def pdf(self, x):
                return dens._scalar_pdf(x)

        lo, hi = self.support
        center = self.mode if np.isfinite(self.mode) else None
        try:
            gen = NumericalInversePolynomial(
                _Dist(), center=center, domain=(lo, hi), u_resolution=1e-12, random_state=rng
            )
            return gen.rvs(size)
        except Exception:
            grid, cum = self._cdf_table
            keep = np.concatenate([[True], np.diff(cum) > 0])
            u = rng.random(size)
            return np.interp(u, cum[keep], grid[keep])


def _fin(v: float) -> float:
    return 0.0 if not np.isfinite(v) else v


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """A finitely supported probability measure ``sum_i w_i delta_{x_i}``."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape != weights.shape or atoms.size == 0:
            raise DomainError("atoms and weights must be non-empty arrays of equal length")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise DomainError("weights must be non-negative and sum to 1")
        if not np.all(np.isfinite(atoms)):
            raise DomainError("atoms must be finite")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_samples(cls, x, weights=None) -> "EmpiricalMeasure":
        x = np.asarray(x, dtype=float).ravel()
        if weights is None:
            w = np.full(x.size, 1.0 / x.size)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            w = w / w.sum()
        return cls(x, w)

    @property
    def size(self) -> int:
        return self.atoms.size

    def expect(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, g(self.atoms)))

    def moment(self, q: float, absolute: bool = True) -> float:
        x = np.abs(self.atoms) if absolute else self.atoms
        return float(np.dot(self.weights, x**q))

    def mean(self) -> float:
        return float(np.dot(self.weights, self.atoms))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot(self.weights, (self.atoms - m) ** 2))

    def cdf(self, x) -> np.ndarray:
        order = np.argsort(self.atoms, kind="stable")
        xs, cw = self.atoms[order], np.cumsum(self.weights[order])
        idx = np.searchsorted(xs, np.asarray(x, dtype=float), side="right")
        return np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)


Measure = Density1D | EmpiricalMeasure


def gaussian_density(sigma2: float = 1.0, mean: float = 0.0) -> Density1D:
    """Normal density with closed-form cdf and sampler."""
    from scipy.stats import norm

    if sigma2 <= 0:
        raise DomainError("variance must be positive")
    s = float(np.sqrt(sigma2))
    return Density1D(
        log_pdf=lambda x: -0.5 * ((x - mean) / s) ** 2 - np.log(s * np.sqrt(2 * np.pi)),
        cdf_func=lambda x: norm.cdf(x, loc=mean, scale=s),
        sf_func=lambda x: norm.sf(x, loc=mean, scale=s),
        sampler=lambda rng, size: rng.normal(mean, s, size),
        name=f"N({mean:g},{sigma2:g})",
        normalization_checked=True,
        mode=mean,
    )


def uniform_density(a: float, b: float) -> Density1D:
    if not b > a:
        raise DomainError("need a < b")
    return Density1D(
        log_pdf=lambda x: np.full_like(np.asarray(x, dtype=float), -np.log(b - a)),
        support=(a, b),
        cdf_func=lambda x: np.clip((np.asarray(x) - a) / (b - a), 0.0, 1.0),
        sampler=lambda rng, size: rng.uniform(a, b, size),
        name=f"U[{a:g},{b:g}]",
        normalization_checked=True,
        mode=0.5 * (a + b),
    )
