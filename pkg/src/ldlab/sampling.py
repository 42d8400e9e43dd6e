"""Samplers for lp balls, Orlicz balls and Haar frames."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .distributions import p_gaussian_sample
from .errors import AdvisoryError, DomainError
from .kernels import orlicz_coordinate_steps
from .measures import EmpiricalMeasure
from .orlicz import OrliczFunction, gibbs_measure, solve_alpha_star

ACCEPTANCE_FLOOR = 1e-4
ORTHO_TOL = 1e-10


def _size_tuple(size) -> tuple:
    if size is None:
        return ()
    return (int(size),)


# ------------------------------------------------------------------ lp balls
def sample_lp_ball(n: int, p: float, rng: np.random.Generator, size: Optional[int] = None,
                   mode: str = "uniform") -> np.ndarray:
    """Uniform (or cone-measure) sample of the unit ``l_p^n`` ball.

    Uses ``U^{1/n} Y / ||Y||_p`` with iid p-Gaussian ``Y`` and an independent
    uniform ``U``; ``mode="cone"`` drops the radial factor.  ``p = inf``
    samples the cube coordinatewise; its cone measure is the normalised
    surface measure (uniform facet, uniform point on it).

    Returns an array of shape ``(size, n)`` (or ``(n,)`` if ``size`` is None).
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if mode not in ("uniform", "cone"):
        raise DomainError("mode must be 'uniform' or 'cone'")
    shape = _size_tuple(size) + (n,)
    if math.isinf(p):
        x = rng.uniform(-1.0, 1.0, shape)
        if mode == "cone":
            flat = x.reshape(-1, n)
            face = rng.integers(0, n, flat.shape[0])
            flat[np.arange(flat.shape[0]), face] = np.where(rng.random(flat.shape[0]) < 0.5, -1.0, 1.0)
            x = flat.reshape(shape)
        return x
    y = p_gaussian_sample(p, rng, shape)
    norm = np.sum(np.abs(y) ** p, axis=-1, keepdims=True) ** (1.0 / p)
    x = y / norm
    if mode == "uniform":
        u = rng.random(_size_tuple(size) + (1,))
        x = x * u ** (1.0 / n)
    return x


def sample_scaled_lp_ball(n: int, p: float, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Uniform sample of ``n^{1/p} B_p^n`` (the ball of volume of order one per coordinate)."""
    scale = 1.0 if math.isinf(p) else n ** (1.0 / p)
    return scale * sample_lp_ball(n, p, rng, size)


# -------------------------------------------------------------- Orlicz balls
def acceptance_rate_estimate(d: int, M: OrliczFunction, R: float) -> float:
    """Predicted acceptance of the tilted rejection sampler.

    The exact rate is ``vol(B) exp(-d [phi(alpha*) - alpha* R])``; its
    asymptotic form is ``1 / (|alpha*| sigma* sqrt(2 pi d))`` (capped at 1).
    """
    tilt = solve_alpha_star(M, R)
    return min(1.0, 1.0 / (abs(tilt.alpha_star) * math.sqrt(2.0 * math.pi * d * tilt.sigma2_star)))


@dataclass(frozen=True)
class OrliczSample:
    """Points of an Orlicz ball with sampler diagnostics."""

    points: np.ndarray
    method: str
    acceptance_rate: float
    proposals: int


def sample_uniform_orlicz_ball(
    d: int,
    M: OrliczFunction,
    R: float,
    rng: np.random.Generator,
    size: int,
    method: str = "rejection",
    burn_in: Optional[int] = None,
    chains: Optional[int] = None,
    thin: Optional[int] = None,
    full_output: bool = False,
):
    """Uniform points of ``{x in R^d : sum M(x_i) <= d R}``.

    ``method="rejection"`` proposes iid coordinates from the Gibbs tilt
    ``mu_{alpha*}`` and accepts with probability
    ``exp(|alpha*| (sum M(x_i) - d R))``; the result is exact.  When the
    predicted acceptance is below ``1e-4`` an :class:`AdvisoryError`
    recommends the Markov chain instead.

    ``method="hit_and_run"`` runs independent chains of coordinate-direction
    hit-and-run from the origin: each step redraws one random coordinate
    uniformly on its exact chord.  ``burn_in`` (default ``10 d``) and
    ``thin`` (default ``d``) count single-coordinate steps.
    """
    if int(d) != d or d < 1:
        raise DomainError("d must be a positive integer")
    budget = d * R
    if method == "rejection":
        est = acceptance_rate_estimate(d, M, R)
        if est < ACCEPTANCE_FLOOR:
            raise AdvisoryError(
                f"predicted rejection acceptance {est:.2e} is below {ACCEPTANCE_FLOOR:g}; use method='hit_and_run'"
            )
        tilt = solve_alpha_star(M, R)
        mu = gibbs_measure(M, tilt.alpha_star)
        a = abs(tilt.alpha_star)
        out = []
        have, proposed = 0, 0
        batch = int(min(max(64, 2.0 * size / est), 2_000_000 // d + 1))
        while have < size:
            z = mu.sample(rng, batch * d).reshape(batch, d)
            s = np.sum(M(z), axis=1)
            u = rng.random(batch)
            with np.errstate(over="ignore"):
                keep = (s <= budget) & (u < np.exp(a * (np.minimum(s, budget) - budget)))
            out.append(z[keep])
            have += int(keep.sum())
            proposed += batch
        pts = np.concatenate(out)[:size]
        res = OrliczSample(pts, "rejection", have / proposed, proposed)
    elif method == "hit_and_run":
        burn = 10 * d if burn_in is None else int(burn_in)
        thin = d if thin is None else int(thin)
        n_chains = size if chains is None else int(chains)
        per_chain = math.ceil(size / n_chains)
        x = np.zeros((n_chains, d))
        draws = []
        step_plan = [burn] + [thin] * (per_chain - 1)
        for steps in step_plan:
            coords = rng.integers(0, d, (n_chains, steps))
            u = rng.random((n_chains, steps))
            orlicz_coordinate_steps(x, budget, M, coords, u)
            draws.append(x.copy())
        pts = np.stack(draws, axis=1).reshape(-1, d)[:size]
        res = OrliczSample(pts, "hit_and_run", 1.0, n_chains * (burn + thin * (per_chain - 1)))
    else:
        raise DomainError("method must be 'rejection' or 'hit_and_run'")
    return res if full_output else res.points


# ------------------------------------------------------------- Haar frames
@dataclass(frozen=True, eq=False)
class StiefelFrame:
    """An ``n x k`` matrix with orthonormal columns."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        k = A.shape[1]
        err = np.max(np.abs(A.T @ A - np.eye(k)))
        if err > ORTHO_TOL:
            raise DomainError(f"columns are not orthonormal (max error {err:.2e})")
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]


def sample_haar_stiefel(n: int, k: int, rng: np.random.Generator) -> StiefelFrame:
    """Haar-distributed ``n x k`` frame via QR of a Gaussian matrix.

    The signs of ``diag(R)`` are folded into ``Q`` so the law is exactly
    Haar rather than biased by the QR sign convention.
    """
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= n")
    g = rng.standard_normal((n, k))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return StiefelFrame(q * signs[None, :])


def project_empirical(frame: StiefelFrame | np.ndarray, x: np.ndarray) -> tuple[np.ndarray, EmpiricalMeasure]:
    """Project ``x`` onto the frame: returns ``A^T x`` and its empirical measure."""
    A = frame.A if isinstance(frame, StiefelFrame) else np.asarray(frame)
    y = A.T @ np.asarray(x, dtype=float)
    return y, EmpiricalMeasure.from_samples(y)


def write_samples_csv(path: str | Path, points: np.ndarray, prefix: str = "x") -> Path:
    """Dump sample rows to CSV with a header ``x0, x1, ...``."""
    path = Path(path)
    pts = np.atleast_2d(points)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{prefix}{i}" for i in range(pts.shape[1])])
        for row in pts:
            w.writerow([repr(float(v)) for v in row])
    return path
