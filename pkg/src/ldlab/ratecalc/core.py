"""Containers for rate functions and cumulant generating functions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class RateFunction:
    """An extended-real, non-negative, lower semicontinuous function.

    Parameters
    ----------
    eval : callable
        Scalar evaluation ``x -> [0, inf]``.
    domain_hint : tuple of float
        Interval containing the effective domain ``{eval < inf}``; searches
        over the argument (contraction, products) stay inside it.
    speed : str
        Symbolic speed of the LDP, e.g. ``"n"``, ``"n^(p/q)"`` or ``"n^2"``.
    minimizer : float, optional
        Point where the rate vanishes.
    """

    eval: Callable[[float], float]
    domain_hint: tuple[float, float] = (-math.inf, math.inf)
    speed: str = "n"
    minimizer: Optional[float] = None
    name: str = "rate"

    def __call__(self, x):
        if np.ndim(x) == 0:
            return float(self.eval(float(x)))
        return np.vectorize(lambda v: float(self.eval(float(v))), otypes=[float])(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class CumulantFunction:
    """A convex log-moment generating function in 1 to 3 variables.

    ``eval`` receives a float (``dim == 1``) or a 1-d array and returns an
    extended real.  ``effective_domain`` is an optional predicate describing
    the open region where ``eval`` is finite; outside it the function reports
    ``+inf`` without calling ``eval``.  ``scale`` sets the size of initial
    search steps.
    """

    eval: Callable
    dim: int = 1
    effective_domain: Optional[Callable[[np.ndarray], bool]] = None
    scale: float = 1.0
    name: str = "cumulant"

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("cumulant functions are supported in dimension 1 to 3")

    def __call__(self, t) -> float:
        if self.dim == 1:
            t = float(np.asarray(t, dtype=float).reshape(-1)[0]) if np.ndim(t) else float(t)
            if self.effective_domain is not None and not self.effective_domain(np.array([t])):
                return math.inf
        else:
            t = np.asarray(t, dtype=float).reshape(self.dim)
            if self.effective_domain is not None and not self.effective_domain(t):
                return math.inf
        with np.errstate(all="ignore"):
            val = float(self.eval(t))
        return math.inf if math.isnan(val) else val
