"""Numerical large deviations for high-dimensional geometry.

Subpackages and modules:

``distributions``  p-generalised Gaussians, moments, Ullman laws
``ratecalc``       Legendre transforms, contraction, entropy and energy functionals, rate catalogue
``sampling``       lp balls, Orlicz balls, Haar frames
``orlicz``         Gibbs tilts, volume asymptotics, intersection dichotomy
``spectral``       eigenvalue gases, Schatten-ball spectra, spectral rates
``projections``    rates for random projections and thin-shell functions
``verify``         FFT tails, importance sampling, slope fits, experiments
``cli``            command-line interface
"""
from ._accel import backend_name
from .errors import AdvisoryError, DomainError, LdlabError, NumericalFlagError, RangeError

__version__ = "0.1.0"

__all__ = [
    "AdvisoryError",
    "DomainError",
    "LdlabError",
    "NumericalFlagError",
    "RangeError",
    "backend_name",
    "__version__",
]
