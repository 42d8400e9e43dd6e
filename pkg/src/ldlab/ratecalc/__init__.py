"""Rate-function engine: Legendre transforms, entropies, composition and a catalogue."""
from .catalog import (
    CATALOG_NAMES,
    catalog_rate,
    cramer_rate,
    cumulant_lq_lp,
    gaussian_cumulant,
    gkr_cumulant,
    gkr_highp_rate,
    lq_conjugate,
    lq_lp_cumulant,
    lqnorm_ratio_rate,
    mdp_rate,
    mdp_sigma2,
    rademacher_cumulant,
    rate_gkr_highp,
    rate_gkr_lowp,
    rate_lqnorm_high,
    rate_lqnorm_low,
    rate_lqnorm_ratio,
    rate_stretched_cramer,
    rate_uniform_power,
    uniform_power_rate,
)
from .compose import ContractionResult, combine_independent_product, contract_rate
from .core import CumulantFunction, RateFunction
from .functionals import log_energy, relative_entropy, relative_entropy_smoothed
from .legendre import LegendreResult, conjugate_rate, legendre_1d, legendre_nd

__all__ = [name for name in dir() if not name.startswith("_")]
