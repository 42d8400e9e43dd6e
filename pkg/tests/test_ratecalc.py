import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize
from scipy.stats import beta

from ldlab.distributions import moment_Mpq, p_gaussian_density, ullman_law
from ldlab.measures import EmpiricalMeasure, gaussian_density, uniform_density
from ldlab.ratecalc import (
    CATALOG_NAMES,
    CumulantFunction,
    RateFunction,
    catalog_rate,
    combine_independent_product,
    contract_rate,
    cumulant_lq_lp,
    gaussian_cumulant,
    legendre_1d,
    legendre_nd,
    log_energy,
    lq_conjugate,
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
    relative_entropy,
    relative_entropy_smoothed,
)
from ldlab.errors import DomainError


def rademacher_rate(x):
    return 0.5 * (1 + x) * math.log1p(x) + 0.5 * (1 - x) * math.log1p(-x)


# ------------------------------------------------------------- Legendre
def test_legendre_quadratic_self_dual():
    assert legendre_1d(gaussian_cumulant(), 1.5) == pytest.approx(1.125, abs=1e-10)


@pytest.mark.parametrize("a", [-2.0, 0.3, 1.0, 3.0])
def test_gaussian_sum_rate(a):
    assert legendre_1d(gaussian_cumulant(), a) == pytest.approx(a * a / 2, abs=1e-10)


def test_rademacher_rate():
    val = legendre_1d(rademacher_cumulant(), 0.5)
    assert val == pytest.approx(rademacher_rate(0.5), abs=1e-9)
    assert val == pytest.approx(0.13081, abs=5e-6)


def test_legendre_unbounded_flag():
    # the Rademacher mean never exceeds 1
    val, info = legendre_1d(rademacher_cumulant(), 1.5, full_output=True)
    assert val == math.inf
    assert info.flag == "unbounded"


def test_legendre_nd_self_dual():
    f = CumulantFunction(lambda t: 0.5 * float(np.dot(t, t)), dim=2)
    assert legendre_nd(f, [1.0, 1.0]) == pytest.approx(1.0, abs=1e-9)


def test_legendre_nd_outside_domain_flag():
    f = CumulantFunction(lambda t: 0.5 * float(np.dot(t, t)), dim=2, effective_domain=lambda t: t[0] > 5)
    val, info = legendre_nd(f, [1.0, 1.0], full_output=True)
    assert val == math.inf and info.flag == "outside-domain"


@pytest.mark.parametrize("p,q", [(2.0, 1.0), (3.0, 1.0), (4.0, 2.0)])
def test_joint_transform_vanishes_at_mean(p, q):
    # gradient of the cumulant at 0 by quadrature
    dens = p_gaussian_density(p)
    x = 2 * dens.expect(lambda s: s**q, a=0.0)
    y = 2 * dens.expect(lambda s: s**p, a=0.0)
    assert lq_conjugate(p, q, x, y) == pytest.approx(0.0, abs=1e-8)


def test_cumulant_lq_lp_special_values():
    assert cumulant_lq_lp(0.0, 0.0, 3.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert cumulant_lq_lp(0.0, 1.0 / 3.0, 3.0, 1.0) == math.inf
    vals = [cumulant_lq_lp(0.0, 1.0 / 3.0 - eps, 3.0, 1.0) for eps in (1e-2, 1e-4, 1e-6)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 4.0


@pytest.mark.parametrize("p,q", [(2.0, 1.0), (3.0, 1.5)])
def test_cumulant_gradient_is_moment(p, q):
    h = 1e-5
    grad = (cumulant_lq_lp(h, 0.0, p, q) - cumulant_lq_lp(-h, 0.0, p, q)) / (2 * h)
    assert grad == pytest.approx(moment_Mpq(p, q), abs=1e-6)


CUMULANTS = [
    (gaussian_cumulant(), (-3.0, 3.0)),
    (gaussian_cumulant(2.5), (-3.0, 3.0)),
    (rademacher_cumulant(), (-0.95, 0.95)),
    (CumulantFunction(lambda t: -math.log1p(-t) - t if t < 1 else math.inf,
                      effective_domain=lambda t: t[0] < 1, name="centred-exponential"), (-0.9, 3.0)),
]


@pytest.mark.parametrize("cum,xr", CUMULANTS, ids=[c.name for c, _ in CUMULANTS])
def test_fenchel_young(cum, xr):
    rng = np.random.default_rng(1)
    for _ in range(100):
        x = rng.uniform(*xr)
        t = rng.uniform(-2.0, 0.95)
        assert legendre_1d(cum, x) + cum(t) >= t * x - 1e-10


def test_biconjugation_of_convex_grid_function():
    # a convex piecewise-quadratic function and its transform on a grid
    f = CumulantFunction(lambda t: t * t / 2 if t < 1 else t - 0.5 + (t - 1) ** 4)
    ts = np.linspace(-1.5, 1.5, 31)
    fstar_grid = np.linspace(-8, 8, 3201)
    fstar = np.array([legendre_1d(f, x) for x in fstar_grid])
    for t in ts[3:-3]:
        bi = float(np.max(t * fstar_grid - fstar))
        assert bi == pytest.approx(f(t), abs=1e-5)


# ----------------------------------------------------- entropy / energy
def test_relative_entropy_identity_and_gaussian():
    g = gaussian_density()
    assert relative_entropy(g, g) == pytest.approx(0.0, abs=1e-12)
    assert relative_entropy(gaussian_density(2.0), g) == pytest.approx((2 - 1 - math.log(2)) / 2, abs=1e-9)
    assert (2 - 1 - math.log(2)) / 2 == pytest.approx(0.15343, abs=5e-6)


def test_relative_entropy_laplace_two_routes():
    lap = p_gaussian_density(1.0)
    val = relative_entropy(lap, gaussian_density())
    x = np.linspace(-40, 40, 800001)
    f = 0.5 * np.exp(-np.abs(x))
    riemann = float(np.sum(f * (np.log(f) + 0.5 * x * x + 0.5 * math.log(2 * math.pi))) * (x[1] - x[0]))
    assert val >= 0
    assert val == pytest.approx(riemann, abs=1e-5)


def test_relative_entropy_conventions():
    emp = EmpiricalMeasure.from_samples([0.0, 1.0])
    assert relative_entropy(emp, gaussian_density()) == math.inf
    assert relative_entropy(uniform_density(-2, 2), uniform_density(-1, 1)) == math.inf
    same = EmpiricalMeasure.from_samples([0.0, 1.0])
    assert relative_entropy(emp, same) == 0.0


def test_relative_entropy_smoothed_is_an_estimate(rng):
    x = rng.normal(0, math.sqrt(2.0), 20000)
    est = relative_entropy_smoothed(x, gaussian_density())
    assert est == pytest.approx((2 - 1 - math.log(2)) / 2, abs=0.02)


def test_log_energy_semicircle_and_uniform():
    assert log_energy(ullman_law(2.0).density) == pytest.approx(-0.25, abs=1e-4)
    assert log_energy(uniform_density(-1, 1)) == pytest.approx(math.log(2) - 1.5, abs=1e-6)


def test_log_energy_uniform_against_dblquad():
    val, _ = integrate.dblquad(lambda y, x: math.log(abs(x - y)) / 4 if x != y else 0.0, -1, 1, -1, 1,
                               epsabs=1e-10)
    assert log_energy(uniform_density(-1, 1)) == pytest.approx(val, abs=1e-6)


def test_log_energy_point_mass():
    assert log_energy(EmpiricalMeasure.from_samples([0.3])) == -math.inf
    assert log_energy(EmpiricalMeasure.from_samples([0.3, 0.3])) == -math.inf


def test_log_energy_empirical_semicircle_converges(rng):
    law = ullman_law(2.0)
    atoms = law.density.sample(rng, 2000)
    assert log_energy(EmpiricalMeasure.from_samples(atoms)) == pytest.approx(-0.25, abs=0.02)


# ----------------------------------------------------------- contraction
def test_contract_identity():
    base = RateFunction(lambda x: x * x / 2)
    assert contract_rate(base, lambda x: x, 1.0, (-3.0, 3.0)) == pytest.approx(0.5, abs=1e-12)


def test_contract_empty_fiber():
    base = RateFunction(lambda x: x * x / 2)
    val, info = contract_rate(base, lambda x: x * x, -1.0, (-3.0, 3.0), full_output=True)
    assert val == math.inf and info.flag == "empty-fiber"


def test_contract_boundary_flag():
    base = RateFunction(lambda x: x * x / 2)
    _, info = contract_rate(base, lambda x: x, 2.0, (-1.0, 2.0), full_output=True)
    assert info.flag == "boundary"


@pytest.mark.parametrize("p,q", [(1.0, 2.0), (1.5, 3.0)])
def test_lqnorm_low_as_contraction(p, q):
    m = moment_Mpq(p, q)
    base = RateFunction(lambda a: rate_stretched_cramer(a, 1.0 / p, p / q, m) if a > m else 0.0)
    for z in np.linspace(m ** (1 / q) * 1.05, m ** (1 / q) * 2.0, 7):
        val = contract_rate(base, lambda a: a ** (1.0 / q), z, (m, 20 * m + 10))
        assert val == pytest.approx(rate_lqnorm_low(z, p, q), rel=1e-10)


def test_combine_trivial_minimiser():
    r2 = RateFunction(lambda v: 3 * (v - 0.7) ** 2, (0.0, math.inf), minimizer=0.7)
    assert combine_independent_product(catalog_rate("uniform_power"), r2, 0.7) == pytest.approx(0.0, abs=1e-10)


def test_combine_pinned_factor_gives_log2():
    c = 1e4
    r2 = RateFunction(lambda v: c * (v - 1.0) ** 2, (0.0, math.inf), minimizer=1.0)
    val = combine_independent_product(catalog_rate("uniform_power"), r2, 0.5)
    ref = optimize.minimize_scalar(lambda z2: math.log(2 * z2) + c * (z2 - 1) ** 2, bounds=(0.5, 1.5),
                                   method="bounded", options={"xatol": 1e-12}).fun
    assert val == pytest.approx(ref, abs=1e-9)
    assert val == pytest.approx(math.log(2), abs=1e-4)


def test_combine_at_zero_and_negative():
    r2 = RateFunction(lambda v: (v - 1.0) ** 2, (0.0, math.inf), minimizer=1.0)
    assert combine_independent_product(catalog_rate("uniform_power"), r2, 0.0) == pytest.approx(1.0)
    assert combine_independent_product(catalog_rate("uniform_power"), r2, -1.0) == math.inf


# ----------------------------------------------------------- catalogue
def test_uniform_power_values():
    assert rate_uniform_power(1.0) == 0.0
    assert rate_uniform_power(1 / math.e) == pytest.approx(1.0, abs=1e-15)
    assert rate_uniform_power(1.2) == math.inf and rate_uniform_power(0.0) == math.inf


@given(st.integers(1, 200), st.floats(0.1, 1.0))
def test_uniform_power_exact_cdf_identity(n, z):
    # U^{1/n} has the Beta(n, 1) law, so (1/n) log P[U^{1/n} <= z] = log z for every n
    assert beta(n, 1).logcdf(z) / n == pytest.approx(-rate_uniform_power(z), rel=1e-9, abs=1e-12)


def test_gkr_lowp_values():
    assert rate_gkr_lowp(0.0, 1.0) == 0.0
    assert rate_gkr_lowp(1.0, 1.0) == pytest.approx(1.5, abs=1e-15)
    with pytest.raises(DomainError):
        rate_gkr_lowp(1.0, 2.5)


def test_gkr_highp_values():
    assert rate_gkr_highp(0.0, 4.0) == 0.0
    assert rate_gkr_highp(0.5, 2.0) == pytest.approx(-0.5 * math.log(0.75), abs=1e-14)
    assert rate_gkr_highp(0.5, 2.0) == pytest.approx(0.14384, abs=5e-6)


def test_gkr_highp_p_near_two_is_continuous():
    assert rate_gkr_highp(0.5, 2.001) == pytest.approx(rate_gkr_highp(0.5, 2.0), abs=2e-3)


def test_gkr_highp_routes_agree():
    reduced = rate_gkr_highp(0.5, 4.0)
    fiber = rate_gkr_highp(0.5, 4.0, method="fiber")
    assert fiber == pytest.approx(reduced, abs=1e-6)


def test_lqnorm_low_values():
    m = moment_Mpq(1.0, 2.0)
    assert rate_lqnorm_low(math.sqrt(m), 1.0, 2.0) == 0.0
    assert rate_lqnorm_low(2.0, 1.0, 2.0) == pytest.approx(math.sqrt(2.0), abs=1e-14)
    assert rate_lqnorm_low(1.0, 1.0, 2.0) == math.inf


@given(st.floats(1.42, 10.0))
def test_lqnorm_low_general_formula(z):
    assert rate_lqnorm_low(z, 1.0, 2.0) == pytest.approx((z * z - moment_Mpq(1.0, 2.0)) ** 0.5, abs=1e-10)


def test_lqnorm_high_zero_and_out_of_domain():
    p, q = 3.0, 1.0
    m = moment_Mpq(p, q) ** (1 / q) / moment_Mpq(p, p) ** (1 / p)
    assert rate_lqnorm_high(m, p, q) == pytest.approx(0.0, abs=1e-8)
    assert rate_lqnorm_high(0.0, p, q) == math.inf
    assert rate_lqnorm_high(-1.0, p, q) == math.inf


def test_lqnorm_high_zero_matches_simulation(rng):
    # the almost-sure limit of n^{1/p-1/q} ||Z||_q for Z uniform in the lp ball
    from ldlab.sampling import sample_lp_ball

    p, q, n = 3.0, 1.0, 20000
    z = sample_lp_ball(n, p, rng, size=20)
    stat = n ** (1 / p - 1 / q) * np.sum(np.abs(z), axis=1)
    m = moment_Mpq(p, q) ** (1 / q)
    assert float(np.mean(stat)) == pytest.approx(m, rel=2e-3)
    zs = np.linspace(0.95 * m, 1.05 * m, 5)
    vals = [rate_lqnorm_high(v, p, q) for v in zs]
    assert int(np.argmin(vals)) == 2


def test_lqnorm_ratio_routes_agree():
    reduced = rate_lqnorm_ratio(0.75, 3.0, 1.0)
    fiber = rate_lqnorm_ratio(0.75, 3.0, 1.0, method="fiber")
    assert fiber == pytest.approx(reduced, abs=1e-6)


def test_stretched_cramer_values():
    assert rate_stretched_cramer(0.5, 2.0, 0.5, 0.5) == 0.0
    assert rate_stretched_cramer(1.5, 2.0, 0.5, 0.5) == pytest.approx(2.0)
    assert rate_stretched_cramer(4.0, 1.0, 0.5, 0.0) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        rate_stretched_cramer(1.0, 1.0, 1.5, 0.0)


def test_mdp_values():
    assert mdp_sigma2(2.0, 1.0) == pytest.approx(math.pi / 2 - 1.5, abs=1e-14)
    assert mdp_rate(0.0, 0.3) == 0.0
    with pytest.raises(DomainError):
        mdp_rate(1.0, 0.0)
    with pytest.raises(DomainError):
        mdp_sigma2(2.0, 2.0)


CATALOG_CASES = [
    ("uniform_power", {}),
    ("gkr_lowp", {"p": 1.5}),
    ("gkr_highp", {"p": 2.0}),
    ("lqnorm_low", {"p": 1.0, "q": 2.0}),
    ("stretched_cramer", {"c": 1.0, "r": 0.5, "m": 1.0}),
    ("mdp", {"p": 2.0, "q": 1.0}),
]


@pytest.mark.parametrize("name,params", CATALOG_CASES, ids=[c[0] for c in CATALOG_CASES])
def test_catalog_zero_at_minimiser_and_nonnegative(name, params):
    r = catalog_rate(name, **params)
    assert r(r.minimizer) == pytest.approx(0.0, abs=1e-12)
    lo, hi = r.domain_hint
    lo = r.minimizer - 3 if not math.isfinite(lo) else lo
    hi = r.minimizer + 3 if not math.isfinite(hi) else hi
    vals = r(np.linspace(lo, hi, 1000))
    assert np.all(vals >= 0)


def test_catalog_lqnorm_high_minimiser():
    r = catalog_rate("lqnorm_high", p=3.0, q=1.0)
    m_ratio = moment_Mpq(3.0, 1.0) / moment_Mpq(3.0, 3.0) ** (1 / 3)
    assert r(m_ratio) == pytest.approx(0.0, abs=1e-8)
    vals = r(np.linspace(0.6, 1.0, 4))
    assert np.all(vals >= -1e-12)


def test_catalog_names_and_unknown():
    assert set(CATALOG_NAMES) >= {c[0] for c in CATALOG_CASES}
    with pytest.raises(DomainError):
        catalog_rate("nope")
