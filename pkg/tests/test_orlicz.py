import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gammaln

from conftest import within_se
from ldlab.errors import DomainError
from ldlab.measures import EmpiricalMeasure, gaussian_density
from ldlab.orlicz import (
    OrliczFunction,
    gibbs_measure,
    intersection_ratio_limit,
    log_volume_limit,
    moment_map,
    orlicz_sanov_rate,
    phi,
    phi_doubleprime,
    phi_prime,
    power_ball_log_volume,
    power_log_volume_limit,
    solve_alpha_star,
    volume_estimate,
)


def power_phi(p, alpha):
    return math.log(2) + gammaln(1 + 1 / p) - math.log(-alpha) / p


FUNCTIONS = [
    OrliczFunction.power(1.0),
    OrliczFunction.power(2.0),
    OrliczFunction.power(3.5),
    OrliczFunction.exp_minus_one(),
    OrliczFunction.piecewise_polynomial([0.0, 1.0], [[0.0, 0.0, 1.0], [-1.0, 2.0]]),
]


# ---------------------------------------------------- Orlicz functions
@pytest.mark.parametrize("M", FUNCTIONS, ids=[m.name for m in FUNCTIONS])
def test_orlicz_function_invariants(M):
    t = np.linspace(-5, 5, 401)
    v = M(t)
    assert M(0.0) == 0.0
    assert np.array_equal(v, M(-t))
    assert np.all(v[t != 0] > 0)
    mid = M(0.5 * (t[:-1] + t[1:]))
    assert np.all(mid <= 0.5 * (v[:-1] + v[1:]) + 1e-10)


def test_orlicz_function_validation_and_spec():
    with pytest.raises(DomainError):
        OrliczFunction.piecewise_polynomial([0.0, 1.0], [[0.0, 2.0], [1.0, 0.5]])  # concave kink
    with pytest.raises(DomainError):
        OrliczFunction.power(0.5)
    assert OrliczFunction.from_spec({"type": "power", "p": 3}).params == (3.0,)
    assert OrliczFunction.from_spec({"type": "named", "name": "exp_minus_one"}).superquadratic
    with pytest.raises(DomainError):
        OrliczFunction.from_spec({"type": "power", "p": 2, "bogus": 1})


def test_inverse():
    M = OrliczFunction.exp_minus_one()
    y = np.array([0.1, 1.0, 7.0])
    assert np.allclose(M(M.inv(y)), y, rtol=1e-12)


# ------------------------------------------------------------- phi
def test_phi_gaussian():
    assert phi(OrliczFunction.power(2.0), -0.5) == pytest.approx(math.log(math.sqrt(2 * math.pi)), abs=1e-12)
    assert math.log(math.sqrt(2 * math.pi)) == pytest.approx(0.91894, abs=5e-6)


@given(st.floats(1.0, 6.0), st.floats(-5.0, -0.05))
def test_phi_power_closed_form(p, alpha):
    assert phi(OrliczFunction.power(p), alpha) == pytest.approx(power_phi(p, alpha), abs=1e-8)


@pytest.mark.parametrize("M", FUNCTIONS, ids=[m.name for m in FUNCTIONS])
@pytest.mark.parametrize("alpha", [-0.3, -1.0, -3.0])
def test_phi_derivatives_match_finite_differences(M, alpha):
    h = 1e-4 * abs(alpha)
    fd1 = (phi(M, alpha + h) - phi(M, alpha - h)) / (2 * h)
    fd2 = (phi_prime(M, alpha + h) - phi_prime(M, alpha - h)) / (2 * h)
    assert phi_prime(M, alpha) == pytest.approx(fd1, abs=1e-6)
    assert phi_doubleprime(M, alpha) == pytest.approx(fd2, rel=1e-5)
    assert phi_doubleprime(M, alpha) > 0


def test_phi_divergent():
    with pytest.raises(DomainError):
        phi(OrliczFunction.power(2.0), 0.1)


# ------------------------------------------------------------- tilts
def test_alpha_star_closed_forms():
    t = solve_alpha_star(OrliczFunction.power(2.0), 1.0)
    assert t.alpha_star == pytest.approx(-0.5, abs=1e-12)
    assert t.sigma2_star == pytest.approx(2.0, abs=1e-9)
    assert solve_alpha_star(OrliczFunction.power(1.0), 1.0).alpha_star == pytest.approx(-1.0, abs=1e-12)


@given(st.floats(1.0, 6.0), st.floats(0.05, 20.0))
def test_power_reduces_to_closed_forms(p, R):
    M = OrliczFunction.power(p)
    t = solve_alpha_star(M, R)
    a = -1 / (p * R)
    assert t.alpha_star == pytest.approx(a, rel=1e-7)
    assert t.phi_at == pytest.approx(power_phi(p, a), abs=1e-7)
    assert t.sigma2_star == pytest.approx(1 / (p * a * a), rel=1e-7)
    assert t.log_volume_limit == pytest.approx(power_log_volume_limit(p, R), abs=1e-7)


@pytest.mark.parametrize("M", FUNCTIONS, ids=[m.name for m in FUNCTIONS])
@pytest.mark.parametrize("R", [0.1, 1.0, 5.0])
def test_tilt_invariants(M, R):
    t = solve_alpha_star(M, R)
    assert t.alpha_star < 0
    assert abs(phi_prime(M, t.alpha_star) - R) <= 1e-8
    assert t.sigma2_star == pytest.approx(phi_doubleprime(M, t.alpha_star))
    assert t.sigma2_star > 0


def test_bounded_domain_range_error():
    M = OrliczFunction(func=lambda t: t * t, domain_bound=1.0, name="bounded")
    with pytest.raises(DomainError, match="achievable range"):
        solve_alpha_star(M, 0.5)
    t = solve_alpha_star(M, 0.2)
    assert abs(phi_prime(M, t.alpha_star) - 0.2) <= 1e-8


# ------------------------------------------------------------- volumes
def test_log_volume_limit_values():
    assert log_volume_limit(OrliczFunction.power(2.0), 1.0) == pytest.approx((1 + math.log(2 * math.pi)) / 2, abs=1e-10)
    assert log_volume_limit(OrliczFunction.power(1.0), 1.0) == pytest.approx(1 + math.log(2), abs=1e-10)


def test_exact_ball_volume_formula():
    d = 64
    exact = (d / 2) * math.log(d) + (d / 2) * math.log(math.pi) - gammaln(1 + d / 2)
    assert power_ball_log_volume(d, 2.0, 1.0) == pytest.approx(exact, abs=1e-10)


@pytest.mark.parametrize("d,tol", [(64, 0.1), (256, 0.03)])
def test_volume_estimate_euclidean(d, tol):
    est = volume_estimate(OrliczFunction.power(2.0), 1.0, d)
    ratio = math.exp(est.log_volume - power_ball_log_volume(d, 2.0, 1.0))
    assert abs(ratio - 1) < tol


def test_volume_estimate_high_dimension_consistency():
    est = volume_estimate(OrliczFunction.power(2.0), 1.0, 10**4)
    assert abs(est.log_volume / est.d - est.log_volume_limit) < 2e-3
    assert est.volume == math.inf


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_volume_ratio_improves_monotonically(p):
    M = OrliczFunction.power(p)
    errs = [abs(math.exp(volume_estimate(M, 1.0, d).log_volume - power_ball_log_volume(d, p, 1.0)) - 1)
            for d in (16, 32, 64, 128, 256)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_volume_estimate_rejects_bad_dimension():
    with pytest.raises(DomainError):
        volume_estimate(OrliczFunction.power(2.0), 1.0, 0)


# ------------------------------------------------------- intersections
def test_dichotomy_labels():
    M1, M2 = OrliczFunction.power(2.0), OrliczFunction.power(1.0)
    one = intersection_ratio_limit(M1, 1.0, M2, 1.0)
    assert one.label == "one"
    assert one.theta == pytest.approx(math.sqrt(2 / math.pi), abs=1e-10)
    assert intersection_ratio_limit(M1, 1.0, M2, 0.5).label == "zero"
    assert intersection_ratio_limit(M1, 1.3, M1, 1.3).label == "critical"


def test_dichotomy_theta_monte_carlo(rng):
    M1, M2 = OrliczFunction.exp_minus_one(), OrliczFunction.power(1.5)
    res = intersection_ratio_limit(M1, 0.7, M2, 1.0)
    x = gibbs_measure(M1, solve_alpha_star(M1, 0.7).alpha_star).sample(rng, 200000)
    v = M2(x)
    assert within_se(v.mean(), res.theta, v.std() / math.sqrt(v.size))


# ------------------------------------------------------------- Sanov
def test_moment_map_values():
    M = OrliczFunction.power(2.0)
    assert moment_map(EmpiricalMeasure.from_samples([0.0]), M) == 0.0
    assert moment_map(gaussian_density(), M) == pytest.approx(1.0, abs=1e-10)
    E = OrliczFunction.exp_minus_one()
    t = solve_alpha_star(E, 0.8)
    assert moment_map(gibbs_measure(E, t.alpha_star), E) == pytest.approx(0.8, abs=1e-6)


def test_sanov_rate_zero_and_infinite():
    M = OrliczFunction.power(2.0)
    assert orlicz_sanov_rate(gaussian_density(), M, 1.0) == pytest.approx(0.0, abs=1e-9)
    assert orlicz_sanov_rate(gaussian_density(1.5), M, 1.0) == math.inf


@pytest.mark.parametrize("s2", [0.3, 0.6, 0.9])
def test_sanov_rate_gaussian_two_routes(s2):
    M = OrliczFunction.power(2.0)
    val = orlicz_sanov_rate(gaussian_density(s2), M, 1.0)

    def integrand(x):
        lf = -x * x / (2 * s2) - 0.5 * math.log(2 * math.pi * s2)
        lg = -x * x / 2 - 0.5 * math.log(2 * math.pi)
        return math.exp(lf) * (lf - lg)

    h, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-13)
    assert val == pytest.approx(h - 0.5 * (s2 - 1), abs=1e-6)
    assert val == pytest.approx(-0.5 * math.log(s2), abs=1e-6)


def test_sanov_rate_positive_off_minimiser():
    from ldlab.measures import Density1D

    M = OrliczFunction.exp_minus_one()
    R = 0.8
    t = solve_alpha_star(M, R)
    base = gibbs_measure(M, t.alpha_star)
    checked = 0
    for eps in np.linspace(-0.5, 0.5, 21):
        if eps == 0:
            continue
        # tilt by eps x^2 and renormalise; keep only feasible perturbations
        log_f = lambda x, e=eps: base.logpdf(x) + e * x * x
        z = Density1D(log_f, support=base.support, breakpoints=(0.0,), mode=0.0).mass()
        mu = Density1D(lambda x, e=eps, z=z: base.logpdf(x) + e * x * x - math.log(z), support=base.support,
                       breakpoints=(0.0,), mode=0.0)
        if moment_map(mu, M) > R:
            mu = Density1D(lambda x, e=eps, z=z: base.logpdf(x) - abs(e) * x * x, support=base.support,
                           breakpoints=(0.0,), mode=0.0)
            mu = Density1D(lambda x, f=mu.logpdf, c=math.log(mu.mass()): f(x) - c, support=base.support,
                           breakpoints=(0.0,), mode=0.0)
        assert orlicz_sanov_rate(mu, M, R) > 0
        checked += 1
    assert checked == 20
