import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gamma

from conftest import within_se
from ldlab.distributions import (
    abs_power_density,
    gibbs_density,
    moment_Mpq,
    p_gaussian_density,
    p_gaussian_pdf,
    p_gaussian_sample,
    ullman_density,
    ullman_law,
    ullman_support_bp,
)
from ldlab.errors import DomainError, RangeError
from ldlab.measures import Density1D
from ldlab.orlicz import OrliczFunction, phi_prime


# ----------------------------------------------------------- p-Gaussians
def test_p_gaussian_pdf_at_zero():
    assert p_gaussian_pdf(0.0, 2.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-14)
    assert p_gaussian_pdf(0.0, 1.0) == pytest.approx(0.5, rel=1e-14)


def test_p_gaussian_pdf_matches_normalised_kernel():
    z, _ = integrate.quad(lambda x: math.exp(-abs(x) ** 4 / 4.0), -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13)
    assert p_gaussian_pdf(1.0, 4.0) == pytest.approx(math.exp(-0.25) / z, rel=1e-10)


def test_p_gaussian_pdf_rejects_non_finite():
    with pytest.raises(DomainError):
        p_gaussian_pdf(np.nan, 2.0)
    with pytest.raises(DomainError):
        p_gaussian_pdf(np.inf, 2.0)


def test_p_gaussian_below_one_warns():
    with pytest.warns(UserWarning):
        p_gaussian_pdf(0.3, 0.5)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, 6.0])
def test_p_gaussian_density_normalised(p):
    assert p_gaussian_density(p).mass() == pytest.approx(1.0, abs=1e-10)


def test_p_gaussian_sampler_mean_and_second_moments(rng):
    y = p_gaussian_sample(1.0, rng, 10**6)
    assert within_se(y.mean(), 0.0, y.std() / 1e3)
    m2 = y**2
    assert within_se(m2.mean(), 2.0, m2.std() / 1e3)
    g = p_gaussian_sample(2.0, rng, 10**6) ** 2
    assert within_se(g.mean(), 1.0, g.std() / 1e3)


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("q", [1.0, 2.0, 3.0])
def test_sample_moments_match_closed_form(rng, p, q):
    a = np.abs(p_gaussian_sample(p, rng, 10**6)) ** q
    assert within_se(a.mean(), moment_Mpq(p, q), a.std() / 1e3)


def test_moment_special_values():
    assert moment_Mpq(2.0, 2.0) == pytest.approx(1.0, rel=1e-14)
    assert moment_Mpq(1.0, 2.0) == pytest.approx(2.0, rel=1e-14)


@given(st.floats(0.8, 8.0), st.floats(0.2, 8.0))
def test_moment_matches_quadrature(p, q):
    d = p_gaussian_density(p)
    val = 2.0 * d.expect(lambda x: x**q, a=0.0)
    assert moment_Mpq(p, q) == pytest.approx(val, rel=1e-8)


def test_moment_overflow_raises():
    with pytest.raises(RangeError):
        moment_Mpq(0.5, 400.0)


def test_abs_power_density_laplace_square():
    d = abs_power_density(1.0, 2.0)
    assert d.mass() == pytest.approx(1.0, abs=1e-9)
    assert d.mean() == pytest.approx(2.0, rel=1e-9)
    x = np.array([0.5, 4.0, 30.0])
    assert np.allclose(d.sf(x), np.exp(-np.sqrt(x)), rtol=1e-12)


# --------------------------------------------------------------- Ullman
def test_ullman_values_at_zero():
    assert ullman_density(0.0, 2.0) == pytest.approx(2.0 / math.pi, rel=1e-14)
    assert ullman_density(0.0, math.inf) == pytest.approx(1.0 / math.pi, rel=1e-14)
    # generic branch against the closed form (p/pi) / (p - 1)
    assert ullman_density(0.0, 3.0) == pytest.approx(1.5 / math.pi, rel=1e-12)


@pytest.mark.parametrize("p", [1.0, 1.5, 4.0])
def test_ullman_normalisation(p):
    law = ullman_law(p)
    assert law.unit.mass() == pytest.approx(1.0, abs=1e-5)


def test_ullman_generic_branch_agrees_with_closed_forms():
    xs = np.linspace(-0.95, 0.95, 11)
    for p, ref in ((2.0, lambda x: 2 / math.pi * np.sqrt(1 - x * x)),):
        from ldlab.distributions import _ullman_scalar

        # nudge p off the closed-form branch; the density is continuous in p
        near = np.array([_ullman_scalar(float(x), p * (1 + 1e-9)) for x in xs])
        assert np.allclose(near, ref(xs), atol=1e-7)


def test_ullman_endpoints():
    assert ullman_support_bp(1.0) == pytest.approx(math.pi, rel=1e-14)
    assert ullman_support_bp(2.0) == pytest.approx(2.0, rel=1e-14)
    assert ullman_support_bp(math.inf) == 1.0


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, 10.0])
def test_scaled_ullman_unit_moment(p):
    law = ullman_law(p)
    assert law.density.moment(p) == pytest.approx(1.0, abs=1e-4)


def test_scaled_semicircle_pointwise():
    xs = np.linspace(-1.99, 1.99, 41)
    law = ullman_law(2.0)
    assert np.allclose(law.density.pdf(xs), np.sqrt(4 - xs**2) / (2 * math.pi), atol=1e-8)


def test_ullman_p1_scaled_closed_form():
    xs = np.array([-3.0, -1.0, 0.3, 2.5])
    law = ullman_law(1.0)
    ref = np.log((math.pi + np.sqrt(math.pi**2 - xs**2)) / np.abs(xs)) / math.pi**2
    assert np.allclose(law.density.pdf(xs), ref, rtol=1e-12)


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_ullman_closed_form_cdfs_match_quadrature(p):
    law = ullman_law(p)
    tabulated = Density1D(law.unit.log_pdf, support=(-1.0, 1.0), breakpoints=(0.0,), mode=0.0)
    xs = np.linspace(-0.9, 0.9, 7)
    assert np.allclose(law.unit.cdf(xs), tabulated.cdf(xs), atol=1e-6)


def test_ullman_singular_variant_is_folded_law():
    law = ullman_law(2.0)
    assert law.singular_variant.mass() == pytest.approx(1.0, abs=1e-8)
    assert law.singular_variant.pdf(np.array([1.0]))[0] == pytest.approx(2 * law.density.pdf(np.array([1.0]))[0])


# ---------------------------------------------------------------- Gibbs
def test_gibbs_gaussian_and_laplace():
    xs = np.linspace(-4, 4, 17)
    g = gibbs_density(OrliczFunction.power(2.0), -0.5)
    assert np.allclose(g.pdf(xs), np.exp(-xs**2 / 2) / math.sqrt(2 * math.pi), rtol=1e-10)
    lap = gibbs_density(OrliczFunction.power(1.0), -1.0)
    assert np.allclose(lap.pdf(xs), np.exp(-np.abs(xs)) / 2, rtol=1e-10)


def test_gibbs_rejects_non_integrable():
    with pytest.raises(DomainError):
        gibbs_density(OrliczFunction.power(2.0), 0.5)


def test_gibbs_sample_variance(rng):
    g = gibbs_density(OrliczFunction.power(2.0), -0.5)
    x = g.sample(rng, 10**6)
    x2 = x**2
    assert within_se(x2.mean(), 1.0, x2.std() / 1e3)


@pytest.mark.parametrize("alpha", [-0.3, -1.0, -2.5])
def test_gibbs_mean_of_M_is_phi_prime(alpha):
    M = OrliczFunction.exp_minus_one()
    g = gibbs_density(M, alpha)
    assert g.expect(lambda x: float(M(x))) == pytest.approx(phi_prime(M, alpha), rel=1e-6)


def test_gibbs_density_normalised_and_outside_support():
    g = gibbs_density(OrliczFunction.power(3.0), -0.7)
    assert g.mass() == pytest.approx(1.0, abs=1e-6)
    bounded = Density1D(lambda x: np.zeros_like(x), support=(0.0, 1.0))
    assert bounded.logpdf(np.array([-0.5, 1.5])).tolist() == [-np.inf, -np.inf]


def test_gamma_identity_for_normalisation():
    # 2 p^{1/p} Gamma(1 + 1/p) is the normalising constant
    p = 3.0
    assert p_gaussian_pdf(0.0, p) == pytest.approx(1.0 / (2 * p ** (1 / p) * gamma(1 + 1 / p)), rel=1e-14)
