import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cirlab import cir
from cirlab.distributions import PointMass
from cirlab.errors import DomainError
from cirlab.tv import tv_cir

PARAMS = [cir.CIRParams(1.0, 1.0, 0.1), cir.CIRParams(2.0, 0.5, 0.3), cir.CIRParams(0.5, 2.0, 1.0)]


@pytest.mark.parametrize("eps", [math.sqrt(2.0), 2.0, 0.0, -0.1])
def test_feller_gate(eps):
    with pytest.raises(DomainError):
        cir.CIRParams(1.0, 1.0, eps)


def test_bad_a_b():
    with pytest.raises(DomainError):
        cir.CIRParams(0.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        cir.CIRParams(1.0, -1.0, 0.1)


def test_derived_constants():
    d = cir.CIRParams(2.0, 3.0, 0.5).derived
    assert d.q_plus_1 == pytest.approx(24.0)
    assert d.c_inf == pytest.approx(16.0)
    assert d.m_eps == pytest.approx(1.5)
    assert d.sigma_eps == pytest.approx(math.sqrt(6.0) / 4 * 0.5)


def test_c_eps():
    p = cir.CIRParams(1.0, 1.0, 1.0)
    assert cir.c_eps(p, math.log(2.0)) == pytest.approx(4.0, rel=1e-15)
    assert cir.c_eps(p, 60.0) == pytest.approx(p.derived.c_inf, rel=1e-15)
    ts = np.linspace(0.1, 5, 30)
    assert np.all(np.diff([cir.c_eps(p, t) for t in ts]) < 0)


def test_transition_law_mgf_matches_closed_form():
    p, x, t = cir.CIRParams(1.0, 1.0, 0.5), 2.0, 1.0
    law = cir.transition_law(p, x, t)
    c = mp.mpf(2) / mp.mpf(0.25) / (1 - mp.e ** -1)
    for z in (-1.0, 0.5, 2.0):
        # E exp(zX) as a Poisson mixture of Gamma MGFs, summed in high precision
        lam, k, s = mp.mpf(law.noncentrality), mp.mpf(law.dof), mp.mpf(law.scale)
        ref = (1 - 2 * s * z) ** (-k / 2) * mp.e ** (lam * s * z / (1 - 2 * s * z))
        direct = (1 - z / c) ** (-2 * p.b / p.eps**2) * mp.e ** (z * c * x * mp.e ** (-p.a * t) / (c - z))
        assert float(ref) == pytest.approx(float(direct), rel=1e-12)
        assert cir.mgf(p, x, t, z) == pytest.approx(float(direct), rel=1e-10)


def test_transition_law_cases():
    p = cir.CIRParams(1.0, 1.0, 0.3)
    assert cir.transition_law(p, 0.0, 1.0).noncentrality == 0.0
    assert cir.transition_law(p, 2.0, 0.0) == PointMass(2.0)
    law = cir.transition_law(p, 2.0, 0.8)
    assert law.mean == pytest.approx(cir.mean_at(p, 2.0, 0.8), rel=1e-14)
    assert law.var == pytest.approx(cir.var_at(p, 2.0, 0.8), rel=1e-13)


def test_stationary_law():
    g = cir.stationary_law(cir.CIRParams(1.0, 1.0, 1.0))
    assert (g.shape, g.rate) == (2.0, 2.0)
    assert g.mean == 1.0
    p = cir.CIRParams(3.0, 2.0, 0.4)
    assert cir.stationary_law(p).mean == pytest.approx(p.b / p.a)


def test_converges_to_stationary():
    p = cir.CIRParams(1.0, 1.0, 0.1)
    assert tv_cir(p, 2.0, 40.0).value <= 1e-6


@pytest.mark.parametrize("k", range(3))
def test_charfn_is_mgf_continuation(k):
    p = PARAMS[k]
    x, t = (2.0, 0.1, 6.0)[k], (0.7, 1.5, 3.0)[k]
    z = np.linspace(-50, 50, 801)
    logmod, phase = cir.charfn_marginal(p, x, t, z)
    lm = cir.log_mgf(p, x, t, 1j * z)
    assert np.max(np.abs(logmod - lm.real)) <= 1e-10
    assert np.max(np.abs(np.angle(np.exp(1j * (phase - lm.imag))))) <= 1e-10
    assert cir.charfn_marginal(p, x, t, 0.0) == (0.0, 0.0)
    assert np.all(logmod <= cir.charfn_modulus_bound(p, t, z) + 1e-14)


def test_mgf_domain():
    p = cir.CIRParams(1.0, 1.0, 0.5)
    c = cir.c_eps(p, 1.0)
    with pytest.raises(DomainError):
        cir.log_mgf(p, 1.0, 1.0, c)
    with pytest.raises(DomainError):
        cir.normalized_mgf(p, 1.0, 1.0, cir.mgf_domain_limit(p, 1.0))


def test_normalized_mgf():
    p = cir.CIRParams(1.0, 1.0, 0.01)
    assert cir.normalized_mgf(p, 2.0, 3.0, 0.0) == 1.0
    # Gaussian limit at x = b/a, long times
    assert cir.normalized_mgf(p, 1.0, 100.0, 1.0) == pytest.approx(math.exp(0.5), rel=1e-2)


@pytest.mark.parametrize("p", PARAMS + [cir.CIRParams(1.0, 1.0, 0.003)])
def test_normalization_identity(p):
    s1, h1 = cir.normalization_map(p)
    s2, h2 = cir.normalization_map_moments(p)
    assert s1 == pytest.approx(s2, rel=4e-16)
    assert h1 == pytest.approx(h2, rel=4e-16)
    stat = cir.stationary_law(p)
    y = cir.normalize(p, [stat.mean, stat.mean + stat.sd])
    assert y == pytest.approx([0.0, 1.0], abs=1e-12)


def test_ergodic_monotone_grid():
    for p, x in zip(PARAMS, (2.0, 0.1, 6.0)):
        vals = [tv_cir(p, x, k / p.a).value for k in (1, 2, 4, 8, 16)]
        assert np.all(np.diff(vals) <= 1e-8)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_samplers_deterministic(seed):
    p = PARAMS[0]
    a = cir.sample_exact(p, 2.0, 1.0, 50, np.random.default_rng(seed))
    b = cir.sample_exact(p, 2.0, 1.0, 50, np.random.default_rng(seed))
    assert np.array_equal(a, b)
    c = cir.sample_euler(p, 2.0, 1.0, 0.05, 20, np.random.default_rng(seed))
    d = cir.sample_euler(p, 2.0, 1.0, 0.05, 20, np.random.default_rng(seed))
    assert np.array_equal(c, d)


def test_exact_sampler_mean():
    p, x, t = PARAMS[1], 0.1, 1.5
    xs = cir.sample_exact(p, x, t, 1_000_000, np.random.default_rng(9))
    assert abs(xs.mean() - cir.mean_at(p, x, t)) <= 5 * math.sqrt(cir.var_at(p, x, t) / xs.size)
    assert np.all(cir.sample_exact(cir.CIRParams(1.0, 1e-3, 0.04), 0.0, 1.0, 1000, np.random.default_rng(1)) >= 0)


def test_euler_matches_exact_mean():
    p = cir.CIRParams(1.0, 1.0, 0.3)
    rng = np.random.default_rng(4)
    e = cir.sample_euler(p, 2.0, 1.0, 1e-3, 20_000, rng)
    x = cir.sample_exact(p, 2.0, 1.0, 20_000, rng)
    assert abs(e.mean() - x.mean()) <= 5 * math.sqrt(e.var() / e.size + x.var() / x.size)


def test_euler_fluid_limit_and_step():
    p = cir.CIRParams(1.0, 1.0, 1e-8)
    # Euler bias is O(dt): about 2.7e-4 at dt = 1e-3, so the fluid check uses dt = 1e-4
    end = cir.sample_euler(p, 3.0, 2.0, 1e-4, 5, np.random.default_rng(0))
    assert np.allclose(end, cir.mean_at(p, 3.0, 2.0), atol=1e-4)
    with pytest.raises(DomainError):
        cir.sample_euler(p, 3.0, 1.0, 2.0, 5, np.random.default_rng(0))
