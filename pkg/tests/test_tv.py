import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cirlab import cir
from cirlab.distributions import AffineLaw, GammaDist, GaussianDist, PointMass, tv_gaussian_shift
from cirlab.errors import DegenerateInputError, DomainError, TailError
from cirlab.tv import (
    CharFn,
    DistanceResult,
    FourierGrid,
    auto_grid,
    l2_fourier_distance,
    tv_cir,
    tv_density_l1,
    tv_fourier,
    tv_with_atom,
)
from cirlab.validate import random_cir_cases


def test_density_route_examples():
    g = GaussianDist(0.3, 1.2)
    assert tv_density_l1(g, g).value == pytest.approx(0.0, abs=1e-10)
    assert tv_density_l1(GaussianDist(1.0, 1.0), GaussianDist(0.0, 1.0)).value == pytest.approx(tv_gaussian_shift(1.0), abs=1e-8)
    a, b = GammaDist(2.0, 1.0), GammaDist(2.0, 2.0)
    v = tv_density_l1(a, b).value
    assert 0 < v < 1
    assert tv_density_l1(b, a).value == pytest.approx(v, abs=1e-10)
    # Gamma(2, 1) vs Gamma(2, 2): densities cross once at y = ln 4, closed form from the Gamma(2) cdf
    y = math.log(4.0)

    def F(rate):
        return 1 - math.exp(-rate * y) * (1 + rate * y)

    assert v == pytest.approx(F(2.0) - F(1.0), abs=1e-10)


def test_fourier_route_examples():
    g = GaussianDist(0.0, 1.0)
    assert tv_fourier(g, g).value == pytest.approx(0.0, abs=1e-12)
    res = tv_fourier(GaussianDist(0.0, 1.0), GaussianDist(1.0, 1.0))
    assert res.method == "fourier-l1"
    assert res.value == pytest.approx(tv_gaussian_shift(1.0), abs=1e-8)
    assert res.extras["bound_respected"]


def test_fourier_refuses_non_integrable_charfn():
    with pytest.raises(TailError):
        tv_fourier(GammaDist(0.4, 1.0), GammaDist(0.45, 1.0))


def test_fourier_refuses_oversized_grid():
    # |phi| ~ |z|^-3: the tail tolerance would need more than 2^20 points
    with pytest.raises(TailError):
        tv_fourier(GammaDist(3.0, 1.0), GammaDist(4.0, 1.5))


def test_parseval_l2_against_closed_form():
    def l2(m1, s1, m2, s2):
        cross = math.exp(-0.5 * (m1 - m2) ** 2 / (s1**2 + s2**2)) / math.sqrt(2 * math.pi * (s1**2 + s2**2))
        return 1 / (2 * math.sqrt(math.pi) * s1) + 1 / (2 * math.sqrt(math.pi) * s2) - 2 * cross

    for m1, s1, m2, s2 in ((0.0, 1.0, 0.5, 1.2), (-1.0, 0.7, 1.0, 2.0)):
        res = l2_fourier_distance(GaussianDist(m1, s1), GaussianDist(m2, s2))
        assert res.method == "parseval-l2"
        assert res.value == pytest.approx(l2(m1, s1, m2, s2), abs=1e-10)
    assert l2_fourier_distance(GaussianDist(), GaussianDist()).value == 0.0


def test_atoms():
    assert tv_with_atom(PointMass(1.0), GammaDist(2.0, 2.0)).value == 1.0
    assert tv_with_atom(PointMass(0.0), GaussianDist()).value == 1.0
    assert tv_with_atom(PointMass(2.0), PointMass(2.0)).value == 0.0
    with pytest.raises(DegenerateInputError):
        tv_density_l1(PointMass(0.0), GaussianDist())
    with pytest.raises(DegenerateInputError):
        CharFn.from_law(PointMass(0.0))


def test_tv_cir_limits():
    p = cir.CIRParams(1.0, 1.0, 0.1)
    assert tv_cir(p, 2.0, 0.0).value == 1.0
    assert tv_cir(p, 2.0, 40.0).value <= 1e-6
    with pytest.raises(DomainError):
        tv_cir(p, 2.0, -1.0)
    with pytest.raises(DomainError):
        tv_cir(p, 2.0, 1.0, route="bogus")


def test_disjoint_windows():
    res = tv_density_l1(GaussianDist(0.0, 1.0), GaussianDist(100.0, 1.0))
    assert res.value == 1.0
    assert res.err_estimate < 1e-12


PAIRS = [
    (GaussianDist(0.0, 1.0), GaussianDist(0.7, 1.3), True),
    (GammaDist(3.0, 1.0), GammaDist(4.0, 1.5), False),
    (GammaDist(12.0, 2.0), GammaDist(14.0, 3.0), True),
]


@pytest.mark.parametrize("A,B,fourier", PAIRS)
def test_symmetry_and_range(A, B, fourier):
    routes = [tv_density_l1] + ([tv_fourier] if fourier else [])
    for route in routes:
        ab, ba = route(A, B), route(B, A)
        assert abs(ab.value - ba.value) <= 1e-12
        assert 0.0 <= ab.value <= 1.0 + ab.err_estimate


@pytest.mark.parametrize("A,B,fourier", PAIRS)
@pytest.mark.parametrize("c", [0.5, 3.0])
@pytest.mark.parametrize("v", [-1.0, 2.0])
def test_affine_invariance(A, B, fourier, c, v):
    routes = [tv_density_l1] + ([tv_fourier] if fourier else [])
    for route in routes:
        r0 = route(A, B)
        r1 = route(AffineLaw(A, c, v), AffineLaw(B, c, v))
        assert abs(r1.value - r0.value) <= 2 * max(r0.err_estimate, r1.err_estimate)


def test_route_agreement_random_cir():
    for p, x, t in random_cir_cases():
        res = tv_cir(p, x, t, cross_check=True)
        four = tv_fourier(CharFn.from_cir(p, x, t), CharFn.from_law(cir.stationary_law(p)))
        assert res.extras["route_gap"] <= res.err_estimate + four.err_estimate
        assert res.extras["route_gap"] <= 1e-6
        assert res.extras["routes_agree"]


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(0.5, 2)), min_size=3, max_size=3))
@settings(max_examples=15, deadline=None)
def test_triangle_inequality(laws):
    A, B, C = (GaussianDist(m, s) for m, s in laws)
    ab, bc, ac = tv_density_l1(A, B), tv_density_l1(B, C), tv_density_l1(A, C)
    assert ac.value <= ab.value + bc.value + 3 * (ab.err_estimate + bc.err_estimate + ac.err_estimate)


def test_charfn_tail_bound_on_grids():
    p, x, t = cir.CIRParams(1.0, 1.0, 0.2), 2.0, 1.0
    A, B = CharFn.from_cir(p, x, t), CharFn.from_law(cir.stationary_law(p))
    g = auto_grid(A, B)
    for L in (g.freq_cutoff, 3 * g.freq_cutoff):
        z = np.linspace(0, L, 2001)
        assert np.all(A.log_charfn(z)[0] <= A.log_bound(z) + 1e-12)
    res = tv_fourier(A, B)
    assert res.extras["tail_A"] <= res.extras["tail_bound_A"] * (1 + 1e-8)


def test_grid_and_result_validation():
    with pytest.raises(ValueError):
        FourierGrid(300, 1.0)
    with pytest.raises(ValueError):
        FourierGrid(256, 0.0)
    g = FourierGrid(256, 10.0)
    assert g.spatial_step == pytest.approx(math.pi / 10)
    assert g.doubled().n_points == 512
    with pytest.raises(ValueError):
        DistanceResult(0.1, "made-up", 0.0)
    with pytest.raises(ValueError):
        DistanceResult(0.1, "closed-form", -1.0)
