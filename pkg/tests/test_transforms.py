import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bplab.errors import DomainError
from bplab.geometry import Ball, LpBall, PerturbedBall
from bplab.harmonics import gegenbauer_table
from bplab.quadrature import build_sphere_quadrature, sphere_area
from bplab.transforms import (
    INCONCLUSIVE,
    NOT_POSITIVE_DEFINITE,
    POSITIVE_DEFINITE,
    ft_multiplier,
    funk_lambda,
    funk_transform_direct,
    funk_transform_spectral,
    multiplier_table,
    parseval_check,
    pd_crossover,
    pd_test,
    positive_kernel_weights,
    spherical_parseval_sides,
)


def test_funk_eigenvalue_examples():
    assert funk_lambda(3, 0) == pytest.approx(2 * math.pi, rel=1e-14)
    assert funk_lambda(3, 2) == pytest.approx(-math.pi, rel=1e-14)
    assert funk_lambda(4, 0) == pytest.approx(4 * math.pi, rel=1e-14)
    assert funk_lambda(3, 3) == 0.0


def test_ft_multiplier_examples():
    assert ft_multiplier(3, 0) == pytest.approx(4 * math.pi, rel=1e-14)
    assert ft_multiplier(3, 2) == pytest.approx(-8 * math.pi, rel=1e-14)
    assert ft_multiplier(3, 1) == 0.0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(3, 12), half_m=st.integers(0, 40))
def test_inversion_identity(n, half_m):
    m = 2 * half_m
    value = ft_multiplier(n, m) * math.pi * funk_lambda(n, m)
    assert value == pytest.approx((2 * math.pi) ** n, rel=1e-10)


def test_multiplier_table_and_alternating_signs():
    table = multiplier_table(5, 12)
    for m in range(0, 13, 2):
        assert math.copysign(1, table.ft_mu[m]) == (-1) ** (m // 2)
        assert table.funk_lambda[m] == funk_lambda(5, m)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_spectral_matches_direct_for_band_limited(n):
    quad = build_sphere_quadrature(n, 10)
    axis = np.ones(n) / math.sqrt(n)

    def f(v):
        t = np.clip(v @ axis, -1, 1)
        P = gegenbauer_table(n, 6, t)
        return 1.0 + 0.5 * P[2] - 0.3 * P[6]

    spectral = funk_transform_spectral(f, 6, quad)
    rng = np.random.default_rng(n)
    for _ in range(5):
        xi = rng.standard_normal(n)
        xi /= np.linalg.norm(xi)
        assert spectral(xi[None])[0] == pytest.approx(funk_transform_direct(f, xi, resolution=16), abs=1e-10)


def test_funk_of_constant():
    assert funk_transform_direct(lambda w: np.ones(len(w)), [0, 0, 1]) == pytest.approx(sphere_area(2))


def test_parseval_and_fourier_pairing():
    quad = build_sphere_quadrature(4, 10)
    f = PerturbedBall(4, 1.0, [{"degree": 2, "eps": 0.3}, {"degree": 6, "eps": 0.1, "axis": [1, 0, 1, 0]}]).radial
    g = PerturbedBall(4, 1.2, [{"degree": 4, "eps": -0.2, "axis": [0, 1, 0, 1]}]).radial
    assert parseval_check(f, g, 8, quad) < 1e-12
    lhs, rhs = spherical_parseval_sides(f, g, 8, quad)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_positive_kernel_is_normalized_and_band_limited(n):
    kappa = positive_kernel_weights(n, 8)
    assert kappa[0] == pytest.approx(1.0)
    assert all(abs(k) <= 1 + 1e-12 for k in kappa)


def test_pd_ball_and_odd_truncation():
    report = pd_test(Ball(3).radial, 8, dim=3)
    assert report.verdict == POSITIVE_DEFINITE
    assert np.allclose(report.transformed_density, 4 * math.pi, rtol=1e-10)
    assert report.tail_energy < 1e-20
    with pytest.raises(DomainError):
        pd_test(Ball(3).radial, 7, dim=3)
    with pytest.raises(DomainError):
        pd_test(Ball(3).radial, 8)


def test_pd_degree_two_perturbation_matches_closed_form():
    # 1 + eps P2 is PD iff 1 + eps (mu_2 / mu_0) P2 >= 0; mu_2 / mu_0 = -2 for n = 3
    def family(eps):
        return PerturbedBall(3, 1.0, [{"degree": 2, "eps": eps}]).radial

    assert pd_test(family(0.45), 8, dim=3).verdict == POSITIVE_DEFINITE
    assert pd_test(family(0.55), 8, dim=3).verdict == NOT_POSITIVE_DEFINITE
    assert pd_crossover(family, 0.3, 0.7, 3, resolution=16, xtol=1e-3) == pytest.approx(0.5, abs=2e-3)


def test_pd_tail_controls_verdict():
    rough = lambda v: np.max(np.abs(v), axis=1) ** -8
    report = pd_test(rough, 2, dim=3)
    assert report.verdict in (INCONCLUSIVE, NOT_POSITIVE_DEFINITE)
    assert report.tail_energy > report.tail_threshold


def test_pd_cube_n3():
    assert pd_test(LpBall(3, math.inf).radial, 8, dim=3).verdict == POSITIVE_DEFINITE


def test_crossover_bracket_must_straddle():
    family = lambda eps: PerturbedBall(3, 1.0, [{"degree": 2, "eps": eps}]).radial
    with pytest.raises(DomainError):
        pd_crossover(family, 0.1, 0.2, 3, resolution=12)


@settings(max_examples=8, deadline=None)
@given(c=st.floats(0.01, 100))
def test_pd_homogeneity(c):
    g = PerturbedBall(3, 1.0, [{"degree": 2, "eps": 0.3}]).radial
    quad = build_sphere_quadrature(3, 12)
    a = pd_test(g, 8, quad, sample_resolution=8)
    b = pd_test(lambda v: c * g(v), 8, quad, sample_resolution=8)
    assert a.verdict == b.verdict
    assert np.allclose(b.transformed_density, c * a.transformed_density, rtol=1e-10, atol=1e-12 * c)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pd_constant_is_positive_definite(n):
    quad = build_sphere_quadrature(n, 10 if n < 5 else 9)
    assert pd_test(lambda v: np.full(len(v), 2.5), 8, quad, sample_resolution=6).verdict == POSITIVE_DEFINITE


def test_parseval_examples():
    quad = build_sphere_quadrature(3, 8)
    one = lambda v: np.ones(len(v))
    assert parseval_check(one, one, 6, quad) < 1e-12
    p2 = lambda v: 1.5 * v[:, 2] ** 2 - 0.5
    lhs, rhs = spherical_parseval_sides(one, p2, 6, quad)
    assert abs(lhs) < 1e-10 and abs(rhs) < 1e-10


def test_crossover_stable_under_doubling():
    family = lambda eps: PerturbedBall(4, 1.0, [{"degree": 2, "eps": eps}]).radial
    coarse = pd_crossover(family, 0.1, 0.6, 4, resolution=10, xtol=1e-3, sample_resolution=6)
    fine = pd_crossover(family, 0.1, 0.6, 4, resolution=20, xtol=1e-3, sample_resolution=6)
    assert fine == pytest.approx(coarse, rel=0.05)
    assert fine == pytest.approx(1 / 3, abs=2e-3)
