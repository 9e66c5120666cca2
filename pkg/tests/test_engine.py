import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bplab import engine
from bplab.densities import Density, PowerSum
from bplab.errors import ContinuityError, DegenerateScenarioError, DomainError
from bplab.geometry import K_MINUS_L, L_MINUS_K, Ball, Ellipsoid, LpBall, PerturbedBall
from bplab.quadrature import RadialRule, build_sphere_quadrature
from bplab.scenario import builtin_scenario, builtin_spec, parse_scenario


def ball_spec(rk, rl, densities=None, decomposition=None, **extra):
    one = [{"coef": 1.0, "exp": 0.0}]
    spec = {
        "schema": "bp/1",
        "dim": 3,
        "mode": "main_theorem",
        "bodies": {"K": {"kind": "ball", "r": rk}, "L": {"kind": "ball", "r": rl}},
        "densities": densities or {"f_n": one, "f_n_minus_1": one, "g_n": one, "g_n_minus_1": one},
        "decomposition": decomposition or {"a": [], "b": [{"coef": 1.0, "exp": -1.0}]},
    }
    spec.update(extra)
    return spec


# radial integrals -------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    p=st.integers(0, 4),
    exp=st.sampled_from([-4.0, -3.0, -1.0, -0.5, 0.0, 1.5, 3.0]),
    lo=st.floats(0.2, 2.0),
    width=st.floats(1e-6, 2.0),
)
def test_radial_moment_closed_form_matches_gauss(p, exp, lo, width):
    d = PowerSum([(1.3, exp), (0.4, 2.0)])
    hi = lo + width
    closed = engine.radial_moment(d, p, lo, hi)
    gauss = engine.radial_moment(d, p, lo, hi, RadialRule(24))
    assert closed == pytest.approx(gauss, rel=1e-11, abs=1e-300)


def test_radial_moment_examples():
    d = Density([(1, 2)])
    assert engine.radial_moment(d, 2, 0.5, 1.0) == pytest.approx((1 - 0.5**5) / 5, rel=1e-14)
    assert engine.radial_moment(Density([(1, -3)]), 2, 1.0, math.e) == pytest.approx(1.0, rel=1e-14)
    assert engine.radial_moment(d, 0, [1.0, 2.0], [1.0, 1.0]).tolist() == [0.0, 0.0]


# h and the decomposition -------------------------------------------------------


def test_h_for_example_three_three():
    sc = builtin_scenario("3.3", eps=0.25)
    x = np.array([0.0, 0.0, 1.05])
    assert engine.h_eval(x, sc.K, sc.L, sc.densities) == pytest.approx(0.25 * 1.05 + 1 / 1.05, rel=1e-14)
    with pytest.raises(DomainError):
        engine.h_eval([0.0, 0.0, 0.5], sc.K, sc.L, sc.densities)


def test_h_uses_g_densities_on_l_minus_k():
    densities = {
        "f_n": Density([(1, 0)]),
        "f_n_minus_1": Density([(2, 1)]),
        "g_n": Density([(1, 0)]),
        "g_n_minus_1": Density([(5, 1)]),
    }
    assert engine.h_eval([1.5, 0, 0], Ball(3, 2), Ball(3, 1), densities) == pytest.approx(2.0)
    assert engine.h_eval([1.5, 0, 0], Ball(3, 1), Ball(3, 2), densities) == pytest.approx(5.0)


@pytest.mark.parametrize("example", ["3.1", "3.2", "3.3"])
def test_builtin_decompositions_hold(example):
    sc = builtin_scenario(example)
    rays = build_sphere_quadrature(3, 8).nodes
    check = engine.check_decomposition(sc.pair, sc.K, sc.L, rays, h=engine.h_profile(sc.densities))
    assert check.ok and check.violation_count == 0
    assert check.max_sum_defect < 1e-12


def test_swapped_decomposition_is_caught():
    sc = builtin_scenario("3.3")
    bad = engine.MonotonePair(sc.pair.b, sc.pair.a)
    rays = build_sphere_quadrature(3, 6).nodes
    check = engine.check_decomposition(bad, sc.K, sc.L, rays, h=engine.h_profile(sc.densities), max_reported=10**6)
    assert not check.ok
    kinds = {v["kind"] for v in check.violations}
    assert {"a_decreasing", "b_increasing"} <= kinds


def test_sum_defect_is_caught():
    sc = builtin_scenario("3.3")
    wrong = engine.MonotonePair(engine.PiecewiseRadial(PowerSum([(0.5, 1)])), sc.pair.b)
    rays = build_sphere_quadrature(3, 6).nodes
    check = engine.check_decomposition(wrong, sc.K, sc.L, rays, h=engine.h_profile(sc.densities))
    assert not check.ok and check.max_sum_defect > 1e-3
    assert "sum_defect" in {v["kind"] for v in check.violations}


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_endpoint_bound_holds_for_monotone_pairs(seed):
    rng = np.random.default_rng(seed)
    a = PowerSum([(rng.uniform(0, 2), rng.uniform(0, 3))])
    b = PowerSum([(rng.uniform(0, 2), -rng.uniform(0, 3))])
    pair = engine.MonotonePair(engine.PiecewiseRadial(a), engine.PiecewiseRadial(b))
    K = Ellipsoid(3, rng.uniform(0.7, 1.4, 3))
    L = LpBall(3, float(rng.choice([1.5, 3.0, 6.0])), rng.uniform(0.7, 1.4))
    out = engine.endpoint_bound_check(pair, K, L, 2000, seed)
    assert out["violations"] == 0
    assert out["checked"] == out["k_minus_l"] + out["l_minus_k"]


def test_F_rejects_non_positive_denominator():
    pair = engine.MonotonePair(engine.PiecewiseRadial(engine.ZERO), engine.PiecewiseRadial(engine.ZERO))
    G = engine.F_on_sphere(pair, Ball(3, 1.1), Ball(3, 1))
    with pytest.raises(DegenerateScenarioError):
        G(np.eye(3))


def test_F_example_three_two_is_constant_on_the_ball():
    sc = builtin_scenario("3.2")
    G = engine.F_on_sphere(sc.pair, sc.K, sc.L)
    v = build_sphere_quadrature(3, 6).nodes
    assert np.allclose(G(v), 1.0, rtol=1e-14)


# measures ----------------------------------------------------------------------


def test_section_and_region_measures_of_shells():
    K, L = Ball(3, 2.0), Ball(3, 1.0)
    d = Density([(1, 0)])
    area = math.pi * (4 - 1)
    assert engine.section_measure(K_MINUS_L, d, [0, 0, 1], K, L, resolution=16) == pytest.approx(area, rel=1e-12)
    assert engine.section_measure(L_MINUS_K, d, [0, 0, 1], K, L, resolution=16) == 0.0
    quad = build_sphere_quadrature(3, 8)
    vol = 4 * math.pi / 3 * 7
    assert engine.region_measure(K_MINUS_L, d, K, L, quad) == pytest.approx(vol, rel=1e-12)
    d2 = Density([(1, 2)])
    assert engine.region_measure(L_MINUS_K, d2, L, K, quad) == pytest.approx(4 * math.pi * 31 / 5, rel=1e-12)


def test_measures_swap_with_bodies():
    K = Ellipsoid(3, [1.0, 1.2, 0.8])
    L = PerturbedBall(3, 1.0, [{"degree": 2, "eps": 0.1}])
    d = Density([(1, 1)])
    quad = build_sphere_quadrature(3, 16)
    assert engine.region_measure(K_MINUS_L, d, K, L, quad) == pytest.approx(
        engine.region_measure(L_MINUS_K, d, L, K, quad), rel=1e-14
    )


# orientation -------------------------------------------------------------------


def test_zvavitch_orientations():
    dec = builtin_scenario("zvavitch-lebesgue")
    prob = engine.oriented(dec)
    assert prob.swapped and prob.K is dec.L and prob.L is dec.K
    spec = builtin_spec("zvavitch-lebesgue")
    spec["orientation"] = "increasing"
    inc = engine.oriented(parse_scenario(spec))
    assert not inc.swapped and inc.pair.b.to_spec() == []


def test_scenario_invariants():
    sc = builtin_scenario("3.1")
    with pytest.raises(DomainError):
        engine.Scenario(3, sc.K, sc.L, sc.densities, engine.MAIN, None)
    with pytest.raises(DomainError):
        engine.Scenario(3, sc.K, sc.L, builtin_scenario("3.3").densities, engine.ZVAVITCH, None, engine.DECREASING)


# end-to-end verdicts ---------------------------------------------------------------


@pytest.mark.parametrize("example", ["3.1", "3.2", "3.3", "zvavitch-lebesgue"])
def test_builtins_verify(example):
    report = engine.run_scenario(builtin_scenario(example))
    assert report.verdict == engine.VERIFIED, report.to_dict()
    assert report.exit_code == 0
    assert report.conclusion_lhs <= report.conclusion_rhs


def test_vacuous_when_bodies_agree():
    report = engine.run_scenario(parse_scenario(ball_spec(1.0, 1.0)))
    assert report.verdict == engine.VACUOUS and report.exit_code == 0


def test_hypothesis_failure_is_reported():
    report = engine.run_scenario(parse_scenario(ball_spec(1.0, 1.2)))
    assert report.verdict == engine.HYPOTHESIS_FAILS and report.exit_code == 3
    assert not report.hypothesis_ok and np.max(report.hypothesis_margins) < 0


def test_bad_decomposition_is_not_applicable():
    spec = ball_spec(1.2, 1.0, decomposition={"a": [{"coef": 1.0, "exp": -1.0}], "b": []})
    report = engine.run_scenario(parse_scenario(spec))
    assert report.verdict == engine.NOT_APPLICABLE and report.exit_code == 5


def test_non_pd_G_is_not_applicable():
    # G = 1 / rho_L^-1 = rho_L for b = 1/r, with L a cube in dimension 5
    one = [{"coef": 1.0, "exp": 0.0}]
    spec = {
        "schema": "bp/1",
        "dim": 5,
        "mode": "main_theorem",
        "bodies": {"K": {"kind": "lp_ball", "p": "inf", "r": 1.0}, "L": {"kind": "lp_ball", "p": "inf", "r": 0.95}},
        "densities": {"f_n": one, "f_n_minus_1": one, "g_n": one, "g_n_minus_1": one},
        "decomposition": {"a": [], "b": [{"coef": 1.0, "exp": -1.0}]},
        "quadrature": {"resolution": 6, "section_resolution": 6, "hyperplane_resolution": 4, "ray_resolution": 3},
    }
    report = engine.run_scenario(parse_scenario(spec))
    assert report.pd_report.verdict == "not_positive_definite"
    assert report.verdict == engine.NOT_APPLICABLE


def test_degenerate_body_is_a_stage_error():
    spec = ball_spec(1e-8, 1.0, densities={
        "f_n": [{"coef": 1.0, "exp": -3.0}],
        "f_n_minus_1": [{"coef": 1.0, "exp": -3.0}],
        "g_n": [{"coef": 1.0, "exp": -3.0}],
        "g_n_minus_1": [{"coef": 1.0, "exp": -3.0}],
    })
    with pytest.raises(engine.StageError) as info:
        engine.run_scenario(parse_scenario(spec))
    assert info.value.stage == "validation"


def test_shell_slack_matches_closed_form():
    report = engine.run_scenario(parse_scenario(ball_spec(1.2, 1.0)))
    assert report.verdict == engine.VERIFIED
    assert report.conclusion_rhs == pytest.approx(4 * math.pi / 3 * (1.2**3 - 1), rel=1e-10)
    assert report.conclusion_lhs == 0.0


def test_report_is_deterministic():
    sc = builtin_scenario("3.3")
    assert engine.run_scenario(sc).to_dict() == engine.run_scenario(copy.deepcopy(sc)).to_dict()


# continuity of the split integral -----------------------------------------------------


def test_q_profile_sign_and_continuity_errors():
    K, L = Ellipsoid(3, [1, 1, 1.5]), Ball(3, 1.2)
    f = Density([(1, 2)])
    v = np.array([[0, 0, 1.0], [1.0, 0, 0]])
    q = engine.q_profile(K, L, f, f, v)
    assert q[0] == pytest.approx((1.5**3 - 1.2**3) / 3) and q[1] == pytest.approx(-(1.2**3 - 1) / 3)
    with pytest.raises(ContinuityError):
        engine.q_profile(K, L, Density([(1, -1)]), f, v)


def test_q_profile_jumps_decrease_linearly():
    K, L = Ellipsoid(3, [1.1, 0.9, 1.3]), Ball(3, 1.0)
    jumps = engine.q_profile_jumps(K, L, Density([(1, 0)]), Density([(1, 2)]), [1, 0.3, 0.2], [0.1, -0.4, 1])
    ratios = [a / b for a, b in zip(jumps, jumps[1:])]
    assert all(r > 1.9 for r in ratios)
    assert all(r <= 2.0 + 1e-9 for r in ratios)  # nested grids cannot do better than halving


def test_worker_count(monkeypatch):
    monkeypatch.setenv("BP_THREADS", "3")
    assert engine.worker_count() == 3
    monkeypatch.delenv("BP_THREADS")
    assert engine.worker_count() >= 1


def test_identity_density_reduction():
    # equal densities on both sides: margins equal the difference of whole-body sections
    from bplab.scenario import body_sections

    K = Ellipsoid(3, [1.0, 1.1, 0.9])
    L = PerturbedBall(3, 1.0, [{"degree": 2, "eps": 0.1, "axis": [1, 0, 1]}])
    one = Density([(1, 0)])
    densities = dict.fromkeys(engine.DENSITY_KEYS, one)
    pair = engine.MonotonePair(engine.PiecewiseRadial(engine.ZERO), engine.PiecewiseRadial(PowerSum([(1, -1)])))
    sc = engine.Scenario(3, K, L, densities, engine.MAIN, pair)
    xis = engine.hyperplane_normals(3, 6)
    margins = engine.verify_hypothesis(sc, xis)
    whole = body_sections(K, xis, 64) - body_sections(L, xis, 64)
    assert np.allclose(margins, whole, rtol=1e-9, atol=1e-12)


def test_scaling_covariance():
    base = builtin_spec("3.3")
    scaled = copy.deepcopy(base)
    for terms in scaled["densities"].values():
        for term in terms:
            term["coef"] *= 3.0
    a = engine.run_scenario(parse_scenario(base))
    b = engine.run_scenario(parse_scenario(scaled))
    assert np.allclose(b.hypothesis_margins, 3.0 * a.hypothesis_margins, rtol=1e-12)
    assert b.conclusion_rhs == pytest.approx(3.0 * a.conclusion_rhs, rel=1e-12)
    assert b.conclusion_lhs == pytest.approx(3.0 * a.conclusion_lhs, rel=1e-12)
    assert (a.verdict, a.hypothesis_ok, a.conclusion_ok) == (b.verdict, b.hypothesis_ok, b.conclusion_ok)


def test_region_measure_matches_mc_volume_difference():
    from bplab.oracles import mc_region_measure

    K, L = Ellipsoid(3, [1, 1, 1.3]), Ball(3, 1.05)
    exact = engine.region_measure(K_MINUS_L, Density([(1, 0)]), K, L, build_sphere_quadrature(3, 48))
    assert mc_region_measure(K_MINUS_L, Density([(1, 0)]), K, L, 1_000_000, seed=8).agrees(exact)


def test_q_profile_examples():
    v = build_sphere_quadrature(3, 4).nodes
    one = Density([(1, 0)])
    assert np.allclose(engine.q_profile(Ball(3, 2), Ball(3, 1), one, one, v), 1.0)
    assert np.all(engine.q_profile(Ball(3, 1), Ball(3, 1), one, one, v) == 0)
