import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from entrolab.action import Window
from entrolab.errors import (AdmissibilityViolation, NonConvexFlux, OutsideDomain,
                             SupportViolation, VacuumFormation)
from entrolab.fields import (Bump, Discontinuity, Fan, constant_field, evaluate, field_summary,
                             make_expansion_shock, perturb_field, piecewise_constant,
                             rh_residual, rozhdestvenskii_wave, sample_field, shock_data,
                             smoothstep5, solve_riemann_euler, solve_riemann_scalar,
                             star_state, traces)
from entrolab.systems import get_system, jacobian_eval

BURGERS = get_system("burgers")
EULER = get_system("euler")
SOD_L, SOD_R = (1.0, 0.0, 1.0), (0.125, 0.0, 0.1)


def test_burgers_shock():
    f = solve_riemann_scalar(BURGERS, 1.0, 0.0)
    (w,) = f.waves
    assert isinstance(w, Discontinuity) and w.speed == 0.5 and w.exact
    assert sample_field(f, 1.0, 0.5, side=-1)[0] == 1.0
    assert sample_field(f, 1.0, 0.5, side=1)[0] == 0.0
    with pytest.raises(ValueError):
        sample_field(f, 1.0, 0.5)
    tr = traces(f, 1.0, 0.5)
    assert tr.on_discontinuity


def test_burgers_rarefaction():
    f = solve_riemann_scalar(BURGERS, 0.0, 1.0)
    assert isinstance(f.waves[0], Fan)
    assert sample_field(f, 2.0, 1.0)[0] == pytest.approx(0.5)
    x = np.linspace(-0.5, 1.5, 9)
    np.testing.assert_allclose(sample_field(f, 1.0, x)[:, 0], np.clip(x, 0, 1))


def test_equal_states_give_constant_field():
    f = solve_riemann_scalar(BURGERS, 0.3, 0.3)
    assert f.waves == ()
    assert sample_field(f, 5.0, -3.0)[0] == 0.3
    g = constant_field(EULER, [1.0, 0.0, 2.5])
    np.testing.assert_array_equal(sample_field(g, 1.0, 7.0), [1.0, 0.0, 2.5])
    e = solve_riemann_euler(EULER, SOD_L, SOD_L)
    assert e.waves == ()


def test_non_convex_flux_rejected():
    concave = replace(get_system("convex_scalar", flux="exp"), d2flux=lambda w: -np.ones_like(w))
    with pytest.raises(NonConvexFlux):
        solve_riemann_scalar(concave, 1.0, 0.0)


def test_outside_domain():
    f = solve_riemann_scalar(BURGERS, 1.0, 0.0)
    with pytest.raises(OutsideDomain):
        sample_field(f, -0.1, 0.0)
    with pytest.raises(OutsideDomain):
        shock_data(f, -1.0)


def test_shock_data():
    f = solve_riemann_scalar(BURGERS, 1.0, 0.0)
    (sd,) = shock_data(f, 2.0)
    assert sd.position == 1.0 and sd.speed == 0.5
    assert sd.left[0] == 1.0 and sd.right[0] == 0.0 and sd.exact


def test_expansion_shock():
    f = make_expansion_shock(BURGERS, 0.0, 1.0)
    (w,) = f.waves
    assert w.speed == 0.5 and w.rh_residual <= 1e-14
    with pytest.raises(ValueError):
        make_expansion_shock(BURGERS, 0.5, 0.5)
    with pytest.raises(ValueError):
        make_expansion_shock(BURGERS, 1.0, 0.0)


def test_sod_star_state_matches_oracle():
    f = solve_riemann_euler(EULER, SOD_L, SOD_R)
    p_ref, v_ref = oracles.star_state_bisection(1.4, SOD_L, SOD_R)
    assert abs(f.meta["p_star"] - p_ref) < 1e-10
    assert abs(f.meta["v_star"] - v_ref) < 1e-10
    assert abs(f.meta["p_star"] - oracles.SOD_P_STAR) < 1e-10
    assert abs(f.meta["v_star"] - oracles.SOD_V_STAR) < 1e-10
    assert [w.label for w in f.waves] == ["left_rarefaction", "contact", "right_shock"]
    assert all(w.exact for w in f.waves if isinstance(w, Discontinuity))


def test_bisection_fallback_agrees_with_newton():
    ref = star_state(1.4, SOD_L, SOD_R)
    fb = star_state(1.4, SOD_L, SOD_R, max_iter=1)
    assert fb.method == "bisection"
    assert abs(fb.p - ref.p) < 1e-10 and abs(fb.v - ref.v) < 1e-10


def test_colliding_streams_are_symmetric():
    f = solve_riemann_euler(EULER, (1.0, 0.7, 1.0), (1.0, -0.7, 1.0))
    assert abs(f.meta["v_star"]) < 1e-14
    assert [w.label for w in f.waves] == ["left_shock", "contact", "right_shock"]


def test_vacuum_is_detected():
    with pytest.raises(VacuumFormation):
        solve_riemann_euler(EULER, (1.0, -20.0, 1.0), (1.0, 20.0, 1.0))


def test_sod_variant_has_exact_left_expansion_shock():
    f = solve_riemann_euler(EULER, SOD_L, SOD_R, branches=("shock", "auto"))
    assert f.waves[0].label == "left_expansion_shock"
    assert f.waves[0].exact


def test_sod_self_similarity():
    f = solve_riemann_euler(EULER, SOD_L, SOD_R)
    x = np.linspace(-0.9, 0.9, 101)
    for lam in (0.5, 2.0, 7.0):
        a = sample_field(f, 0.4, x, side=-1)
        b = sample_field(f, 0.4 * lam, lam * x, side=-1)
        assert np.max(np.abs(a - b)) <= 1e-12


def test_fan_derivatives_match_differences():
    f = solve_riemann_euler(EULER, SOD_L, SOD_R)
    fan = f.waves[0]
    xi = np.linspace(fan.lo, fan.hi, 7)[1:-1]
    h = 1e-6
    fd = (fan.profile(xi + h) - fan.profile(xi - h)) / (2 * h)
    np.testing.assert_allclose(fan.dprofile(xi), fd, atol=1e-7)
    np.testing.assert_allclose(fan.profile(np.array([fan.lo]))[0], f.states[0], atol=1e-12)
    np.testing.assert_allclose(fan.profile(np.array([fan.hi]))[0], f.states[1], atol=1e-12)


def test_fan_solves_the_system_pointwise():
    # u_t + A u_x = 0 inside the fan
    f = solve_riemann_euler(EULER, SOD_L, SOD_R)
    fan = f.waves[0]
    x = np.linspace(fan.lo, fan.hi, 9)[1:-1] * 0.5
    u, ut, ux = evaluate(f, 0.5, x)
    res = ut + np.einsum("mij,mj->mi", jacobian_eval(EULER, u), ux)
    assert np.max(np.abs(res)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(um=st.floats(-3, 3), up=st.floats(-3, 3))
def test_lax_condition(um, up):
    assume(um > up + 1e-6)
    f = solve_riemann_scalar(BURGERS, um, up)
    s = f.waves[0].speed
    assert up < s < um


@settings(max_examples=40, deadline=None)
@given(um=st.floats(-2, 2), up=st.floats(-2, 2), lam=st.floats(0.1, 10), t=st.floats(0.1, 2),
       x=st.floats(-3, 3))
def test_scalar_self_similarity(um, up, lam, t, x):
    f = solve_riemann_scalar(BURGERS, um, up)
    assert np.allclose(sample_field(f, t, x, side=-1), sample_field(f, lam * t, lam * x, side=-1),
                       atol=1e-12)


def test_bump_profile_and_values():
    b = Bump((0.5, 0.0), (0.25, 0.5), (1.0, 2.0), 0.1)
    du, _, _ = b.evaluate(0.5, 0.0)
    np.testing.assert_allclose(du, [0.1, 0.2])
    for t, x in [(0.25, 0.0), (0.75, 0.0), (0.5, 0.5), (0.5, -0.5), (0.9, 0.0)]:
        assert np.all(b.evaluate(t, x)[0] == 0.0)
    assert smoothstep5(0.0) == 0.0 and smoothstep5(1.0) == 1.0


def test_bump_derivatives_match_differences():
    b = Bump((0.5, 0.1), (0.2, 0.3), (1.0,), 0.7)
    t, x, h = 0.56, 0.2, 1e-6
    _, bt, bx = b.evaluate(t, x)
    ft = (b.evaluate(t + h, x)[0] - b.evaluate(t - h, x)[0]) / (2 * h)
    fx = (b.evaluate(t, x + h)[0] - b.evaluate(t, x - h)[0]) / (2 * h)
    np.testing.assert_allclose(bt, ft, atol=1e-8)
    np.testing.assert_allclose(bx, fx, atol=1e-8)


def test_zero_amplitude_bump_leaves_field_unchanged():
    f = solve_riemann_scalar(BURGERS, 0.0, 1.0)
    g = perturb_field(f, Bump((0.5, 0.3), (0.2, 0.2), (1.0,), 0.0))
    x = np.linspace(-1, 1, 21)
    np.testing.assert_array_equal(sample_field(f, 0.5, x), sample_field(g, 0.5, x))


@settings(max_examples=40, deadline=None)
@given(eps=st.floats(-0.5, 0.5), t=st.floats(0.0, 1.0), x=st.floats(-1, 1))
def test_perturbation_linearity(eps, t, x):
    f = solve_riemann_scalar(BURGERS, 0.0, 1.0)
    b = Bump((0.5, 0.3), (0.3, 0.4), (1.0,), eps)
    g = perturb_field(f, b)
    diff = sample_field(g, t, x) - sample_field(f, t, x)
    assert np.allclose(diff, b.evaluate(t, x)[0], atol=1e-15, rtol=0)


def test_perturbed_shock_keeps_rankine_hugoniot_away_from_bump():
    f = solve_riemann_scalar(BURGERS, 1.0, 0.0)
    g = perturb_field(f, Bump((0.5, -0.5), (0.2, 0.2), (1.0,), 0.1))
    (sd,) = shock_data(g, 0.5)
    assert rh_residual(BURGERS, sd.speed, sd.left, sd.right) == 0.0


def test_perturbation_support_checks():
    f = solve_riemann_scalar(BURGERS, 1.0, 0.0)
    W = Window(0.0, 1.0, -1.0, 1.0)
    with pytest.raises(SupportViolation):
        perturb_field(f, Bump((0.9, 0.0), (0.2, 0.2), (1.0,), 0.1), window=W)
    with pytest.raises(SupportViolation):
        perturb_field(f, Bump((0.5, 0.0), (0.0, 0.2), (1.0,), 0.1))
    with pytest.raises(ValueError):
        perturb_field(f, Bump((0.5, 0.0), (0.2, 0.2), (1.0, 1.0), 0.1))


def test_perturbation_admissibility_check():
    f = solve_riemann_euler(EULER, SOD_L, SOD_R)
    with pytest.raises(AdmissibilityViolation):
        perturb_field(f, Bump((0.5, -0.5), (0.2, 0.2), (-5.0, 0.0, 0.0), 1.0))


def test_piecewise_constant_flags_rh_exactness():
    good = piecewise_constant(BURGERS, [[1.0], [0.0]], [0.5])
    bad = piecewise_constant(BURGERS, [[1.0], [0.0]], [0.6])
    assert good.waves[0].exact and not bad.waves[0].exact
    assert bad.waves[0].rh_residual == pytest.approx(0.1)
    with pytest.raises(ValueError):
        piecewise_constant(BURGERS, [[1.0], [0.0], [-1.0]], [0.5, 0.1])


def test_rozhdestvenskii_wave_is_exact():
    f = rozhdestvenskii_wave()
    sy = f.system
    t = np.full(9, 0.3)
    x = np.linspace(-2, 2, 9)
    u, ut, ux = evaluate(f, t, x)
    res = ut + np.einsum("mij,mj->mi", jacobian_eval(sy, u), ux)
    assert np.max(np.abs(res)) < 1e-14


def test_field_summary_is_plain_data():
    s = field_summary(solve_riemann_euler(EULER, SOD_L, SOD_R))
    json.dumps(s)
    assert [w["type"] for w in s["waves"]] == ["fan", "discontinuity", "discontinuity"]
