import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from entrolab.dlm import (bezier_path, jump_amplitude, make_path, path_integral,
                          perfect_derivative_probe, reordered_path, shock_entropy_production,
                          shock_production, straight_path)
from entrolab.errors import InadmissibleState, QuadratureNotConverged
from entrolab.systems import get_system, primitive_to_conserved

O2, I2 = np.zeros(2), np.ones(2)


def shear(p):
    return np.stack([p[:, 1], np.zeros(len(p))], axis=-1)


def parabola():
    # Bezier with control (1/2, 0) traces (s, s^2) from (0,0) to (1,1)
    return bezier_path(controls=[[0.5, 0.0]])


def test_straight_scalar_path():
    p = straight_path()
    s = np.linspace(0, 1, 5)
    np.testing.assert_array_equal(p(s, [0.0], [1.0])[:, 0], s)


@pytest.mark.parametrize("path", [straight_path(), parabola(), reordered_path([1, 0]),
                                  bezier_path(offsets=[[0.3, -0.2], [0.1, 0.4]])])
def test_endpoints_are_exact(path):
    um, up = np.array([0.3, -1.2]), np.array([2.0, 0.7])
    ends = path([0.0, 1.0], um, up)
    assert np.max(np.abs(ends[0] - um)) <= 1e-14
    assert np.max(np.abs(ends[1] - up)) <= 1e-14


def test_bezier_midpoint():
    p = make_path("bezier", controls=[[1.0, 0.0]])
    np.testing.assert_allclose(p([0.5], O2, I2)[0], [0.75, 0.25], atol=1e-15)


def test_parabola_traces_s_squared():
    s = np.linspace(0, 1, 11)
    np.testing.assert_allclose(parabola()(s, O2, I2), np.stack([s, s * s], -1), atol=1e-15)


def test_path_derivatives_match_differences():
    s = np.linspace(0.05, 0.95, 7)
    for p in (parabola(), bezier_path(offsets=[[0.2, 0.1]])):
        h = 1e-6
        fd = (p(s + h, O2, I2) - p(s - h, O2, I2)) / (2 * h)
        np.testing.assert_allclose(p.derivative(s, O2, I2), fd, atol=1e-8)


def test_reordered_path_moves_one_component_at_a_time():
    p = reordered_path([1, 0])
    np.testing.assert_allclose(p([0.5], O2, I2)[0], [0.0, 1.0])
    np.testing.assert_allclose(p([0.25], O2, I2)[0], [0.0, 0.5])
    assert p.breaks == (0.5,)
    with pytest.raises(ValueError):
        reordered_path([0, 0])


def test_unknown_path_kind():
    with pytest.raises(ValueError):
        make_path("spline")


def test_inadmissible_path_is_rejected():
    eu = get_system("euler")
    um = primitive_to_conserved(np.array([1.0, 0.0, 1.0]), 1.4)
    up = primitive_to_conserved(np.array([1.0, 0.0, 1.0]), 1.4)
    with pytest.raises(InadmissibleState):
        make_path("bezier", um=um, up=up, system=eu, controls=[[-1.0, 0.0, 1.0]])


def test_shear_amplitudes_closed_form():
    a = jump_amplitude(shear, straight_path(), O2, I2)
    b = jump_amplitude(shear, parabola(), O2, I2)
    assert a.value == pytest.approx(0.5, abs=1e-14)
    assert b.value == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert a.quadrature_order == 16 and a.error_estimate < 1e-14


def test_shear_spread_is_one_sixth():
    res = perfect_derivative_probe(shear, [straight_path(), parabola()], O2, I2)
    assert abs(res.max_spread - 1.0 / 6.0) <= 1e-9
    assert res.verdict == "path-dependent"


def test_perfect_derivative_over_four_paths():
    paths = [straight_path(), parabola(), reordered_path([1, 0]),
             bezier_path(offsets=[[0.2, -0.1], [0.1, 0.3]])]
    res = perfect_derivative_probe(lambda p: p, paths, O2, I2)
    assert res.max_spread < 1e-12 and res.verdict == "path-independent"
    for amp in res.values:
        assert amp.value == pytest.approx(1.0, abs=1e-13)


def test_euler_entropy_gradient_is_path_independent():
    eu = get_system("euler")
    pair = eu.pair("physical")
    um = primitive_to_conserved(np.array([1.0, 0.2, 1.0]), 1.4)
    up = primitive_to_conserved(np.array([0.5, -0.1, 0.4]), 1.4)
    paths = [straight_path(), bezier_path(offsets=[[0.05, 0.02, 0.03]]), reordered_path([0, 1, 2])]
    res = perfect_derivative_probe(pair.grad, paths, um, up)
    assert res.verdict == "path-independent"
    assert res.values[0].value == pytest.approx(pair.eta(up) - pair.eta(um), abs=1e-10)


def test_order_doubling_and_failure():
    # a cubic kink at s = 1/3 needs more nodes than the default order
    def kinked(p):
        return np.abs(p - 1.0 / 3.0) ** 3
    amp = jump_amplitude(kinked, straight_path(), [0.0], [1.0])
    assert amp.quadrature_order == 128
    assert amp.value == pytest.approx(17.0 / 324.0, abs=1e-9)
    with pytest.raises(QuadratureNotConverged):
        jump_amplitude(kinked, straight_path(), [0.0], [1.0], rtol=1e-12)


def test_doubling_order_shrinks_error_for_analytic_integrand():
    def f(p, dp):
        return np.exp(3 * p[:, 0]) * dp[:, 0]
    e = [path_integral(f, straight_path(), [0.0], [1.0], n)[1] for n in (4, 8)]
    assert e[1] <= e[0] / 10


def test_burgers_shock_productions():
    bu = get_system("burgers")
    q = bu.pair("quadratic")
    assert shock_entropy_production(bu, q, 0.5, [1.0], [0.0]) == pytest.approx(-1 / 12, abs=1e-14)
    assert shock_entropy_production(bu, q, 0.5, [0.0], [1.0]) == pytest.approx(1 / 12, abs=1e-14)
    assert oracles.burgers_quadratic_production(1.0, 0.0) == pytest.approx(-1 / 12, abs=1e-15)
    kr = bu.pair("kruzhkov", c=0.5)
    res = shock_production(bu, kr, 0.5, [1.0], [0.0])
    assert res.value == pytest.approx(-0.25, abs=1e-14)
    assert res.path_route is None and res.discrepancy is None


def test_routes_agree_for_euler():
    eu = get_system("euler")
    rng = np.random.default_rng(3)
    um, up = eu.sample(rng, 2)
    for pid in ("physical", "tadmor"):
        res = shock_production(eu, eu.pair(pid), 0.3, um, up)
        assert res.discrepancy < 1e-10


def test_quasilinear_system_uses_path_route():
    sy = get_system("rozhdestvenskii")
    res = shock_production(sy, sy.pair("quadratic_candidate"), 0.2, [1.0, 1.0, 1.0], [1.5, 1.0, 1.0])
    assert res.jump_route is None and res.path_route is not None


def test_normal_must_be_unit():
    bu = get_system("burgers")
    with pytest.raises(ValueError):
        shock_production(bu, bu.pair("quadratic"), 0.5, [1.0], [0.0], n=[2.0])


@settings(max_examples=60, deadline=None)
@given(um=st.floats(-3, 3), up=st.floats(-3, 3), sigma=st.floats(-3, 3))
def test_swapping_states_negates_production(um, up, sigma):
    bu = get_system("burgers")
    q = bu.pair("exp")
    a = shock_entropy_production(bu, q, sigma, [um], [up])
    b = shock_entropy_production(bu, q, sigma, [up], [um])
    assert a == pytest.approx(-b, abs=1e-10 * (1 + abs(a)))


@settings(max_examples=60, deadline=None)
@given(um=st.floats(-3, 3), up=st.floats(-3, 3), sigma=st.floats(-3, 3))
def test_reflection_leaves_production_invariant(um, up, sigma):
    # x -> -x swaps the states, flips the speed and the normal
    bu = get_system("burgers")
    q = bu.pair("quadratic")
    a = shock_entropy_production(bu, q, sigma, [um], [up])
    b = shock_entropy_production(bu, q, -sigma, [up], [um], n=[-1.0])
    assert a == pytest.approx(b, abs=1e-10 * (1 + abs(a)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), sigma=st.floats(-2, 2))
def test_production_is_path_independent_for_euler_pairs(seed, sigma):
    eu = get_system("euler")
    pair = eu.pair("physical")
    um, up = eu.sample(np.random.default_rng(seed), 2)
    paths = [straight_path(), bezier_path(offsets=[[0.05, 0.02, 0.03]]),
             bezier_path(offsets=[[-0.03, 0.01, 0.02], [0.02, -0.02, 0.01]])]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vals = [shock_production(eu, pair, sigma, um, up, path=p) for p in paths]
    ref = vals[0].jump_route
    for v in vals:
        assert abs(v.path_route - ref) <= 1e-8 * (1 + abs(ref))
