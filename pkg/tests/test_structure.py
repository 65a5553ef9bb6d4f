import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entrolab.errors import NotStrictlyConvex, ZeroState
from entrolab.structure import (check_convexity, check_entropy_pair, check_godunov_potentials,
                                check_homogeneity, check_symmetrizer, default_lambda_grid,
                                euler_entropy_vars_degree, make_report, merge_reports,
                                symmetrizer_nullspace, symmetrizer_search)
from entrolab.systems import get_system, jacobian_eval, primitive_to_conserved


def _states(sy, n, seed=0):
    return sy.sample(np.random.default_rng(seed), n)


@pytest.mark.parametrize("sid,kw,pid,pkw", [
    ("burgers", {}, "quadratic", {}),
    ("burgers", {}, "exp", {}),
    ("burgers", {}, "kruzhkov", {"c": 0.5}),
    ("euler", {}, "physical", {}),
    ("euler", {}, "tadmor", {}),
    ("euler", {"gamma": 5 / 3}, "homogeneous", {"alpha": 1.0}),
    ("euler", {"d": 2}, "physical", {}),
    ("isentropic_euler", {}, "energy", {}),
    ("symmetric_demo", {}, "quadratic", {}),
    ("symmetric_demo", {}, "lambda", {"lam": 0.25}),
])
def test_compatible_pairs_pass(sid, kw, pid, pkw):
    sy = get_system(sid, **kw)
    pair = sy.pair(pid, **pkw)
    rep = check_entropy_pair(sy, pair, _states(sy, 100))
    assert rep.passed and rep.states_tested == 100
    if pair.convexity == "strict":
        assert check_symmetrizer(sy, pair, _states(sy, 100)).passed


def test_kruzhkov_is_checked_at_value_level():
    sy = get_system("burgers")
    rep = check_entropy_pair(sy, sy.pair("kruzhkov", c=0.5), _states(sy, 50))
    assert rep.details["mode"] == "value"
    with pytest.raises(NotStrictlyConvex):
        check_symmetrizer(sy, sy.pair("kruzhkov"), _states(sy, 5))


def test_rozhdestvenskii_candidate_fails_with_witness():
    sy = get_system("rozhdestvenskii")
    rep = check_entropy_pair(sy, sy.pair("quadratic_candidate"), _states(sy, 20))
    assert rep.verdict == "fail"
    state, res = rep.witnesses[0]
    assert res == rep.max_residual > 1e-3
    # the candidate's residual is exactly grad(eta)^T A, i.e. (u1 u2, u2 u3, u3 u1)
    u = np.array(state)
    assert res == pytest.approx(np.max(np.abs(u * np.roll(u, -1))), rel=1e-6)


def test_rozhdestvenskii_identity_hessian_symmetrizes():
    sy = get_system("rozhdestvenskii")
    rep = check_symmetrizer(sy, sy.pair("quadratic_candidate"), [[1.0, 2.0, 3.0]])
    assert rep.max_residual == 0.0 and rep.passed


def test_euler_symmetrizer_at_reference_state():
    sy = get_system("euler")
    u = primitive_to_conserved(np.array([1.0, 0.3, 1.0]), 1.4)
    assert check_symmetrizer(sy, sy.pair("physical"), [u]).max_residual < 1e-8


def test_nullspace_of_diagonal_jacobians_is_diagonal():
    A = jacobian_eval(get_system("rozhdestvenskii"), np.array([1.0, 2.0, 3.0]))
    basis = symmetrizer_nullspace([A])
    assert len(basis) == 3
    for H in basis:
        assert np.allclose(H, np.diag(np.diag(H)))
        assert np.allclose(H @ A, A.T @ H)


def test_nullspace_contains_registered_euler_hessian():
    sy = get_system("euler")
    u = _states(sy, 1, 4)[0]
    basis = symmetrizer_nullspace([jacobian_eval(sy, u)])
    H = sy.pair("physical").hess(u)
    coef = [np.sum(B * H) for B in basis]
    proj = sum(c * B for c, B in zip(coef, basis))
    assert np.max(np.abs(proj - H)) < 1e-8 * np.max(np.abs(H))


@pytest.mark.parametrize("sid,verdict", [("burgers", "entropic"), ("euler", "entropic"),
                                         ("rozhdestvenskii", "non-entropic")])
def test_search_verdicts(sid, verdict):
    sy = get_system(sid)
    rep = symmetrizer_search(sy, _states(sy, 20, 1), pairs=sy.pairs())
    assert rep.verdict == verdict
    assert rep.states_tested == 20


def test_rozhdestvenskii_search_details():
    sy = get_system("rozhdestvenskii")
    rep = symmetrizer_search(sy, _states(sy, 20, 1))
    assert rep.pattern == "diagonal"
    assert set(rep.integrable_dims) == {0}
    assert rep.qualifier == "numerically non-entropic"


def test_search_flags_small_sample():
    sy = get_system("burgers")
    rep = symmetrizer_search(sy, _states(sy, 5))
    assert any("20" in n for n in rep.notes)


def test_godunov_potentials_euler():
    sy = get_system("euler")
    rep = check_godunov_potentials(sy, sy.pair("physical"), _states(sy, 10))
    assert rep.passed


def test_godunov_potentials_quadratic():
    sy = get_system("symmetric_demo")
    assert check_godunov_potentials(sy, sy.pair("quadratic"), _states(sy, 10)).passed


@pytest.mark.parametrize("sid,pid", [("euler", "tadmor"), ("isentropic_euler", "energy"),
                                     ("symmetric_demo", "lambda")])
def test_pair_and_convexity_imply_potentials(sid, pid):
    sy = get_system(sid)
    pair = sy.pair(pid)
    st_ = _states(sy, 10, 8)
    assert check_entropy_pair(sy, pair, st_).passed
    assert check_convexity(sy, pair, st_).passed
    assert check_godunov_potentials(sy, pair, st_).passed


def test_convexity_lambda_range_symmetric_demo():
    sy = get_system("symmetric_demo")
    rep = check_convexity(sy, sy.pair("quadratic"), [[1.0, 0.0]], lam_grid=default_lambda_grid())
    assert rep.details["min_eigenvalue"] == pytest.approx(1.0)
    assert rep.details["lambda_bound"] == pytest.approx(1.0 / 3.0)
    assert rep.details["lambda_positive_max"] < 1.0 / 3.0
    grid = default_lambda_grid()
    assert rep.details["lambda_positive_max"] == grid[grid < 1 / 3].max()
    assert len(grid) == 64


def test_convexity_of_lambda_pair_fails_beyond_bound():
    sy = get_system("symmetric_demo")
    assert check_convexity(sy, sy.pair("lambda", lam=0.3), [[1.0, 0.0]]).passed
    assert not check_convexity(sy, sy.pair("lambda", lam=0.34), [[1.0, 0.0]]).passed


def test_euler_physical_strictly_convex():
    sy = get_system("euler")
    assert check_convexity(sy, sy.pair("physical"), _states(sy, 100)).passed


def test_euler_flux_degree_one():
    sy = get_system("euler")
    rep = check_homogeneity(sy, _states(sy, 5), expected={"flux": 1.0})
    assert rep.passed
    assert abs(rep.details["fitted"]["flux"] - 1.0) < 1e-10
    assert rep.details["residuals"]["euler_identity"] < 1e-12


@pytest.mark.parametrize("gamma,alpha", [(1.4, 0.0), (1.4, 1.0), (5 / 3, 0.0)])
def test_entropy_vars_degree(gamma, alpha):
    sy = get_system("euler", gamma=gamma)
    ref = euler_entropy_vars_degree(gamma, alpha)
    rep = check_homogeneity(sy, _states(sy, 5), pair=sy.pair("homogeneous", alpha=alpha),
                            expected={"flux": 1.0, "entropy_vars": ref})
    assert rep.passed, rep.details


def test_entropy_vars_degree_formula():
    assert euler_entropy_vars_degree(1.4, 0.0) == pytest.approx(-3.5)
    assert euler_entropy_vars_degree(1.4, 1.0) == pytest.approx(-6.0)
    assert euler_entropy_vars_degree(5 / 3, 0.0) == pytest.approx(-2.5)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_ultrarelativistic_degree_one(d):
    sy = get_system("ultrarelativistic", d=d)
    rep = check_homogeneity(sy, _states(sy, 5), expected={"flux": 1.0, "temporal": 1.0})
    assert rep.passed


def test_zero_state_has_no_degree():
    with pytest.raises(ZeroState):
        check_homogeneity(get_system("burgers"), [[0.0]])


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.2, 5.0), seed=st.integers(0, 1000))
def test_homogeneity_fit_is_scale_invariant(c, seed):
    sy = get_system("euler")
    states = _states(sy, 3, seed)
    S = np.array([0.5, 2.0, 10.0])
    b1 = check_homogeneity(sy, states, scalings=S).details["fitted"]["flux"]
    b2 = check_homogeneity(sy, states, scalings=c * S).details["fitted"]["flux"]
    assert abs(b1 - b2) < 1e-10


@settings(max_examples=50, deadline=None)
@given(res=st.lists(st.floats(0, 1e-3), min_size=1, max_size=20), thr=st.floats(0, 1e-3))
def test_verdict_matches_threshold(res, thr):
    rep = make_report("x", np.zeros((len(res), 1)), res, thr)
    assert rep.passed == (max(res) <= thr)


@settings(max_examples=30, deadline=None)
@given(a=st.lists(st.floats(0, 1), min_size=1, max_size=6),
       b=st.lists(st.floats(0, 1), min_size=1, max_size=6),
       c=st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_merge_is_associative(a, b, c):
    ra, rb, rc = (make_report("x", np.zeros((len(r), 1)), r, 0.5) for r in (a, b, c))
    left = merge_reports(merge_reports(ra, rb), rc)
    right = merge_reports(ra, merge_reports(rb, rc))
    assert left.max_residual == right.max_residual
    assert left.states_tested == right.states_tested == len(a) + len(b) + len(c)
    assert left.verdict == right.verdict
    assert [w[1] for w in left.witnesses] == [w[1] for w in right.witnesses]
