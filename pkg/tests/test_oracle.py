import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftpl import (
    Box,
    FunctionLoss,
    GridOracle,
    HingeLoss,
    LinearLoss,
    OracleAnswer,
    OracleGuarantee,
    OracleQuery,
    PWL1DOracle,
    SinusoidLoss,
    Stream,
    contract_check,
    grid_minimize,
    local_search_minimize,
    pwl1d_minimize,
)
from ftpl.oracle import (
    EXACT,
    UNKNOWN,
    GridBudgetError,
    OracleError,
    grid_guarantee,
    grid_h_for_alpha,
    grid_size,
    suggest_grid_h,
)

from conftest import brute_min


def absval():
    return FunctionLoss(lambda X: np.abs(X[:, 0]), 1.0, 1, "abs")


def test_grid_abs_example():
    box = Box([-1.0], [1.0])
    ans = grid_minimize(OracleQuery([absval()], np.zeros(1), box), 0.01)
    assert abs(ans.minimizer[0]) <= 0.005
    assert ans.value <= 0.005


def test_grid_linear_objective_goes_to_upper_corner():
    ans = grid_minimize(OracleQuery([], np.array([2.0]), Box([-1.0], [1.0])), 0.1)
    assert ans.minimizer[0] == 1.0
    assert ans.value == -2.0


def test_grid_hinge_value_within_alpha(line):
    ans = grid_minimize(OracleQuery([HingeLoss([0.0], 10.0)], np.zeros(1), line), 0.3)
    assert ans.value <= ans.guarantee.alpha
    assert ans.guarantee.alpha == pytest.approx(1.0 * 1 * 0.3 / 2)
    assert ans.guarantee.beta == pytest.approx(0.15)


def test_grid_includes_both_corners():
    box = Box([0.0, -1.0], [1.0, 1.0])
    ans = grid_minimize(OracleQuery([], np.array([0.0, -1.0]), box), 0.3)
    assert ans.minimizer.tolist() == [0.0, -1.0]
    assert grid_size(box, 0.3) == 5 * 8


def test_grid_budget_error_suggests_h():
    box = Box.cube(6)
    with pytest.raises(GridBudgetError) as info:
        grid_minimize(OracleQuery([], np.zeros(6), box), 0.01)
    h = info.value.suggested_h
    assert grid_size(box, h) <= 2_000_000
    assert suggest_grid_h(box, 2_000_000) == h


def test_grid_h_for_alpha():
    h = grid_h_for_alpha(0.1, 1000, 1.0, 1)
    assert grid_guarantee(1000 * 1.0, 1, h).alpha == pytest.approx(0.1)


def test_pwl_two_tents_tie_break(line):
    ans = pwl1d_minimize(OracleQuery([HingeLoss([0.0], 10.0), HingeLoss([4.0], 10.0)], np.zeros(1), line))
    assert ans.minimizer[0] == -10.0
    assert ans.value == 0.0
    assert ans.guarantee == EXACT
    # the tie-break must agree with a brute-force scan of the same objective
    x, v = brute_min(lambda x: HingeLoss([0.0], 10.0)([x]) + HingeLoss([4.0], 10.0)([x]), line)
    assert v == ans.value and x == ans.minimizer[0]


def test_pwl_five_candidates_by_hand(line):
    # objective g_0(x) - 0.1 x at -10, -5, 0, 5, 10
    hand = {-10.0: 1.0, -5.0: 0.5, 0.0: 5.0, 5.0: -0.5, 10.0: -1.0}
    ans = pwl1d_minimize(OracleQuery([HingeLoss([0.0], 10.0)], np.array([0.1]), line))
    assert ans.minimizer[0] == min(hand, key=hand.get) == 10.0
    assert ans.value == pytest.approx(-1.0)


def test_pwl_empty_history(line):
    ans = pwl1d_minimize(OracleQuery([], np.zeros(1), line))
    assert ans.minimizer[0] == -10.0


def test_pwl_rejects_opaque_and_multid(line):
    with pytest.raises(OracleError):
        pwl1d_minimize(OracleQuery([SinusoidLoss(1.0, 1.0, [0.0])], np.zeros(1), line))
    with pytest.raises(OracleError):
        pwl1d_minimize(OracleQuery([], np.zeros(2), Box.cube(2)))


def test_query_rejects_dimension_mismatch(line):
    with pytest.raises(ValueError):
        OracleQuery([HingeLoss([0.0, 0.0], 1.0)], np.zeros(1), line)


def test_answer_value_matches_objective(line, stream):
    rng = stream.generator()
    for _ in range(20):
        losses = [HingeLoss(a, 10.0) for a in line.uniform(rng, 5)]
        q = OracleQuery(losses, rng.exponential(1.0, 1), line)
        for ans in (pwl1d_minimize(q), grid_minimize(q, 0.05)):
            assert line.contains(ans.minimizer)
            assert ans.value == pytest.approx(float(q.objective(ans.minimizer)[0]), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=0, max_size=8), st.floats(0, 5), st.floats(0.02, 1.0))
def test_grid_contract_against_exact(centers, s, h):
    box = Box([-10.0], [10.0])
    q = OracleQuery([HingeLoss([a], 10.0) for a in centers], np.array([s]), box)
    exact = pwl1d_minimize(q)
    assert contract_check(grid_minimize(q, h), q, exact.value)
    # the exact oracle never beats a brute-force scan by more than rounding
    _, v = brute_min(lambda x: float(q.objective(np.array([x]))[0]), box, h=0.01)
    assert exact.value <= v + 1e-9


def test_contract_check_cases(line):
    q = OracleQuery([HingeLoss([0.0], 10.0)], np.array([0.5]), line)
    exact = pwl1d_minimize(q)
    assert contract_check(exact, q, exact.value)
    g = OracleGuarantee(0.1, 0.2)
    fake = OracleAnswer(exact.minimizer, exact.value + g.gamma(q.sigma) + 1, g)
    assert not contract_check(fake, q, exact.value)


def test_guarantee_gamma():
    g = OracleGuarantee(0.5, 0.25)
    assert g.gamma(np.array([1.0, 3.0])) == 1.5
    assert not UNKNOWN.certified
    with pytest.raises(ValueError):
        UNKNOWN.gamma(np.zeros(1))
    with pytest.raises(ValueError):
        OracleGuarantee(-1.0, 0.0)


def test_local_search_quadratic(stream):
    f = FunctionLoss(lambda X: ((X - 0.3) ** 2).sum(axis=1), 2.0, 2, "quad")
    ans = local_search_minimize(OracleQuery([f], np.zeros(2), Box.cube(2)), 4, 200, stream)
    assert np.all(np.abs(ans.minimizer - 0.3) <= 1e-3)
    assert ans.guarantee is UNKNOWN or not ans.guarantee.certified


def test_local_search_linear_goes_to_corner(stream):
    ans = local_search_minimize(OracleQuery([], np.ones(3), Box.cube(3)), 2, 200, stream)
    assert np.allclose(ans.minimizer, 1.0)


def test_local_search_matches_exact_on_tents(line, stream):
    rng = stream.generator()
    losses = [HingeLoss(a, 10.0) for a in line.uniform(rng, 6)]
    q = OracleQuery(losses, np.array([0.2]), line)
    ls = local_search_minimize(q, 32, 300, stream.child(1))
    assert ls.value == pytest.approx(pwl1d_minimize(q).value, abs=1e-6)


def test_local_search_is_deterministic(stream):
    q = OracleQuery([SinusoidLoss(1.0, 2.0, [0.3, 1.0])], np.array([0.1, 0.1]), Box.cube(2, -3, 3))
    a = local_search_minimize(q, 3, 50, stream)
    b = local_search_minimize(q, 3, 50, stream)
    assert np.array_equal(a.minimizer, b.minimizer)


def test_exact_minimizer_monotone_in_sigma(line, stream):
    rng = stream.generator()
    for _ in range(200):
        losses = [HingeLoss(a, 10.0) for a in line.uniform(rng, int(rng.integers(0, 10)))]
        s, c = rng.exponential(1.0), rng.exponential(1.0)
        x0 = pwl1d_minimize(OracleQuery(losses, np.array([s]), line)).minimizer[0]
        x1 = pwl1d_minimize(OracleQuery(losses, np.array([s + c]), line)).minimizer[0]
        assert x1 >= x0


@pytest.mark.parametrize("oracle", [PWL1DOracle(), GridOracle(0.05)])
def test_leader_matches_query_oracle(oracle, line, stream):
    rng = stream.generator()
    leader = oracle.leader(line)
    losses = []
    for t in range(60):
        sigma = rng.exponential(0.5, 1)
        guess = losses[-1] if losses and t % 2 else None
        a = leader.solve(sigma, guess)
        b = oracle.minimize(OracleQuery(list(losses), sigma, line, guess))
        assert a.minimizer[0] == b.minimizer[0]
        assert a.value == pytest.approx(b.value, abs=1e-9)
        f = HingeLoss(line.uniform(rng), float(rng.uniform(1, 10)))
        leader.add(f)
        losses.append(f)


def test_pwl_leader_with_linear_losses(line):
    oracle = PWL1DOracle()
    leader = oracle.leader(line)
    losses = [LinearLoss([0.3]), HingeLoss([2.0], 4.0), LinearLoss([-0.5], 1.0)]
    for f in losses:
        leader.add(f)
    ref = pwl1d_minimize(OracleQuery(losses, np.array([0.1]), line))
    ans = leader.solve(np.array([0.1]))
    assert ans.minimizer[0] == ref.minimizer[0]
    assert math.isclose(ans.value, ref.value, abs_tol=1e-12)
