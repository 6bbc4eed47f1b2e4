import math

import numpy as np
import pytest

from ftpl import (
    Box,
    GridOracle,
    HingeLoss,
    Learner,
    LearnerConfig,
    LearnerState,
    PWL1DOracle,
    Stream,
    default_eta,
    ftl_predict,
    ftpl_predict,
    make_guess,
    oftpl_predict,
    pwl1d_minimize,
)
from ftpl.oracle import OracleQuery


def test_default_eta_values():
    assert default_eta(1, 1, 10000) == pytest.approx(0.01)
    assert default_eta(2, 4, 100) == pytest.approx(0.025)
    assert default_eta(1.7, 3, 400) == pytest.approx(default_eta(1.7, 3, 100) / 2)
    with pytest.raises(ValueError):
        default_eta(0, 1, 1)


def test_config_validation():
    with pytest.raises(ValueError):
        LearnerConfig(variant="oftpl", eta=1.0)
    with pytest.raises(ValueError):
        LearnerConfig(variant="ftpl", eta=0.0)
    with pytest.raises(ValueError):
        LearnerConfig(variant="sgd")
    assert LearnerConfig(variant="ftl").deterministic
    assert LearnerConfig(variant="ftpl", eta=math.inf).deterministic


def test_ftpl_first_round_upper_corner(stream):
    box = Box([-1.0, 0.0], [2.0, 5.0])
    x = ftpl_predict(LearnerState(box), LearnerConfig("ftpl", 1.0, GridOracle(0.5)), stream)
    assert x.tolist() == [2.0, 5.0]


def test_ftpl_tent_example(line):
    cfg = LearnerConfig("ftpl", 1.0, PWL1DOracle(), "frozen")
    state = LearnerState(line, [HingeLoss([0.0], 10.0)], frozen_sigma=np.array([0.1]))
    assert ftpl_predict(state, cfg, Stream(0))[0] == 10.0


def test_frozen_mode_repeats(line, stream):
    cfg = LearnerConfig("ftpl", 0.5, PWL1DOracle(), "frozen")
    state = LearnerState(line, [HingeLoss([3.0], 10.0)], frozen_sigma=np.array([0.7]))
    assert ftpl_predict(state, cfg, stream)[0] == ftpl_predict(state, cfg, stream)[0]


def test_oftpl_first_round_equals_ftpl(line, stream):
    a = ftpl_predict(LearnerState(line), LearnerConfig("ftpl", 0.3), stream)
    b = oftpl_predict(LearnerState(line), LearnerConfig("oftpl", 0.3, guess_strategy="last_loss"), stream)
    assert np.array_equal(a, b)


def test_oftpl_last_loss_constant_sequence_matches_ftpl_one_round_later(line):
    f = HingeLoss([2.0], 10.0)
    sigma = np.array([0.4])
    o = oftpl_predict(LearnerState(line, [f], sigma), LearnerConfig("oftpl", 1.0, PWL1DOracle(), "frozen", "last_loss"),
                      Stream(0))
    p = ftpl_predict(LearnerState(line, [f, f], sigma), LearnerConfig("ftpl", 1.0, PWL1DOracle(), "frozen"), Stream(0))
    assert np.array_equal(o, p)


def test_make_guess_strategies():
    g2, g7 = HingeLoss([2.0], 10.0), HingeLoss([7.0], 10.0)
    assert make_guess("zero", [g2, g7])([2.0]) == 0.0
    assert make_guess("last_loss", [g2, g7]) is g7
    assert make_guess("last_loss", [])([1.0]) == 0.0
    avg = make_guess("running_average", [HingeLoss([0.0], 10.0), HingeLoss([4.0], 10.0)])
    assert avg([0.0]) == pytest.approx(3.0)
    assert avg.lipschitz == 1.0
    f = HingeLoss([1.0], 4.0)
    same = make_guess("running_average", [f, f])
    xs = np.linspace(-10, 10, 41)[:, None]
    assert np.allclose(same.values(xs), f.values(xs))
    with pytest.raises(ValueError):
        make_guess("oracle", [f])


def test_ftl_examples(line):
    assert ftl_predict(LearnerState(line))[0] == -10.0
    assert ftl_predict(LearnerState(line, [HingeLoss([0.0], 10.0)]))[0] == -10.0
    f = HingeLoss([-8.0], 10.0)
    xs = [ftl_predict(LearnerState(line, [f] * k))[0] for k in range(1, 5)]
    assert len(set(xs)) == 1


def test_oftpl_zero_guess_equals_ftpl(line, stream):
    rng = stream.generator()
    hist = [HingeLoss(a, 10.0) for a in line.uniform(rng, 12)]
    for t in range(1, 13):
        a = ftpl_predict(LearnerState(line, hist[: t - 1]), LearnerConfig("ftpl", 0.2), stream)
        b = oftpl_predict(LearnerState(line, hist[: t - 1]), LearnerConfig("oftpl", 0.2, guess_strategy="zero"), stream)
        assert np.array_equal(a, b)


def test_large_eta_behaves_like_ftl(line):
    rng = Stream(8).generator()
    agree = 0
    for k in range(1000):
        hist = [HingeLoss(a, 10.0) for a in line.uniform(rng, int(rng.integers(1, 8)))]
        x = ftpl_predict(LearnerState(line, hist), LearnerConfig("ftpl", 1e6), Stream(8).child(k))[0]
        q = OracleQuery(hist, np.zeros(1), line)
        best = pwl1d_minimize(q).value
        agree += float(q.objective(np.array([x]))[0]) <= best + 1e-9
    assert agree >= 990


@pytest.mark.parametrize(
    "variant,guess,mode",
    [("ftpl", None, "fresh"), ("ftpl", None, "frozen"), ("oftpl", "last_loss", "fresh"),
     ("oftpl", "running_average", "fresh"), ("oftpl", "zero", "frozen"), ("ftl", None, "fresh")],
)
@pytest.mark.parametrize("oracle", [PWL1DOracle(), GridOracle(0.1)])
def test_stateful_learner_matches_pure_rules(variant, guess, mode, oracle, line):
    """The incremental learner reproduces the from-scratch prediction rules round by round."""
    stream = Stream(31).child(4)
    cfg = LearnerConfig(variant, 0.25, oracle, mode, guess)
    learner = Learner(cfg, line, stream)
    rng = Stream(32).generator()
    history = []
    for t in range(1, 40):
        x, sigma, _ = learner.predict()
        state = LearnerState(line, list(history), learner.frozen_sigma)
        if variant == "ftpl":
            ref = ftpl_predict(state, cfg, stream)
        elif variant == "oftpl":
            ref = oftpl_predict(state, cfg, stream)
        else:
            ref = ftl_predict(state, oracle)
        assert x[0] == ref[0], f"round {t}"
        f = HingeLoss(line.uniform(rng), 10.0)
        learner.observe(f)
        history.append(f)


def test_fresh_sigma_uses_round_position(line):
    stream = Stream(5)
    learner = Learner(LearnerConfig("ftpl", 2.0), line, stream)
    from ftpl import sample_perturbation

    for t in range(1, 6):
        _, sigma, _ = learner.predict()
        assert np.array_equal(sigma, sample_perturbation(2.0, 1, stream, t).sigma)
        learner.observe(HingeLoss([0.0], 10.0))
