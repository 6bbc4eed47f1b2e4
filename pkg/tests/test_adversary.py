import numpy as np
import pytest

from ftpl import (
    Box,
    ChaserAdversary,
    HingeLoss,
    KillerAdversary,
    LearnerConfig,
    ObliviousAdversary,
    PWL1DOracle,
    Stream,
    build_adversary,
    killer_next_loss,
    lipschitz_audit,
    oblivious_hinge_sequence,
    oblivious_sinusoid_sequence,
    play,
    pwl1d_minimize,
    slowly_varying_sequence,
)
from ftpl.adversary import adversary_lipschitz
from ftpl.oracle import OracleQuery


def test_oblivious_hinge_replay(line, stream):
    a = oblivious_hinge_sequence(line, 3, stream, 10.0)
    b = oblivious_hinge_sequence(line, 3, stream, 10.0)
    assert [f.a[0] for f in a] == [f.a[0] for f in b]
    for f in a:
        assert f(f.a) == 5.0
        assert line.contains(f.a)


def test_generated_losses_pass_audit(line, stream):
    for f in oblivious_hinge_sequence(line, 5, stream, 10.0):
        assert lipschitz_audit(f, line, 10**4, stream.child(1)).passed
    for f in oblivious_sinusoid_sequence(line, 5, 1.5, 2.0, stream):
        assert lipschitz_audit(f, line, 10**4, stream.child(2)).passed
    box2 = Box.cube(2, -1, 1)
    for f in oblivious_hinge_sequence(box2, 3, stream):
        assert lipschitz_audit(f, box2, 2000, stream.child(3)).passed


def test_sinusoid_range(line, stream):
    xs = np.linspace(-10, 10, 501)[:, None]
    for f in oblivious_sinusoid_sequence(line, 4, 1.0, 1.0, stream):
        assert np.all(np.abs(f.values(xs)) <= 1.0)


def test_killer_next_loss():
    f = killer_next_loss(np.array([3.0]), 10.0)
    assert f([3.0]) == 5.0
    for x in (-2.0, -5.0, 8.0, 9.5):
        assert f([x]) == 0.0


def test_slowly_varying_blocks(line, stream):
    seq = slowly_varying_sequence(line, 100, 10, stream, 10.0)
    assert len(seq) == 100
    assert len({f.a[0] for f in seq}) == 10
    assert all(seq[t] is seq[t - 1] for t in range(1, 100) if t % 10)
    const = slowly_varying_sequence(line, 7, 7, stream, 10.0)
    assert len({id(f) for f in const}) == 1
    with pytest.raises(ValueError):
        slowly_varying_sequence(line, 5, 0, stream)


def test_slowly_varying_block_one_is_oblivious_distribution(line):
    a = slowly_varying_sequence(line, 50, 1, Stream(4), 10.0)
    b = oblivious_hinge_sequence(line, 50, Stream(4), 10.0)
    assert [f.a[0] for f in a] == [f.a[0] for f in b]


@pytest.mark.parametrize("target", [LearnerConfig("ftl"), LearnerConfig("ftpl", float("inf"))])
def test_killer_beats_any_deterministic_learner(target, line):
    T, D = 200, 10.0
    trace = play(target, KillerAdversary(line, D, target), line, T, Stream(0))
    assert np.all(trace.loss_values == D / 2)
    best = pwl1d_minimize(OracleQuery(trace.losses, np.zeros(1), line)).value
    assert best <= D * T / 4


def test_killer_requires_deterministic_target(line):
    with pytest.raises(ValueError):
        KillerAdversary(line, 10.0, LearnerConfig("ftpl", 1.0))


def test_chaser_uses_only_past_points(line, stream):
    adv = ChaserAdversary(line, stream, 10.0)
    first = adv.next_loss(1, [])
    assert line.contains(first.a)
    f = adv.next_loss(2, [np.array([1.5])])
    assert f.a[0] == 1.5


def test_oblivious_adversary_ignores_points(line, stream):
    seq = oblivious_hinge_sequence(line, 4, stream)
    adv = ObliviousAdversary(seq)
    assert adv.next_loss(2, [np.array([0.0])]) is seq[1]
    assert adv.next_loss(2, []) is seq[1]


def test_build_adversary_dispatch(line, stream):
    for name in ("oblivious_hinge", "oblivious_sinusoid", "slowly_varying", "killer", "chaser"):
        adv = build_adversary({"name": name, "D": 10.0}, line, 20, stream)
        assert adv.next_loss(1, []) is not None
    with pytest.raises(ValueError):
        build_adversary({"name": "nope"}, line, 5, stream)
    assert adversary_lipschitz({"name": "oblivious_sinusoid", "L": 3.0}) == 3.0


def test_default_width_is_half_linf_diameter(line, stream):
    assert oblivious_hinge_sequence(line, 1, stream)[0].D == 10.0
    assert isinstance(KillerAdversary(line).next_loss(1, []), HingeLoss)
