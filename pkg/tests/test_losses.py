import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftpl import Box, FunctionLoss, HingeLoss, LinearLoss, SinusoidLoss, Stream, SumLoss, ZeroLoss, lipschitz_audit
from ftpl.losses import scaled


def test_hinge_values_1d():
    g = HingeLoss([3.0], 10.0)
    assert g([3.0]) == 5.0
    assert g([8.0]) == 0.0
    assert g([-2.0]) == 0.0
    assert g([4.5]) == pytest.approx(3.5)
    assert g.breakpoints == (-2.0, 3.0, 8.0)
    assert g.support == (-2.0, 8.0)


def test_hinge_multid_uses_l1_ball():
    g = HingeLoss([0.0, 0.0], 4.0)
    assert g([1.0, 0.5]) == pytest.approx(0.5)
    assert g.breakpoints is None
    assert lipschitz_audit(g, Box.cube(2, -3, 3), 2000, Stream(1)).passed


def test_hinge_rejects_nonpositive_width():
    with pytest.raises(ValueError):
        HingeLoss([0.0], 0.0)


@given(st.floats(-10, 10), st.floats(0.1, 20), st.floats(-20, 20))
def test_hinge_range(a, D, x):
    v = HingeLoss([a], D)([x])
    assert 0.0 <= v <= D / 2 + 1e-12


def test_sum_loss_breakpoints_and_weights():
    f = SumLoss([HingeLoss([0.0], 10.0), HingeLoss([4.0], 10.0)], [0.5, 0.5])
    assert f([0.0]) == pytest.approx(3.0)
    assert f.breakpoints == (-5.0, -1.0, 0.0, 4.0, 5.0, 9.0)
    assert f.support == (-5.0, 9.0)
    assert f.lipschitz == pytest.approx(1.0)
    assert f.kind == "piecewise-linear"


def test_sum_loss_with_opaque_term_has_no_breakpoints():
    f = SumLoss([HingeLoss([0.0], 2.0), SinusoidLoss(1.0, 1.0, [0.0])])
    assert f.breakpoints is None
    assert f.kind == "opaque"


def test_sum_loss_rejects_mixed_dimensions():
    with pytest.raises(ValueError):
        SumLoss([HingeLoss([0.0], 2.0), HingeLoss([0.0, 1.0], 2.0)])


def test_linear_and_zero():
    f = LinearLoss([2.0, -3.0], 1.0)
    assert f([1.0, 1.0]) == 0.0
    assert f.lipschitz == 3.0
    assert ZeroLoss(2).values(np.ones((4, 2))).tolist() == [0.0] * 4


def test_sinusoid_amplitude_and_audit():
    f = SinusoidLoss(1.0, 1.0, [0.3])
    xs = np.linspace(-10, 10, 1001)[:, None]
    assert np.all(np.abs(f.values(xs)) <= 1.0)
    assert lipschitz_audit(f, Box([-10.0], [10.0]), 5000, Stream(3)).passed


def test_sinusoid_phase_shift_cancels():
    f = SinusoidLoss(2.0, 0.5, [0.7])
    g = SinusoidLoss(2.0, 0.5, [0.7 + np.pi])
    xs = np.linspace(-5, 5, 101)[:, None]
    assert np.allclose(f.values(xs) + g.values(xs), 0.0, atol=1e-12)


def test_function_loss_and_scaled():
    f = FunctionLoss(lambda X: X[:, 0] ** 2, 2.0, 1, "square")
    assert f([3.0]) == 9.0
    assert scaled(HingeLoss([0.0], 2.0), -2.0)([0.0]) == -2.0
