"""Mixed equilibria of ``min_x max_y M(x, y)`` by self-play of two FTPL learners."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Box, as_stream
from .learner import Learner, LearnerConfig
from .losses import FunctionLoss, HingeLoss, LinearLoss, LossFunction, SumLoss
from .oracle import Oracle


class PayoffFunction:
    """Payoff ``M(x, y)`` with l1-Lipschitz constants in each argument.

    Subclasses provide the two sections: ``x_loss(y) = M(., y)`` seen by the
    minimizing player and ``y_loss(x) = -M(x, .)`` seen by the maximizing one.
    """

    box_x: Box
    box_y: Box
    L_x: float
    L_y: float

    def __call__(self, x, y) -> float:
        return self.x_loss(np.asarray(y, dtype=float))(x)

    def x_loss(self, y) -> LossFunction:
        raise NotImplementedError

    def y_loss(self, x) -> LossFunction:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"name": type(self).__name__}


class BilinearPayoff(PayoffFunction):
    """``M(x, y) = x^T A y``."""

    def __init__(self, A, box_x: Box, box_y: Box):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        if self.A.shape != (box_x.d, box_y.d):
            raise ValueError(f"A has shape {self.A.shape}, boxes need ({box_x.d}, {box_y.d})")
        self.box_x, self.box_y = box_x, box_y
        ymax = np.maximum(np.abs(box_y.lo), np.abs(box_y.hi))
        xmax = np.maximum(np.abs(box_x.lo), np.abs(box_x.hi))
        self.L_x = float((np.abs(self.A) @ ymax).max())
        self.L_y = float((np.abs(self.A.T) @ xmax).max())

    def __call__(self, x, y):
        return float(np.asarray(x, dtype=float) @ self.A @ np.asarray(y, dtype=float))

    def x_loss(self, y):
        return LinearLoss(self.A @ np.asarray(y, dtype=float))

    def y_loss(self, x):
        return LinearLoss(-(np.asarray(x, dtype=float) @ self.A))

    def descriptor(self):
        return {"name": "bilinear", "A": self.A.tolist()}


class HingePayoff(PayoffFunction):
    """``M(x, y) = g_y(x)``: the maximizer places a tent, the minimizer avoids it."""

    def __init__(self, D: float, box: Box):
        self.D = float(D)
        self.box_x = self.box_y = box
        self.L_x = self.L_y = 1.0

    def __call__(self, x, y):
        return HingeLoss(y, self.D)(x)

    def x_loss(self, y):
        return HingeLoss(y, self.D)

    def y_loss(self, x):
        # g_y(x) is symmetric in (x, y)
        return SumLoss([HingeLoss(x, self.D)], [-1.0])

    def descriptor(self):
        return {"name": "hinge", "D": self.D}


class FunctionPayoff(PayoffFunction):
    """Opaque payoff from a scalar callable ``fn(x, y)``; sections are evaluated row by row."""

    def __init__(self, fn, L_x: float, L_y: float, box_x: Box, box_y: Box, name: str = "function"):
        self.fn = fn
        self.L_x, self.L_y = float(L_x), float(L_y)
        self.box_x, self.box_y = box_x, box_y
        self.name = name

    def __call__(self, x, y):
        return float(self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))

    def x_loss(self, y):
        y = np.asarray(y, dtype=float).copy()
        return FunctionLoss(lambda X: np.array([self.fn(x, y) for x in X]), self.L_x, self.box_x.d, self.name)

    def y_loss(self, x):
        x = np.asarray(x, dtype=float).copy()
        return FunctionLoss(lambda Y: np.array([-self.fn(x, y) for y in Y]), self.L_y, self.box_y.d, self.name)

    def descriptor(self):
        return {"name": self.name}


@dataclass(eq=False)
class MixedStrategy:
    """Uniform mixture over ``atoms`` (one row per round)."""

    atoms: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        n = len(self.atoms)
        return np.full(n, 1.0 / n)

    def mean(self) -> np.ndarray:
        return self.atoms.mean(axis=0)


@dataclass(eq=False)
class SaddleResult:
    mix_x: MixedStrategy
    mix_y: MixedStrategy
    payoffs: np.ndarray
    seed: str
    config: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.mix_x
        yield self.mix_y

    @property
    def T(self) -> int:
        return len(self.payoffs)


class SaddleError(RuntimeError):
    def __init__(self, player: str, round_index: int, cause: Exception):
        self.player = player
        self.round = round_index
        self.cause = cause
        super().__init__(f"{player}-player, round {round_index}: {cause}")


def solve_saddle(M: PayoffFunction, T: int, learner_config_x: LearnerConfig, learner_config_y: LearnerConfig,
                 seed) -> SaddleResult:
    """Self-play: the x-player sees ``M(., y_t)``, the y-player ``-M(x_t, .)``; moves are simultaneous."""
    if T < 1:
        raise ValueError("T must be >= 1")
    for cfg in (learner_config_x, learner_config_y):
        if cfg.variant not in ("ftpl", "oftpl"):
            raise ValueError("saddle self-play needs ftpl or oftpl learners")
    stream = as_stream(seed)
    px = Learner(learner_config_x, M.box_x, stream.child(0))
    py = Learner(learner_config_y, M.box_y, stream.child(1))
    xs = np.empty((T, M.box_x.d))
    ys = np.empty((T, M.box_y.d))
    pay = np.empty(T)
    for t in range(1, T + 1):
        try:
            x, _, _ = px.predict()
        except Exception as exc:
            raise SaddleError("x", t, exc) from exc
        try:
            y, _, _ = py.predict()
        except Exception as exc:
            raise SaddleError("y", t, exc) from exc
        xs[t - 1], ys[t - 1] = x, y
        try:
            # the realized payoff is the x-player's loss at its own move
            pay[t - 1] = M(x, y)
            px.observe(M.x_loss(y))
        except Exception as exc:
            raise SaddleError("x", t, exc) from exc
        try:
            py.observe(M.y_loss(x))
        except Exception as exc:
            raise SaddleError("y", t, exc) from exc
    config = {"payoff": M.descriptor(), "x": learner_config_x.describe(), "y": learner_config_y.describe(), "T": T}
    return SaddleResult(MixedStrategy(xs), MixedStrategy(ys), pay, str(stream), config)


@dataclass
class GapReport:
    gap: float
    alpha_band: float
    max_y: float
    min_x: float
    best_x: np.ndarray
    best_y: np.ndarray


def _section_min(oracle: Oracle, box: Box, losses) -> tuple[float, np.ndarray, float]:
    leader = oracle.leader(box)
    for f in losses:
        leader.add(f)
    ans = leader.solve(np.zeros(box.d))
    alpha = ans.guarantee.alpha if ans.guarantee.certified else math.nan
    n = len(losses)
    return ans.value / n, ans.minimizer, alpha / n


def duality_gap(M: PayoffFunction, mix_x: MixedStrategy, mix_y: MixedStrategy, reference_oracle: Oracle) -> GapReport:
    """``max_y avg_t M(x_t, y) - min_x avg_t M(x, y_t)``.

    Each side is an oracle minimization of an averaged section. The true gap
    lies in ``[gap, gap + alpha_band]``; ``alpha_band`` is zero for an exact
    reference.
    """
    neg_max, y_best, a_y = _section_min(reference_oracle, M.box_y, [M.y_loss(x) for x in mix_x.atoms])
    min_x, x_best, a_x = _section_min(reference_oracle, M.box_x, [M.x_loss(y) for y in mix_y.atoms])
    max_y = -neg_max
    return GapReport(max_y - min_x, a_x + a_y, max_y, min_x, x_best, y_best)


def self_play_regrets(M: PayoffFunction, result: SaddleResult, reference_oracle: Oracle) -> tuple[float, float, float]:
    """Average regrets of both players and the reference's alpha band.

    ``regret_x + regret_y`` equals the duality gap of the empirical mixtures
    when the reference is exact.
    """
    avg_pay = math.fsum(result.payoffs) / result.T
    min_x, _, a_x = _section_min(reference_oracle, M.box_x, [M.x_loss(y) for y in result.mix_y.atoms])
    neg_max, _, a_y = _section_min(reference_oracle, M.box_y, [M.y_loss(x) for x in result.mix_x.atoms])
    regret_x = avg_pay - min_x
    regret_y = -avg_pay - neg_max
    return regret_x, regret_y, a_x + a_y


PER_ROUND_COLUMNS = ("t", "x", "y", "payoff")
SUMMARY_COLUMNS = ("T", "gap", "gap_alpha_band", "regret_x", "regret_y")


def saddle_round_rows(result: SaddleResult) -> tuple[tuple, list]:
    """Header and rows of the per-round file; vector moves get one column per coordinate."""
    dx, dy = result.mix_x.atoms.shape[1], result.mix_y.atoms.shape[1]
    xcols = ["x"] if dx == 1 else [f"x_{k + 1}" for k in range(dx)]
    ycols = ["y"] if dy == 1 else [f"y_{k + 1}" for k in range(dy)]
    header = ("t", *xcols, *ycols, "payoff")
    rows = [
        (t, *map(float, result.mix_x.atoms[t - 1]), *map(float, result.mix_y.atoms[t - 1]), float(result.payoffs[t - 1]))
        for t in range(1, result.T + 1)
    ]
    return header, rows
