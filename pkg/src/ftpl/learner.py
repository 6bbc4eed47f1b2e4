"""FTPL, optimistic FTPL and follow-the-leader prediction rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Box, Stream, perturbation_rows, sample_perturbation
from .losses import LossFunction, SumLoss, ZeroLoss
from .oracle import Oracle, OracleAnswer, OracleQuery, PWL1DOracle

VARIANTS = ("ftpl", "oftpl", "ftl")
GUESSES = ("zero", "last_loss", "running_average")
MODES = ("fresh", "frozen")


@dataclass
class LearnerConfig:
    variant: str = "ftpl"
    eta: float = 1.0
    oracle: Oracle = field(default_factory=PWL1DOracle)
    perturbation_mode: str = "fresh"
    guess_strategy: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.perturbation_mode not in MODES:
            raise ValueError(f"perturbation_mode must be one of {MODES}, got {self.perturbation_mode!r}")
        if self.variant == "oftpl":
            if self.guess_strategy is None:
                raise ValueError("oftpl requires a guess_strategy")
            if self.guess_strategy not in GUESSES:
                raise ValueError(f"guess_strategy must be one of {GUESSES}, got {self.guess_strategy!r}")
        if self.variant != "ftl" and not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")

    @property
    def deterministic(self) -> bool:
        return self.variant == "ftl" or math.isinf(self.eta)

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "eta": self.eta,
            "oracle": self.oracle.descriptor(),
            "perturbation_mode": self.perturbation_mode,
            "guess_strategy": self.guess_strategy,
        }


@dataclass
class LearnerState:
    """Round ``t`` (1-based) and the losses ``f_1 .. f_{t-1}`` seen so far."""

    box: Box
    history: list = field(default_factory=list)
    frozen_sigma: np.ndarray | None = None

    @property
    def round(self) -> int:
        return len(self.history) + 1


def default_eta(L: float, d: int, T: int) -> float:
    """``1 / (L sqrt(d T))``, balancing ``eta d^2 D L^2`` against ``d D / (eta T)``."""
    if not (L > 0 and d >= 1 and T >= 1):
        raise ValueError(f"default_eta needs L > 0, d >= 1, T >= 1; got L={L}, d={d}, T={T}")
    return 1.0 / (L * math.sqrt(d * T))


def make_guess(strategy: str | None, history: list, d: int = 1) -> LossFunction:
    """Guess ``g_t`` of the next loss from ``f_1 .. f_{t-1}``; zero at ``t = 1``."""
    if strategy in (None, "zero") or not history:
        if strategy not in (None, *GUESSES):
            raise ValueError(f"unknown guess strategy {strategy!r}")
        return ZeroLoss(history[0].d if history else d)
    if strategy == "last_loss":
        return history[-1]
    if strategy == "running_average":
        n = len(history)
        return SumLoss(history, np.full(n, 1.0 / n), lipschitz=max(f.lipschitz for f in history))
    raise ValueError(f"unknown guess strategy {strategy!r}")


def _sigma(state: LearnerState, config: LearnerConfig, stream: Stream) -> np.ndarray:
    d = state.box.d
    if config.variant == "ftl" or math.isinf(config.eta):
        return np.zeros(d)
    if config.perturbation_mode == "frozen":
        if state.frozen_sigma is None:
            raise ValueError("frozen perturbation mode needs state.frozen_sigma")
        return np.asarray(state.frozen_sigma, dtype=float)
    return sample_perturbation(config.eta, d, stream, position=state.round).sigma


def ftpl_predict(state: LearnerState, config: LearnerConfig, stream: Stream) -> np.ndarray:
    """Oracle minimizer of ``sum_{i<t} f_i(x) - <sigma_t, x>``."""
    sigma = _sigma(state, config, stream)
    q = OracleQuery(list(state.history), sigma, state.box)
    return config.oracle.minimize(q).minimizer


def oftpl_predict(state: LearnerState, config: LearnerConfig, stream: Stream) -> np.ndarray:
    """Oracle minimizer of ``sum_{i<t} f_i(x) + g_t(x) - <sigma_t, x>``."""
    sigma = _sigma(state, config, stream)
    guess = make_guess(config.guess_strategy, state.history, state.box.d)
    q = OracleQuery(list(state.history), sigma, state.box, guess)
    return config.oracle.minimize(q).minimizer


def ftl_predict(state: LearnerState, oracle: Oracle | None = None) -> np.ndarray:
    """Unperturbed leader; the lower box corner at ``t = 1``."""
    if not state.history:
        return state.box.lo.copy()
    oracle = oracle or PWL1DOracle()
    q = OracleQuery(list(state.history), np.zeros(state.box.d), state.box)
    return oracle.minimize(q).minimizer


class Learner:
    """Stateful player for game loops.

    Produces the same points as ``ftpl_predict``/``oftpl_predict``/
    ``ftl_predict`` but keeps the cumulative loss inside an incremental
    ``Leader`` so that each round does not re-sum the whole history.
    Perturbations for round ``t`` come from stream position ``t``; in frozen
    mode a single vector is drawn from position 0.
    """

    _BLOCK = 4096

    def __init__(self, config: LearnerConfig, box: Box, stream: Stream):
        self.config = config
        self.box = box
        self.stream = stream
        self.leader = config.oracle.leader(box)
        self.frozen_sigma = None
        if config.perturbation_mode == "frozen" and not config.deterministic:
            self.frozen_sigma = sample_perturbation(config.eta, box.d, stream, 0).sigma
        self._rows = None
        self._rows_start = 0

    @property
    def history(self) -> list:
        return self.leader.history

    @property
    def round(self) -> int:
        return len(self.leader.history) + 1

    def state(self) -> LearnerState:
        return LearnerState(self.box, list(self.history), self.frozen_sigma)

    def sigma(self, t: int) -> np.ndarray:
        if self.config.deterministic:
            return np.zeros(self.box.d)
        if self.frozen_sigma is not None:
            return self.frozen_sigma
        if self._rows is None or not (self._rows_start <= t < self._rows_start + len(self._rows)):
            self._rows_start = t
            self._rows = perturbation_rows(self.config.eta, self.box.d, self.stream, t, self._BLOCK)
        return self._rows[t - self._rows_start]

    def predict(self) -> tuple[np.ndarray, np.ndarray, OracleAnswer]:
        t = self.round
        sigma = self.sigma(t)
        cfg = self.config
        if cfg.variant == "ftl" and t == 1:
            lo = self.box.lo.copy()
            return lo, sigma, OracleAnswer(lo, 0.0)
        guess, weight = None, 1.0
        if cfg.variant == "oftpl" and self.history:
            if cfg.guess_strategy == "last_loss":
                guess = self.history[-1]
            elif cfg.guess_strategy == "running_average":
                weight = 1.0 + 1.0 / len(self.history)
        answer = self.leader.solve(sigma, guess, weight)
        return answer.minimizer, sigma, answer

    def observe(self, loss: LossFunction) -> None:
        self.leader.add(loss)
