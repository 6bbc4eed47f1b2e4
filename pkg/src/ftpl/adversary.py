"""Loss-sequence generators: oblivious families and adaptive adversaries.

Oblivious adversaries fix the whole sequence before play and never see a
prediction. Adaptive adversaries are handed ``x_1 .. x_{t-1}`` when choosing
``f_t`` and nothing else; in particular never the learner's perturbations.
"""

from __future__ import annotations

import numpy as np

from .domain import Box, Stream
from .learner import Learner, LearnerConfig
from .losses import HingeLoss, LossFunction, SinusoidLoss
from .oracle import PWL1DOracle


def _default_width(box: Box, D: float | None) -> float:
    # [-D, D] with tents of width D is the canonical hard instance.
    return box.linf_diameter / 2 if D is None else float(D)


def oblivious_hinge_sequence(box: Box, T: int, stream: Stream, D: float | None = None) -> list:
    """``T`` tents with centres drawn uniformly from ``box``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    width = _default_width(box, D)
    centers = box.uniform(stream.generator(), T)
    return [HingeLoss(a, width) for a in centers]


def oblivious_sinusoid_sequence(box: Box, T: int, L: float, freq: float, stream: Stream) -> list:
    if T < 1:
        raise ValueError("T must be >= 1")
    phases = stream.generator().uniform(0.0, 2 * np.pi, (T, box.d))
    return [SinusoidLoss(L, freq, p) for p in phases]


def slowly_varying_sequence(box: Box, T: int, block: int, stream: Stream, D: float | None = None) -> list:
    """Tents whose centre is redrawn only every ``block`` rounds."""
    if block < 1:
        raise ValueError("block must be >= 1")
    width = _default_width(box, D)
    n_blocks = -(-T // block)
    centers = box.uniform(stream.generator(), n_blocks)
    losses = []
    for b in range(n_blocks):
        f = HingeLoss(centers[b], width)
        losses.extend([f] * min(block, T - b * block))
    return losses


def killer_next_loss(x_t, D: float) -> HingeLoss:
    """Tent centred at the learner's point, so the learner pays ``D/2``."""
    return HingeLoss(x_t, D)


class Adversary:
    mode = "oblivious"

    def next_loss(self, t: int, past_points: list) -> LossFunction:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"mode": self.mode}


class ObliviousAdversary(Adversary):
    """Replays a sequence fixed before the game; ``past_points`` is ignored."""

    def __init__(self, losses: list, name: str = "oblivious"):
        self._losses = tuple(losses)
        self.name = name

    def next_loss(self, t, past_points):
        return self._losses[t - 1]

    @property
    def losses(self) -> tuple:
        return self._losses

    def descriptor(self):
        return {"mode": self.mode, "name": self.name, "T": len(self._losses)}


class KillerAdversary(Adversary):
    """Plays ``g_{x_t}`` against a deterministic learner.

    The target's ``x_t`` depends only on ``f_1 .. f_{t-1}``, which this
    adversary chose itself, so it recomputes ``x_t`` with its own copy of the
    target learner instead of peeking at the current move.
    """

    mode = "adaptive"

    def __init__(self, box: Box, D: float | None = None, target: LearnerConfig | None = None):
        target = target or LearnerConfig(variant="ftl", oracle=PWL1DOracle())
        if not target.deterministic:
            raise ValueError("the killer construction needs a deterministic target learner")
        self.D = _default_width(box, D)
        self._shadow = Learner(target, box, Stream(0))

    def next_loss(self, t, past_points):
        x_t, _, _ = self._shadow.predict()
        f = killer_next_loss(x_t, self.D)
        self._shadow.observe(f)
        return f

    def descriptor(self):
        return {"mode": self.mode, "name": "killer", "D": self.D}


class ChaserAdversary(Adversary):
    """Adaptive: centres each tent at the learner's previous prediction."""

    mode = "adaptive"

    def __init__(self, box: Box, stream: Stream, D: float | None = None):
        self.D = _default_width(box, D)
        self._first = box.uniform(stream.generator())

    def next_loss(self, t, past_points):
        center = past_points[-1] if past_points else self._first
        return HingeLoss(center, self.D)

    def descriptor(self):
        return {"mode": self.mode, "name": "chaser", "D": self.D}


GENERATORS = ("oblivious_hinge", "oblivious_sinusoid", "slowly_varying", "killer", "chaser")


def build_adversary(spec: dict, box: Box, T: int, stream: Stream, learner: LearnerConfig | None = None) -> Adversary:
    """Instantiate an adversary from a ``{"name": ..., **params}`` descriptor."""
    name = spec["name"]
    D = spec.get("D")
    if name == "oblivious_hinge":
        return ObliviousAdversary(oblivious_hinge_sequence(box, T, stream, D), name)
    if name == "oblivious_sinusoid":
        seq = oblivious_sinusoid_sequence(box, T, spec.get("L", 1.0), spec.get("freq", 1.0), stream)
        return ObliviousAdversary(seq, name)
    if name == "slowly_varying":
        return ObliviousAdversary(slowly_varying_sequence(box, T, int(spec.get("block", 10)), stream, D), name)
    if name == "killer":
        target = learner if learner is not None and learner.deterministic else None
        if target is None:
            target = LearnerConfig(variant="ftl", oracle=learner.oracle if learner else PWL1DOracle())
        return KillerAdversary(box, D, target)
    if name == "chaser":
        return ChaserAdversary(box, stream, D)
    raise ValueError(f"unknown adversary {name!r}; expected one of {GENERATORS}")


def adversary_lipschitz(spec: dict) -> float:
    """Declared l1-Lipschitz constant of the losses a generator emits."""
    if spec["name"] == "oblivious_sinusoid":
        return float(spec.get("L", 1.0))
    return 1.0
