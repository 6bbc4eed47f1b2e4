"""Game loop, regret and stability measurement, rate fits and replication."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import Adversary
from .domain import Box, as_stream, ci_half_width
from .learner import Learner, LearnerConfig
from .oracle import Oracle


class GameError(RuntimeError):
    def __init__(self, round_index: int, cause: Exception):
        self.round = round_index
        self.cause = cause
        super().__init__(f"round {round_index}: {cause}")


class ReplicationError(RuntimeError):
    def __init__(self, replication: int, cause: Exception):
        self.replication = replication
        self.round = getattr(cause, "round", None)
        self.cause = cause
        super().__init__(f"replication {replication}: {cause}")


@dataclass(eq=False)
class GameTrace:
    """Per-round record of one learner-vs-adversary game.

    ``points[t-1]`` is ``x_t``; ``next_point`` is ``x_{T+1}``, computed after
    the last loss without consuming another adversary round.
    """

    config: dict
    box: Box
    seed: str
    sigmas: np.ndarray
    points: np.ndarray
    next_point: np.ndarray
    losses: list
    loss_values: np.ndarray
    gammas: np.ndarray
    frozen: bool = False

    @property
    def T(self) -> int:
        return len(self.losses)

    def stability_increments(self) -> np.ndarray:
        """``||x_t - x_{t+1}||_1`` for ``t = 1 .. T``."""
        nxt = np.vstack([self.points[1:], self.next_point[None, :]])
        return np.abs(self.points - nxt).sum(axis=1)

    def fingerprint(self) -> bytes:
        return b"".join(a.tobytes() for a in (self.sigmas, self.points, self.next_point, self.loss_values))


def play(learner_config: LearnerConfig, adversary: Adversary, box: Box, T: int, seed) -> GameTrace:
    """Simultaneous-move game: ``f_t`` is fixed from ``x_1..x_{t-1}`` before
    ``x_t`` is computed from ``f_1..f_{t-1}``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    stream = as_stream(seed)
    learner = Learner(learner_config, box, stream.child(0))
    d = box.d
    sigmas = np.empty((T, d))
    points = np.empty((T, d))
    values = np.empty(T)
    gammas = np.empty(T)
    losses = []
    past: list = []
    for t in range(1, T + 1):
        try:
            f = adversary.next_loss(t, past)
            x, sigma, answer = learner.predict()
            learner.observe(f)
        except Exception as exc:
            raise GameError(t, exc) from exc
        sigmas[t - 1] = sigma
        points[t - 1] = x
        values[t - 1] = f(x)
        g = answer.guarantee
        gammas[t - 1] = g.gamma(sigma) if g.certified else math.nan
        losses.append(f)
        past.append(x)
    try:
        x_next, _, _ = learner.predict()
    except Exception as exc:
        raise GameError(T + 1, exc) from exc
    return GameTrace(
        config={"learner": learner_config.describe(), "adversary": adversary.descriptor(), "T": T},
        box=box,
        seed=str(stream),
        sigmas=sigmas,
        points=points,
        next_point=np.asarray(x_next, dtype=float),
        losses=losses,
        loss_values=values,
        gammas=gammas,
        frozen=learner.frozen_sigma is not None,
    )


@dataclass
class RegretReport:
    T: int
    avg_regret: float
    best_point: np.ndarray
    best_value: float
    learner_cum_loss: float
    stability_mean: float
    gamma_worst: float
    alpha_band: float = 0.0
    regret_so_far: np.ndarray | None = field(default=None, repr=False)


def _alpha(answer) -> float:
    g = answer.guarantee
    return g.alpha if g.certified else math.nan


def regret(trace: GameTrace, reference_oracle: Oracle, per_round: bool = False) -> RegretReport:
    """Average regret against the best fixed point in hindsight.

    The reference oracle's value is lowered by its alpha so that the reported
    best value is a valid lower bound; ``alpha_band`` is the resulting
    uncertainty on ``avg_regret`` (zero for an exact reference).
    """
    leader = reference_oracle.leader(trace.box)
    zero = np.zeros(trace.box.d)
    prefix = np.empty(trace.T) if per_round else None
    cum_learner = np.cumsum(trace.loss_values)
    for t, f in enumerate(trace.losses, start=1):
        leader.add(f)
        if per_round:
            ans = leader.solve(zero)
            prefix[t - 1] = (cum_learner[t - 1] - (ans.value - _alpha(ans))) / t
    ans = leader.solve(zero)
    alpha = _alpha(ans)
    best_value = ans.value - alpha
    learner_loss = math.fsum(trace.loss_values)
    T = trace.T
    gam = trace.gammas
    return RegretReport(
        T=T,
        avg_regret=(learner_loss - best_value) / T,
        best_point=ans.minimizer,
        best_value=best_value,
        learner_cum_loss=learner_loss,
        stability_mean=float(trace.stability_increments().mean()),
        gamma_worst=float(np.max(gam)) if not np.isnan(gam).any() else math.nan,
        alpha_band=alpha / T,
        regret_so_far=prefix,
    )


# -- statistics ---------------------------------------------------------------


@dataclass
class Summary:
    mean: float
    sd: float
    ci: float
    n: int
    values: np.ndarray = field(repr=False)

    @property
    def upper(self) -> float:
        return self.mean + self.ci

    @property
    def lower(self) -> float:
        return self.mean - self.ci


def summarize(values) -> Summary:
    """Mean, sd and 95% CI half width; ``sd`` is NaN (flagged) when n = 1."""
    v = np.asarray(values, dtype=float)
    n = v.size
    mean = math.fsum(v) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2) / (n - 1)) if n > 1 else math.nan
    return Summary(mean, sd, ci_half_width(sd, n), n, v)


@dataclass
class RateFit:
    points: list
    slope: float
    intercept: float
    r2: float


def rate_fit(points) -> RateFit:
    """Least-squares line through ``(ln T, ln mean_regret)``.

    ``points`` is a list of ``(T, mean_regret, ci)`` tuples.
    """
    pts = [tuple(p) for p in points]
    Ts = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    if len(set(Ts.tolist())) < 4:
        raise ValueError("rate_fit needs at least 4 distinct T values")
    if np.any(ys <= 0):
        raise ValueError("rate_fit needs positive mean regret at every T; increase replications")
    lx, ly = np.log(Ts), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(pts, float(slope), float(intercept), r2)


@dataclass
class Aggregate:
    n: int
    metrics: dict
    results: list = field(repr=False)

    def __getitem__(self, name) -> Summary:
        return self.metrics[name]


def _run_indexed(args):
    fn, i = args
    try:
        return fn(i)
    except Exception as exc:
        raise ReplicationError(i, exc) from exc


def replicate(run_one, n: int, workers: int = 1, indices=None) -> Aggregate:
    """Run ``run_one(i)`` for each replication index and aggregate its metrics.

    ``run_one`` returns a dict whose float entries are aggregated; it must
    derive all randomness from ``i`` so that results do not depend on
    ``workers``. ``indices`` defaults to ``range(n)``; duplicated indices
    reproduce identical replications.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    indices = list(range(n)) if indices is None else list(indices)
    jobs = [(run_one, i) for i in indices]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [_run_indexed(j) for j in jobs]
    keys = [k for k, v in results[0].items() if isinstance(v, (int, float, np.floating))]
    metrics = {k: summarize([r[k] for r in results]) for k in keys}
    return Aggregate(len(results), metrics, results)


# -- stability ----------------------------------------------------------------


def stability_bound(eta: float, L: float, d: int, D: float, alpha: float = 0.0, beta: float = 0.0) -> float:
    """``125 eta L d^2 D + beta d / (20 eta L) + 2 beta d + alpha / (20 L)``."""
    return 125 * eta * L * d * d * D + beta * d / (20 * eta * L) + 2 * beta * d + alpha / (20 * L)


@dataclass
class StabilityCheck:
    mean: float
    ci: float
    bound: float
    n: int
    passed: bool

    @property
    def upper(self) -> float:
        return self.mean + self.ci


def stability_check(traces, eta: float, L: float, d: int, D: float, guarantee=None, min_replications: int = 30):
    """Compare mean ``||x_t - x_{t+1}||_1`` (CI over replications) with the bound.

    Each trace must come from frozen-perturbation FTPL with its own
    independent perturbation.
    """
    traces = list(traces)
    if len(traces) < min_replications:
        raise ValueError(f"stability_check needs >= {min_replications} replications, got {len(traces)}")
    if not all(tr.frozen for tr in traces):
        raise ValueError("stability_check expects frozen-perturbation traces")
    alpha = guarantee.alpha if guarantee is not None else 0.0
    beta = guarantee.beta if guarantee is not None else 0.0
    s = summarize([tr.stability_increments().mean() for tr in traces])
    bound = stability_bound(eta, L, d, D, alpha, beta)
    return StabilityCheck(s.mean, s.ci, bound, s.n, s.upper <= bound)


# -- CSV rows -----------------------------------------------------------------

ROUND_COLUMNS = ("experiment_id", "replication", "t", "regret_so_far", "stability_increment", "sigma_l1")
SUMMARY_COLUMNS = (
    "experiment_id", "T", "mean_regret", "ci", "stability_mean", "bound", "slope", "intercept", "r2",
    "learner_cum_loss", "best_value",
)


def round_rows(experiment_id: str, replication: int, trace: GameTrace, report: RegretReport) -> list:
    if report.regret_so_far is None:
        raise ValueError("per-round rows need regret(..., per_round=True)")
    stab = trace.stability_increments()
    sig = np.abs(trace.sigmas).sum(axis=1)
    return [
        (experiment_id, replication, t, float(report.regret_so_far[t - 1]), float(stab[t - 1]), float(sig[t - 1]))
        for t in range(1, trace.T + 1)
    ]
