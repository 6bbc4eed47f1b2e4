"""Checks of the monotonicity and be-the-leader inequalities behind FTPL's analysis.

All probes work with a single frozen perturbation vector: predictions are
viewed as functions ``x_t(sigma)`` of that vector. With an exact oracle the
inequalities must hold to floating-point tolerance; with an approximate
oracle they are relaxed by the oracle's reported ``(alpha, beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Box, Stream
from .harness import GameTrace
from .learner import LearnerState, make_guess
from .losses import HingeLoss, SumLoss
from .oracle import Oracle, OracleError, OracleGuarantee, OracleQuery

TOL = 1e-9


@dataclass
class ProbeResult:
    passed: bool
    applicable: bool = True
    lhs: float = math.nan
    rhs: float = math.nan
    checks: dict = field(default_factory=dict)


def _solve(oracle: Oracle, losses, sigma, box: Box, guess=None):
    return oracle.minimize(OracleQuery(list(losses), sigma, box, guess))


def _gamma(sigma, *answers) -> tuple[float, float]:
    """Worst ``(gamma(sigma), beta)`` over the answers' guarantees."""
    gs = [a.guarantee for a in answers]
    if not all(g.certified for g in gs):
        raise OracleError("monotonicity probes need an oracle with a known (alpha, beta)")
    alpha = max(g.alpha for g in gs)
    beta = max(g.beta for g in gs)
    return OracleGuarantee(alpha, beta).gamma(sigma), beta


def _shift(sigma, i: int, c: float) -> np.ndarray:
    s = np.array(sigma, dtype=float)
    s[i] += c
    return s


def probe_monotone1(state: LearnerState, i: int, c: float, sigma, oracle: Oracle, guess=None) -> ProbeResult:
    """``x_{t,i}(sigma + c e_i) >= x_{t,i}(sigma) - 2 gamma(sigma)/c - beta``.

    Pass ``guess`` to probe the optimistic variant (same inequality).
    """
    if not c > 0:
        raise ValueError("c must be > 0")
    box = state.box
    a = _solve(oracle, state.history, sigma, box, guess)
    b = _solve(oracle, state.history, _shift(sigma, i, c), box, guess)
    gamma, beta = _gamma(sigma, a, b)
    lhs = float(b.minimizer[i])
    rhs = float(a.minimizer[i]) - 2 * gamma / c - beta
    return ProbeResult(lhs >= rhs - TOL, True, lhs, rhs)


def probe_monotone2(state: LearnerState, i: int, sigma, L: float, oracle: Oracle) -> ProbeResult:
    """Two-round monotonicity under the shift ``sigma' = sigma + 100 L d e_i``.

    ``state.history`` holds ``f_1 .. f_t``; ``x_t`` uses the first ``t-1``
    losses and ``x_{t+1}`` all of them. ``L`` bounds the l1-Lipschitz
    constant of ``f_t``. Reports not-applicable when
    ``||x_t - x_{t+1}||_1 > 10 d |x_{t,i} - x_{t+1,i}|``.
    """
    box, d = state.box, state.box.d
    if not state.history:
        raise ValueError("probe_monotone2 needs at least one loss (f_t) in the history")
    prev, full = state.history[:-1], state.history
    c = 100 * L * d
    sig2 = _shift(sigma, i, c)
    xt, xt1 = _solve(oracle, prev, sigma, box), _solve(oracle, full, sigma, box)
    xt_s, xt1_s = _solve(oracle, prev, sig2, box), _solve(oracle, full, sig2, box)
    gap_i = abs(float(xt.minimizer[i] - xt1.minimizer[i]))
    if np.abs(xt.minimizer - xt1.minimizer).sum() > 10 * d * gap_i + TOL:
        return ProbeResult(True, applicable=False)
    gamma, beta = _gamma(sigma, xt, xt1, xt_s, xt1_s)
    lhs = min(float(xt_s.minimizer[i]), float(xt1_s.minimizer[i]))
    rhs = max(float(xt.minimizer[i]), float(xt1.minimizer[i])) - gap_i / 10 - 3 * gamma / c - beta
    return ProbeResult(lhs >= rhs - TOL, True, lhs, rhs)


def probe_monotone_oftpl(
    state: LearnerState,
    i: int,
    sigma,
    oracle: Oracle,
    exact_oracle: Oracle,
    guess=None,
    L_t: float | None = None,
    shift: float | None = None,
) -> ProbeResult:
    """Monotonicity of optimistic FTPL against the exact one-step leader.

    ``state.history`` holds ``f_1 .. f_t``. ``x_t`` minimizes
    ``f_{1:t-1} + g_t - sigma`` with ``oracle``; ``xbar_{t+1}`` minimizes
    ``f_{1:t} - sigma`` exactly. With ``c = shift`` (default ``100 L_t d``)
    and ``D_i = |x_{t,i} - xbar_{t+1,i}|`` the checks are::

        xbar_{t+1,i}(sigma') >= x_{t,i}(sigma) - 10 L_t d D_i / c - gamma / c
        x_{t,i}(sigma')      >= xbar_{t+1,i}(sigma) - 10 L_t d D_i / c - 2 gamma / c - beta
        xbar_{t+1,i}(sigma') >= xbar_{t+1,i}(sigma)

    The first two need ``||x_t - xbar_{t+1}||_1 <= 10 d D_i``; the last one
    always applies.
    """
    if not exact_oracle.exact:
        raise OracleError("xbar needs an exact oracle")
    if not state.history:
        raise ValueError("probe_monotone_oftpl needs at least one loss (f_t) in the history")
    box, d = state.box, state.box.d
    prev, full, f_t = state.history[:-1], state.history, state.history[-1]
    if guess is None:
        guess = make_guess("last_loss", prev, d)
    if L_t is None:
        L_t = f_t.lipschitz + guess.lipschitz
    L_t = max(L_t, 1e-6)
    c = 100 * L_t * d if shift is None else float(shift)
    sig2 = _shift(sigma, i, c)
    x, x2 = _solve(oracle, prev, sigma, box, guess), _solve(oracle, prev, sig2, box, guess)
    xb, xb2 = _solve(exact_oracle, full, sigma, box), _solve(exact_oracle, full, sig2, box)
    gamma, beta = _gamma(sigma, x, x2)
    xi, x2i = float(x.minimizer[i]), float(x2.minimizer[i])
    xbi, xb2i = float(xb.minimizer[i]), float(xb2.minimizer[i])
    checks = {"xbar_monotone": (xb2i, xbi, xb2i >= xbi - TOL)}
    gap_i = abs(xi - xbi)
    applicable = np.abs(x.minimizer - xb.minimizer).sum() <= 10 * d * gap_i + TOL
    if applicable:
        slack = 10 * L_t * d * gap_i / c
        rhs_a = xi - slack - gamma / c
        rhs_b = xbi - slack - 2 * gamma / c - beta
        checks["xbar_shifted"] = (xb2i, rhs_a, xb2i >= rhs_a - TOL)
        checks["x_shifted"] = (x2i, rhs_b, x2i >= rhs_b - TOL)
    passed = all(ok for _, _, ok in checks.values())
    return ProbeResult(passed, bool(applicable), checks=checks)


def probe_btl(trace: GameTrace, reference_grid, exact_oracle: Oracle | None = None) -> ProbeResult:
    """Be-the-leader inequality on a frozen-perturbation trace, for every comparator.

    FTPL:  ``sum_t f_t(x_{t+1}) - f_t(x*) <= gamma T + <sigma, x_2 - x*>``.
    OFTPL: ``sum_t [g_t(x_t) - g_t(xbar_{t+1})] + sum_t [f_t(xbar_{t+1}) - f_t(x*)]
    <= <sigma, xbar_2 - x*> + gamma (T - 1)``, where ``xbar_{t+1}`` is the exact
    leader of ``f_{1:t} - sigma`` (recomputed here with ``exact_oracle``).
    """
    if not trace.frozen and not np.all(trace.sigmas == 0):
        raise ValueError("probe_btl needs a frozen-perturbation trace")
    if np.isnan(trace.gammas).any():
        raise OracleError("probe_btl needs a trace produced by an oracle with a known guarantee")
    grid = np.asarray(reference_grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    sigma = trace.sigmas[0]
    T = trace.T
    gamma = float(trace.gammas.max())
    comparator = np.zeros(grid.shape[0])
    for f in trace.losses:
        comparator += f.values(grid)
    learner = trace.config["learner"]
    if learner["variant"] == "oftpl":
        if exact_oracle is None or not exact_oracle.exact:
            raise OracleError("the optimistic be-the-leader check needs an exact oracle for xbar")
        leader = exact_oracle.leader(trace.box)
        total = 0.0
        xbar2 = None
        for t, f in enumerate(trace.losses, start=1):
            leader.add(f)
            xbar = leader.solve(sigma).minimizer
            if t == 1:
                xbar2 = xbar
            g = make_guess(learner["guess_strategy"], trace.losses[: t - 1], trace.box.d)
            x_t = trace.points[t - 1]
            total += g(x_t) - g(xbar) + f(xbar)
        lhs = total - comparator
        rhs = (xbar2 - grid) @ sigma + gamma * (T - 1)
    else:
        nxt = np.vstack([trace.points[1:], trace.next_point[None, :]])
        total = math.fsum(f(x) for f, x in zip(trace.losses, nxt))
        lhs = total - comparator
        rhs = gamma * T + (nxt[0] - grid) @ sigma
    scale = 1.0 + np.abs(comparator).max() + abs(total)
    ok = lhs <= rhs + TOL * scale
    worst = int(np.argmax(lhs - rhs))
    return ProbeResult(bool(ok.all()), True, float(lhs[worst]), float(rhs[worst]))


# -- randomized suites ---------------------------------------------------------


@dataclass
class SuiteResult:
    kind: str
    n: int
    passed: int
    not_applicable: int
    failures: list = field(default_factory=list)

    @property
    def failed(self) -> int:
        return self.n - self.passed - self.not_applicable

    @property
    def ok(self) -> bool:
        return self.failed == 0


SUITES = ("monotone1", "monotone2", "oftpl", "monotone1_oftpl")


def random_instance(rng: np.random.Generator, box: Box, D: float, max_t: int = 30, L: float = 1.0):
    """Random tent history ``f_1 .. f_t`` (each scaled to Lipschitz ``L``) and perturbation."""
    t = int(rng.integers(1, max_t + 1))
    centers = box.uniform(rng, t)
    history = [HingeLoss(a, D) if L == 1.0 else SumLoss([HingeLoss(a, D)], [L]) for a in centers]
    scale = math.exp(rng.uniform(math.log(0.01), math.log(20.0)))
    sigma = rng.exponential(scale, box.d)
    return history, sigma


def run_suite(kind: str, n: int, oracle: Oracle, stream: Stream, box: Box | None = None, D: float = 10.0,
              exact_oracle: Oracle | None = None) -> SuiteResult:
    """Run ``n`` randomized probes of one kind on tent histories in ``box``."""
    if kind not in SUITES:
        raise ValueError(f"unknown probe suite {kind!r}; expected one of {SUITES}")
    box = box or Box([-10.0], [10.0])
    rng = stream.generator()
    res = SuiteResult(kind, n, 0, 0)
    for k in range(n):
        L = float(rng.choice([1.0, 2.0]))
        history, sigma = random_instance(rng, box, D, L=L)
        i = int(rng.integers(box.d))
        if kind == "monotone1":
            c = math.exp(rng.uniform(math.log(0.01), math.log(20.0)))
            r = probe_monotone1(LearnerState(box, history[:-1]), i, c, sigma, oracle)
        elif kind == "monotone1_oftpl":
            c = math.exp(rng.uniform(math.log(0.01), math.log(20.0)))
            strategy = str(rng.choice(["last_loss", "running_average"]))
            guess = make_guess(strategy, history, box.d)
            r = probe_monotone1(LearnerState(box, history), i, c, sigma, oracle, guess=guess)
        elif kind == "monotone2":
            r = probe_monotone2(LearnerState(box, history), i, sigma, L, oracle)
        else:
            strategy = str(rng.choice(["last_loss", "running_average", "zero"]))
            guess = make_guess(strategy, history[:-1], box.d)
            r = probe_monotone_oftpl(LearnerState(box, history), i, sigma, oracle, exact_oracle or oracle, guess)
        if not r.applicable:
            # xbar monotonicity is still checked when the main inequalities do not apply
            if r.passed:
                res.not_applicable += 1
            else:
                res.failures.append((k, r))
        elif r.passed:
            res.passed += 1
        else:
            res.failures.append((k, r))
    return res
