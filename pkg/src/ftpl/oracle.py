"""Offline optimization oracles for objectives ``sum_k f_k(x) + g(x) - <sigma, x>``.

An (alpha, beta)-approximate oracle returns a point whose objective value is
within ``alpha + beta * ||sigma||_1`` of the infimum over the box. Three
backends are provided:

* ``pwl1d``: exact (alpha = beta = 0) for one-dimensional piecewise-linear
  objectives, by enumerating breakpoints.
* ``grid``: best point of an axis-aligned grid, with a reported guarantee
  derived from the Lipschitz constant of the objective.
* ``local_search``: multistart coordinate search with no guarantee.

Ties are always broken toward the lexicographically smallest point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Box, Stream
from .losses import LossFunction

DEFAULT_GRID_BUDGET = 2_000_000
_CHUNK = 262_144


class OracleError(ValueError):
    pass


class GridBudgetError(OracleError):
    def __init__(self, n_points: int, budget: int, suggested_h: float):
        self.n_points = n_points
        self.budget = budget
        self.suggested_h = suggested_h
        super().__init__(
            f"grid needs {n_points} points but the budget is {budget}; "
            f"coarsen h to at least {suggested_h:.6g} or reduce the dimension"
        )


@dataclass(frozen=True)
class OracleGuarantee:
    """``alpha``/``beta`` of the approximation contract; ``None`` means no guarantee."""

    alpha: float | None
    beta: float | None

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValueError(f"{name} must be >= 0, got {v}")

    @property
    def certified(self) -> bool:
        return self.alpha is not None and self.beta is not None

    def gamma(self, sigma) -> float:
        if not self.certified:
            raise OracleError("heuristic oracle answers carry no (alpha, beta) guarantee")
        return self.alpha + self.beta * float(np.abs(np.asarray(sigma)).sum())


EXACT = OracleGuarantee(0.0, 0.0)
UNKNOWN = OracleGuarantee(None, None)


@dataclass(eq=False)
class OracleQuery:
    losses: list
    sigma: np.ndarray
    box: Box
    guess: LossFunction | None = None

    def __post_init__(self):
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if self.sigma.shape != (self.box.d,):
            raise OracleError(f"sigma has shape {self.sigma.shape}, box has d={self.box.d}")
        for f in self.terms:
            if f.d != self.box.d:
                raise OracleError(f"loss of dimension {f.d} on a box of dimension {self.box.d}")

    @property
    def terms(self) -> list:
        return list(self.losses) + ([self.guess] if self.guess is not None else [])

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of the non-linear part (losses plus guess)."""
        return float(sum(f.lipschitz for f in self.terms))

    def objective(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        out = -(X @ self.sigma)
        for f in self.terms:
            out = out + f.values(X)
        return out


@dataclass(eq=False)
class OracleAnswer:
    minimizer: np.ndarray
    value: float
    guarantee: OracleGuarantee = field(default=EXACT)


def _first_min(values: np.ndarray) -> int:
    # np.argmin returns the first occurrence, i.e. the smallest candidate when
    # candidates are enumerated in lexicographic order.
    return int(np.argmin(values))


# -- exact 1-d piecewise-linear ----------------------------------------------


def pwl_candidates(terms, box: Box) -> np.ndarray:
    if box.d != 1:
        raise OracleError(f"pwl1d oracle is one-dimensional, got d={box.d}")
    lo, hi = float(box.lo[0]), float(box.hi[0])
    pts = [lo, hi]
    for f in terms:
        b = f.breakpoints if f.d == 1 else None
        if b is None:
            raise OracleError(f"pwl1d oracle needs piecewise-linear losses, got {f.kind!r}")
        pts.extend(p for p in b if lo < p < hi)
    return np.unique(np.asarray(pts, dtype=float))


def pwl1d_minimize(q: OracleQuery) -> OracleAnswer:
    """Exact global minimizer of a 1-d piecewise-linear objective.

    The objective is linear between consecutive kinks, so its minimum over
    ``[lo, hi]`` is attained at a kink or an endpoint.
    """
    cand = pwl_candidates(q.terms, q.box)
    vals = q.objective(cand[:, None])
    k = _first_min(vals)
    return OracleAnswer(np.array([cand[k]]), float(vals[k]), EXACT)


# -- grid --------------------------------------------------------------------


def grid_axes(box: Box, h: float) -> list[np.ndarray]:
    if not h > 0:
        raise OracleError(f"grid spacing h must be > 0, got {h}")
    axes = []
    for lo, hi in zip(box.lo, box.hi):
        n = int(math.ceil((hi - lo) / h - 1e-9)) + 1
        axes.append(np.linspace(lo, hi, max(n, 2)))
    return axes


def grid_size(box: Box, h: float) -> int:
    return int(np.prod([a.size for a in grid_axes(box, h)], dtype=object))


def suggest_grid_h(box: Box, budget: int) -> float:
    """Smallest spacing whose grid fits in ``budget`` points."""
    per_axis = max(int(math.floor(budget ** (1.0 / box.d) + 1e-9)), 2)
    h = box.linf_diameter / (per_axis - 1)
    while grid_size(box, h) > budget:
        h *= 1.0001
    return h


def check_grid_budget(box: Box, h: float, budget: int = DEFAULT_GRID_BUDGET) -> int:
    n = grid_size(box, h)
    if n > budget:
        raise GridBudgetError(n, budget, suggest_grid_h(box, budget))
    return n


def grid_points(box: Box, h: float, budget: int = DEFAULT_GRID_BUDGET) -> np.ndarray:
    """All grid points in lexicographic order, shape ``(n, d)``."""
    check_grid_budget(box, h, budget)
    axes = grid_axes(box, h)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_guarantee(lipschitz: float, d: int, h: float) -> OracleGuarantee:
    """Every box point is within ``d*h/2`` (l1) of a grid point, which bounds
    the loss part by ``L*d*h/2`` and the linear part by ``||sigma||_1 * d*h/2``."""
    return OracleGuarantee(lipschitz * d * h / 2, d * h / 2)


def grid_minimize(q: OracleQuery, h: float, budget: int = DEFAULT_GRID_BUDGET) -> OracleAnswer:
    check_grid_budget(q.box, h, budget)
    axes = grid_axes(q.box, h)
    shape = tuple(a.size for a in axes)
    total = int(np.prod(shape))
    best_val, best_x = math.inf, None
    for start in range(0, total, _CHUNK):
        idx = np.unravel_index(np.arange(start, min(start + _CHUNK, total)), shape)
        X = np.stack([axes[i][idx[i]] for i in range(len(axes))], axis=1)
        vals = q.objective(X)
        k = _first_min(vals)
        if vals[k] < best_val:
            best_val, best_x = float(vals[k]), X[k].copy()
    return OracleAnswer(best_x, best_val, grid_guarantee(q.lipschitz, q.box.d, h))


# -- heuristic local search ---------------------------------------------------


def local_search_minimize(q: OracleQuery, restarts: int, steps: int, stream: Stream) -> OracleAnswer:
    """Multistart coordinate pattern search.

    Each start probes ``x +- step * e_i`` (clipped to the box) and moves to
    the best improving probe; the step halves whenever no probe improves.
    The answer carries no guarantee.
    """
    if restarts < 1 or steps < 1:
        raise OracleError("restarts and steps must be >= 1")
    box = q.box
    rng = stream.generator()
    starts = box.uniform(rng, restarts)
    eye = np.eye(box.d)
    best_val, best_x = math.inf, None
    for x in starts:
        fx = float(q.objective(x)[0])
        step = box.edges / 4
        for _ in range(steps):
            probes = box.clip(np.concatenate([x + eye * step, x - eye * step]))
            vals = q.objective(probes)
            k = _first_min(vals)
            if vals[k] < fx:
                x, fx = probes[k], float(vals[k])
            else:
                step = step / 2
                if np.all(step < 1e-13 * np.maximum(1.0, box.edges)):
                    break
        if fx < best_val or (fx == best_val and tuple(x) < tuple(best_x)):
            best_val, best_x = fx, x.copy()
    return OracleAnswer(best_x, best_val, UNKNOWN)


def contract_check(answer: OracleAnswer, q: OracleQuery, reference_min: float, tol: float = 1e-9) -> bool:
    """True iff ``answer.value <= reference_min + alpha + beta*||sigma||_1 + tol``."""
    return bool(answer.value <= reference_min + answer.guarantee.gamma(q.sigma) + tol)


# -- backends usable by learners ----------------------------------------------


class Oracle:
    name = "oracle"
    exact = False

    def minimize(self, q: OracleQuery) -> OracleAnswer:
        raise NotImplementedError

    def leader(self, box: Box) -> "Leader":
        """Incremental solver for growing sums of losses (see ``Leader``)."""
        return QueryLeader(self, box)

    def descriptor(self) -> dict:
        return {"name": self.name}


class PWL1DOracle(Oracle):
    name = "pwl1d"
    exact = True

    def minimize(self, q):
        return pwl1d_minimize(q)

    def leader(self, box):
        return PWLLeader(box)


class GridOracle(Oracle):
    name = "grid"

    def __init__(self, h: float, budget: int = DEFAULT_GRID_BUDGET):
        self.h = float(h)
        self.budget = int(budget)

    def minimize(self, q):
        return grid_minimize(q, self.h, self.budget)

    def leader(self, box):
        return GridLeader(box, self.h, self.budget)

    def descriptor(self):
        return {"name": self.name, "h": self.h, "budget": self.budget}


class LocalSearchOracle(Oracle):
    name = "local_search"

    def __init__(self, restarts: int, steps: int, stream: Stream):
        self.restarts = int(restarts)
        self.steps = int(steps)
        self.stream = stream

    def minimize(self, q):
        return local_search_minimize(q, self.restarts, self.steps, self.stream)

    def descriptor(self):
        return {"name": self.name, "restarts": self.restarts, "steps": self.steps, "stream": str(self.stream)}


# -- leaders: oracles over a growing cumulative loss --------------------------


class Leader:
    """Oracle over ``w * sum_{s<=t} f_s + g - <sigma, x>`` for a growing history.

    ``add`` appends a loss; ``solve`` answers one query. ``history_weight``
    scales the cumulative sum (used for the running-average guess, where
    ``F + F/(t-1) = (1 + 1/(t-1)) F``).
    """

    def __init__(self, box: Box):
        self.box = box
        self.history: list = []
        self.lipschitz = 0.0

    def add(self, loss: LossFunction) -> None:
        if loss.d != self.box.d:
            raise OracleError(f"loss of dimension {loss.d} on a box of dimension {self.box.d}")
        self.history.append(loss)
        self.lipschitz += loss.lipschitz

    def solve(self, sigma, guess: LossFunction | None = None, history_weight: float = 1.0) -> OracleAnswer:
        raise NotImplementedError


class QueryLeader(Leader):
    """Rebuilds a full ``OracleQuery`` per call; works with any backend."""

    def __init__(self, oracle: Oracle, box: Box):
        super().__init__(box)
        self.oracle = oracle

    def solve(self, sigma, guess=None, history_weight=1.0):
        from .losses import SumLoss

        losses = list(self.history)
        if history_weight != 1.0 and losses:
            losses = [SumLoss(losses, np.full(len(losses), history_weight))]
        return self.oracle.minimize(OracleQuery(losses, sigma, self.box, guess))


class PWLLeader(Leader):
    """Exact 1-d leader that keeps the cumulative loss tabulated at its kinks.

    Between consecutive kinks the cumulative loss is linear, so a new kink's
    value is obtained by interpolation, and adding a loss only touches the
    candidates inside its support. Each round costs O(number of kinks).
    """

    def __init__(self, box: Box):
        if box.d != 1:
            raise OracleError(f"pwl1d oracle is one-dimensional, got d={box.d}")
        super().__init__(box)
        self.lo, self.hi = float(box.lo[0]), float(box.hi[0])
        self._x = np.empty(64)
        self._v = np.empty(64)
        self._x[:2] = (self.lo, self.hi)
        self._v[:2] = 0.0
        self._n = 2

    @property
    def candidates(self) -> np.ndarray:
        return self._x[: self._n]

    @property
    def cumulative(self) -> np.ndarray:
        return self._v[: self._n]

    def _grow(self, extra: int) -> None:
        need = self._n + extra
        if need > self._x.size:
            cap = max(need, 2 * self._x.size)
            for name in ("_x", "_v"):
                old = getattr(self, name)
                new = np.empty(cap)
                new[: self._n] = old[: self._n]
                setattr(self, name, new)

    def _interp(self, pts) -> np.ndarray:
        return np.interp(pts, self.candidates, self.cumulative)

    def _insert_many(self, pts) -> None:
        """Insert new kinks, each valued by interpolating its current segment."""
        n = self._n
        x, v = self._x, self._v
        pts = np.unique(np.asarray([p for p in pts if self.lo < p < self.hi], dtype=float))
        if pts.size == 0:
            return
        pos = np.searchsorted(x[:n], pts)
        keep = x[pos] != pts
        pts, pos = pts[keep], pos[keep]
        k = pts.size
        if k == 0:
            return
        vals = v[pos - 1] + (v[pos] - v[pos - 1]) * (pts - x[pos - 1]) / (x[pos] - x[pos - 1])
        # shift the tail segments right, starting from the last one
        end = n
        for j in range(k - 1, -1, -1):
            i = int(pos[j])
            x[i + j + 1 : end + j + 1] = x[i:end]
            v[i + j + 1 : end + j + 1] = v[i:end]
            x[i + j], v[i + j] = pts[j], vals[j]
            end = i
        self._n = n + k

    def add(self, loss):
        b = loss.breakpoints
        if b is None or loss.d != 1:
            raise OracleError(f"pwl1d oracle needs piecewise-linear losses, got {loss.kind!r}")
        super().add(loss)
        self._grow(len(b))
        self._insert_many(b)
        sup = loss.support
        if sup is None:
            i0, i1 = 0, self._n
        else:
            i0 = int(np.searchsorted(self.candidates, sup[0], "left"))
            i1 = int(np.searchsorted(self.candidates, sup[1], "right"))
        if i1 > i0:
            seg = self._x[i0:i1]
            self._v[i0:i1] += loss.values(seg[:, None])

    def solve(self, sigma, guess=None, history_weight=1.0):
        s = float(np.asarray(sigma, dtype=float).reshape(-1)[0])
        x = self.candidates
        obj = history_weight * self.cumulative - s * x
        if guess is not None:
            gb = guess.breakpoints
            if gb is None or guess.d != 1:
                raise OracleError(f"pwl1d oracle needs piecewise-linear losses, got {guess.kind!r}")
            extra = np.setdiff1d(np.asarray([p for p in gb if self.lo < p < self.hi], dtype=float), x)
            if extra.size:
                obj = np.concatenate([obj, history_weight * self._interp(extra) - s * extra])
                x = np.concatenate([x, extra])
                order = np.argsort(x, kind="stable")
                x, obj = x[order], obj[order]
            obj = obj + guess.values(x[:, None])
        k = _first_min(obj)
        return OracleAnswer(np.array([x[k]]), float(obj[k]), EXACT)


class GridLeader(Leader):
    """Grid oracle with the cumulative loss tabulated on the grid."""

    def __init__(self, box: Box, h: float, budget: int = DEFAULT_GRID_BUDGET):
        super().__init__(box)
        self.h = float(h)
        self.points = grid_points(box, h, budget)
        self.cum = np.zeros(self.points.shape[0])

    def add(self, loss):
        super().add(loss)
        self.cum += loss.values(self.points)

    def solve(self, sigma, guess=None, history_weight=1.0):
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        obj = history_weight * self.cum - self.points @ sigma
        lip = history_weight * self.lipschitz
        if guess is not None:
            obj = obj + guess.values(self.points)
            lip += guess.lipschitz
        k = _first_min(obj)
        return OracleAnswer(self.points[k].copy(), float(obj[k]), grid_guarantee(lip, self.box.d, self.h))


def grid_h_for_alpha(alpha_target: float, T: int, L: float, d: int) -> float:
    """Spacing that keeps the grid alpha below ``alpha_target`` after ``T`` rounds.

    The cumulative objective is ``T*L``-Lipschitz by the last round, and the
    grid alpha is ``L_obj * d * h / 2``.
    """
    if not (alpha_target > 0 and T >= 1 and L > 0 and d >= 1):
        raise ValueError("grid_h_for_alpha needs positive alpha_target, T, L and d")
    return 2.0 * alpha_target / (T * L * d)
