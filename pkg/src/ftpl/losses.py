"""Loss functions on box domains.

Every loss is vectorized: ``values(X)`` takes an ``(n, d)`` array and returns
``n`` values. ``lipschitz`` is the declared constant with respect to the l1
norm. One-dimensional piecewise-linear losses also expose their kinks via
``breakpoints`` (``None`` for anything else), which is what the exact 1-d
oracle needs.
"""

from __future__ import annotations

import numpy as np


def _as_rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    return X


class LossFunction:
    kind = "opaque"
    lipschitz: float = 0.0
    d: int = 1

    def values(self, X) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return float(self.values(_as_rows(x))[0])

    @property
    def breakpoints(self) -> tuple[float, ...] | None:
        return None

    @property
    def support(self) -> tuple[float, float] | None:
        """Interval outside of which a 1-d loss is identically zero, if known."""
        return None

    @property
    def is_pwl(self) -> bool:
        return self.d == 1 and self.breakpoints is not None

    def descriptor(self) -> dict:
        return {"kind": self.kind}


class ZeroLoss(LossFunction):
    kind = "piecewise-linear"
    lipschitz = 0.0

    def __init__(self, d: int = 1):
        self.d = d

    def values(self, X):
        return np.zeros(_as_rows(X).shape[0])

    @property
    def breakpoints(self):
        return () if self.d == 1 else None

    @property
    def support(self):
        return (0.0, 0.0)

    def descriptor(self):
        return {"kind": "zero"}


class HingeLoss(LossFunction):
    """``g_a(x) = max(0, D/2 - ||x - a||_1)``: a tent of height D/2 centred at ``a``."""

    kind = "hinge"
    lipschitz = 1.0

    def __init__(self, a, D: float):
        self.a = np.asarray(a, dtype=float).reshape(-1)
        if D <= 0:
            raise ValueError("hinge width D must be > 0")
        self.D = float(D)
        self.d = self.a.size

    def values(self, X):
        X = _as_rows(X)
        if self.d == 1:
            dist = np.abs(X[:, 0] - self.a[0])
        else:
            dist = np.abs(X - self.a).sum(axis=1)
        return np.maximum(0.0, 0.5 * self.D - dist)

    @property
    def breakpoints(self):
        if self.d != 1:
            return None
        a, h = float(self.a[0]), 0.5 * self.D
        return (a - h, a, a + h)

    @property
    def support(self):
        if self.d != 1:
            return None
        a, h = float(self.a[0]), 0.5 * self.D
        return (a - h, a + h)

    def descriptor(self):
        return {"kind": "hinge", "a": self.a.tolist(), "D": self.D}


class LinearLoss(LossFunction):
    """``<coef, x> + offset``; l1-Lipschitz with constant ``max_i |coef_i|``."""

    kind = "piecewise-linear"

    def __init__(self, coef, offset: float = 0.0):
        self.coef = np.atleast_1d(np.asarray(coef, dtype=float))
        self.offset = float(offset)
        self.d = self.coef.size
        self.lipschitz = float(np.abs(self.coef).max())

    def values(self, X):
        return _as_rows(X) @ self.coef + self.offset

    @property
    def breakpoints(self):
        return () if self.d == 1 else None

    def descriptor(self):
        return {"kind": "linear", "coef": self.coef.tolist(), "offset": self.offset}


class SinusoidLoss(LossFunction):
    """``(L / freq) * sum_i sin(freq * x_i + phase_i)``; each partial derivative is at most L."""

    kind = "sinusoid"

    def __init__(self, L: float, freq: float, phase):
        if L <= 0 or freq <= 0:
            raise ValueError("sinusoid needs L > 0 and freq > 0")
        self.lipschitz = float(L)
        self.freq = float(freq)
        self.phase = np.atleast_1d(np.asarray(phase, dtype=float))
        self.d = self.phase.size

    def values(self, X):
        X = _as_rows(X)
        return (self.lipschitz / self.freq) * np.sin(self.freq * X + self.phase).sum(axis=1)

    def descriptor(self):
        return {"kind": "sinusoid", "L": self.lipschitz, "freq": self.freq, "phase": self.phase.tolist()}


class SumLoss(LossFunction):
    """Weighted sum ``sum_k w_k f_k``.

    The default Lipschitz constant is ``sum_k |w_k| L_k``; callers that know
    better (e.g. an average of losses sharing a bound) may pass ``lipschitz``.
    """

    def __init__(self, terms, weights=None, lipschitz: float | None = None):
        self.terms = list(terms)
        if not self.terms:
            raise ValueError("SumLoss needs at least one term; use ZeroLoss")
        self.weights = np.ones(len(self.terms)) if weights is None else np.asarray(weights, dtype=float)
        if self.weights.shape != (len(self.terms),):
            raise ValueError("one weight per term")
        dims = {f.d for f in self.terms}
        if len(dims) != 1:
            raise ValueError(f"terms disagree on dimension: {sorted(dims)}")
        self.d = dims.pop()
        if lipschitz is None:
            lipschitz = float(sum(abs(w) * f.lipschitz for w, f in zip(self.weights, self.terms)))
        self.lipschitz = float(lipschitz)
        self.kind = "piecewise-linear" if self.breakpoints is not None else "opaque"

    def values(self, X):
        X = _as_rows(X)
        out = np.zeros(X.shape[0])
        for w, f in zip(self.weights, self.terms):
            out += w * f.values(X)
        return out

    @property
    def breakpoints(self):
        if self.d != 1:
            return None
        pts = []
        for f in self.terms:
            b = f.breakpoints
            if b is None:
                return None
            pts.extend(b)
        return tuple(sorted(set(pts)))

    @property
    def support(self):
        sups = [f.support for f in self.terms]
        if any(s is None for s in sups):
            return None
        return (min(s[0] for s in sups), max(s[1] for s in sups))

    def descriptor(self):
        return {
            "kind": "sum",
            "weights": self.weights.tolist(),
            "terms": [f.descriptor() for f in self.terms],
        }


class FunctionLoss(LossFunction):
    """Wraps a vectorized callable ``fn(X) -> (n,)`` with a declared constant."""

    kind = "opaque"

    def __init__(self, fn, lipschitz: float, d: int, name: str = "function"):
        self.fn = fn
        self.lipschitz = float(lipschitz)
        self.d = int(d)
        self.name = name

    def values(self, X):
        return np.asarray(self.fn(_as_rows(X)), dtype=float)

    def descriptor(self):
        return {"kind": "opaque", "name": self.name}


def scaled(f: LossFunction, c: float) -> LossFunction:
    return SumLoss([f], [c])
