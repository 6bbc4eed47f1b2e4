"""Box domains, seeded random streams and exponential perturbations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned hyper-rectangle ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float)).copy()
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise DimensionError(f"lo/hi must be equal-length vectors, got {lo.shape} and {hi.shape}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError(f"box requires lo < hi on every axis, got lo={lo.tolist()} hi={hi.tolist()}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, d: int, lo: float = 0.0, hi: float = 1.0) -> Box:
        return cls(np.full(d, lo), np.full(d, hi))

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def edges(self) -> np.ndarray:
        return self.hi - self.lo

    def edge_length(self, i: int) -> float:
        return float(self.hi[i] - self.lo[i])

    @property
    def linf_diameter(self) -> float:
        return float(self.edges.max())

    @property
    def effective_dimension(self) -> float:
        return effective_dimension(self)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def uniform(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        """Uniform draws from the box; shape ``(d,)`` or ``(n, d)``."""
        size = (self.d,) if n is None else (n, self.d)
        return self.lo + self.edges * rng.random(size)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def __eq__(self, other):
        return isinstance(other, Box) and np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def effective_dimension(box: Box) -> float:
    """``sum_i D_i / max_i D_i``; equals ``d`` for a cube."""
    edges = box.edges
    return float(edges.sum() / edges.max())


def l1_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


@dataclass(frozen=True)
class Stream:
    """Splittable, reproducible source of randomness.

    A stream is identified by a master seed and a key path, e.g.
    ``Stream(7).child(rep, 0)``. Two streams with the same identifier yield
    the same numbers; distinct key paths are statistically independent
    (``numpy.random.SeedSequence`` spawn keys).
    """

    seed: int
    key: tuple[int, ...] = field(default=())

    def child(self, *key: int) -> Stream:
        return Stream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self, offset: int = 0) -> np.random.Generator:
        """Generator positioned ``offset`` 64-bit draws into the stream.

        Each ``Generator.random()`` double consumes exactly one draw of PCG64,
        so ``offset`` counts uniforms.
        """
        bitgen = np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.key))
        if offset:
            bitgen.advance(offset)
        return np.random.Generator(bitgen)

    def __str__(self):
        return "/".join(str(k) for k in (self.seed,) + self.key)


def as_stream(seed) -> Stream:
    return seed if isinstance(seed, Stream) else Stream(int(seed))


@dataclass(frozen=True, eq=False)
class ExpPerturbation:
    eta: float
    stream: Stream
    position: int
    sigma: np.ndarray


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not eta > 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    return eta


def exponential_inverse_cdf(u: np.ndarray, eta: float) -> np.ndarray:
    """``-ln(1 - u) / eta`` for ``u`` in [0, 1); ``eta = inf`` gives zeros."""
    return -np.log1p(-u) / eta


def sample_perturbation(eta: float, d: int, stream: Stream, position: int = 0) -> ExpPerturbation:
    """Draw ``sigma`` with i.i.d. Exp(eta) coordinates at a stream position.

    Position ``p`` uses uniforms ``p*d .. p*d + d - 1`` of the stream, so
    the vector is fixed by ``(stream, position)`` alone.
    """
    eta = _check_eta(eta)
    if d < 1:
        raise ValueError("d must be >= 1")
    u = stream.generator(offset=position * d).random(d)
    return ExpPerturbation(eta, stream, position, exponential_inverse_cdf(u, eta))


def perturbation_rows(eta: float, d: int, stream: Stream, start: int, count: int) -> np.ndarray:
    """Rows ``start .. start+count-1`` of the perturbation sequence, shape ``(count, d)``.

    Row ``p`` equals ``sample_perturbation(eta, d, stream, p).sigma``.
    """
    eta = _check_eta(eta)
    u = stream.generator(offset=start * d).random((count, d))
    return exponential_inverse_cdf(u, eta)


@dataclass(frozen=True)
class AuditReport:
    max_ratio: float
    passed: bool
    n_pairs: int


def lipschitz_audit(f, box: Box, n_pairs: int, stream: Stream) -> AuditReport:
    """Estimate the l1-Lipschitz constant of ``f`` from random pairs in ``box``.

    Half the pairs are independent uniform points, half are close pairs
    (a point and a small random displacement) so that local slopes are seen.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = stream.generator()
    x = box.uniform(rng, n_pairs)
    y = box.uniform(rng, n_pairs)
    n_close = n_pairs // 2
    if n_close:
        step = box.edges * 1e-3 * rng.standard_normal((n_close, box.d))
        y[:n_close] = box.clip(x[:n_close] + step)
    dist = np.abs(x - y).sum(axis=1)
    keep = dist > 0
    if not keep.any():
        return AuditReport(0.0, True, n_pairs)
    diff = np.abs(f.values(x[keep]) - f.values(y[keep]))
    max_ratio = float((diff / dist[keep]).max())
    return AuditReport(max_ratio, max_ratio <= f.lipschitz * (1 + 1e-9), n_pairs)


def ci_half_width(sd: float, n: int) -> float:
    """95% normal-approximation half width ``1.96 sd / sqrt(n)``."""
    if n < 2 or not math.isfinite(sd):
        return 0.0
    return 1.96 * sd / math.sqrt(n)
