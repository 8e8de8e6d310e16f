"""Count-Sketch heavy hitters and the covers they emit.

The sketch is a ``rows x width`` table of signed counters.  Each row has a
4-wise bucket hash and a 4-wise sign hash; a point query is the median over
rows of ``sign * counter``.  A bounded tracker keeps the ``capacity`` indices
with the largest current estimates so the top list is available after a
single pass.

Tables whose nominal size is too large to allocate (the power-vector sizing
grows like ``k**4 / eps**2 * n**(1 - 2/k)``) are stored sparsely: only touched
counters are materialized.  Hashing, queries and merges behave identically in
both layouts.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .hashing import (
    BUCKET_TAG,
    MERSENNE_61,
    SIGN_TAG,
    _rng,
    derive_seed,
    poly_eval,
    poly_eval_many,
)

DEFAULT_M_HINT = 10**6
DEFAULT_C_W = 8.0
DEFAULT_C_D = 3.0
# cells; anything larger switches to the sparse layout
DENSE_LIMIT = 1 << 22


class Cover:
    """Set of (index, weight) pairs with strictly increasing indices."""

    __slots__ = ("indices", "weights")

    def __init__(self, indices=(), weights=()):
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if idx.shape != w.shape:
            raise ValueError("indices and weights must have the same length")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError("cover indices must be strictly increasing")
        if np.any(w < 0) or np.any(np.isnan(w)):
            raise ValueError("cover weights must be non-negative")
        self.indices = idx
        self.weights = w
        self.indices.flags.writeable = False
        self.weights.flags.writeable = False

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "Cover":
        pairs = sorted(pairs)
        return cls([i for i, _ in pairs], [w for _, w in pairs])

    def __len__(self):
        return int(self.indices.size)

    def __iter__(self):
        return zip(self.indices.tolist(), self.weights.tolist())

    def __contains__(self, i):
        return bool(np.any(self.indices == i))

    def __eq__(self, other):
        if not isinstance(other, Cover):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.weights, other.weights
        )

    def __repr__(self):
        return f"Cover({list(self)!r})"

    def index_set(self) -> set[int]:
        return set(self.indices.tolist())

    def weight(self, i: int) -> float:
        """Weight of ``i``, or 0 when ``i`` is not listed."""
        pos = np.searchsorted(self.indices, i)
        if pos < self.indices.size and self.indices[pos] == i:
            return float(self.weights[pos])
        return 0.0


def cover_powers(q: Cover | Iterable[tuple[int, float]], k: float) -> Cover:
    """Raise every weight of ``q`` to the ``k``-th power.

    A frequency cover that is (1 +/- eps/(2k))-accurate becomes a
    (1 +/- eps)-accurate cover of the power vector (f_i ** k).
    """
    if k <= 2:
        raise ValueError(f"moment order must exceed 2, got {k}")
    pairs = list(q)
    for i, w in pairs:
        if w < 0:
            raise ValueError(f"negative weight {w} for index {i}")
    return Cover.from_pairs((i, float(w) ** k) for i, w in pairs)


def frequency_error(epsilon: float, k: float) -> float:
    """Per-frequency error so that (1 +/- e')**k lies inside 1 +/- epsilon."""
    return epsilon / (2.0 * k)


def sketch_rows(delta: float, m_hint: int, c_d: float = DEFAULT_C_D) -> int:
    return max(1, math.ceil(c_d * math.log(max(m_hint, 1) / delta)))


def topk_width(capacity: int, epsilon: float, c_w: float = DEFAULT_C_W) -> int:
    """Width for a plain top-``capacity`` sketch: ``c_w * t / eps**2``."""
    return max(1, math.ceil(c_w * capacity / epsilon**2))


def power_width(k: float, epsilon: float, alpha: float, n: int, c_w: float = DEFAULT_C_W) -> int:
    """Width for finding ``alpha``-heavy entries of (f_i ** k) to within ``epsilon``.

    ``c_w * (k / e')**2 * alpha**(-2/k) * n**(1 - 2/k)`` with e' = eps/(2k).
    """
    e = frequency_error(epsilon, k)
    return max(1, math.ceil(c_w * (k / e) ** 2 * alpha ** (-2.0 / k) * n ** (1.0 - 2.0 / k)))


class _Counters:
    """Signed counter table, dense or sparse (sorted flat keys)."""

    def __init__(self, rows: int, width: int, sparse: bool | None = None):
        self.rows = rows
        self.width = width
        self.sparse = rows * width > DENSE_LIMIT if sparse is None else sparse
        if self.sparse:
            self.keys = np.zeros(0, dtype=np.int64)
            self.vals = np.zeros(0, dtype=np.int64)
        else:
            self.table = np.zeros((rows, width), dtype=np.int64)

    def add(self, buckets: np.ndarray, deltas: np.ndarray) -> None:
        # buckets, deltas: (rows, u)
        if not self.sparse:
            for r in range(self.rows):
                np.add.at(self.table[r], buckets[r], deltas[r])
            return
        flat = (np.arange(self.rows, dtype=np.int64)[:, None] * self.width + buckets).ravel()
        self._absorb(flat, deltas.ravel())

    def _absorb(self, keys: np.ndarray, vals: np.ndarray) -> None:
        keys = np.concatenate([self.keys, keys])
        vals = np.concatenate([self.vals, vals.astype(np.int64)])
        uniq, inv = np.unique(keys, return_inverse=True)
        summed = np.zeros(uniq.size, dtype=np.int64)
        np.add.at(summed, inv, vals)
        keep = summed != 0
        self.keys, self.vals = uniq[keep], summed[keep]

    def get(self, buckets: np.ndarray) -> np.ndarray:
        if not self.sparse:
            return np.take_along_axis(self.table, buckets, axis=1)
        flat = np.arange(self.rows, dtype=np.int64)[:, None] * self.width + buckets
        if not self.keys.size:
            return np.zeros(flat.shape, dtype=np.int64)
        pos_c = np.minimum(np.searchsorted(self.keys, flat), self.keys.size - 1)
        hit = self.keys[pos_c] == flat
        return np.where(hit, self.vals[pos_c], 0)

    def nonzero(self) -> tuple[np.ndarray, np.ndarray]:
        """Canonical (flat key, value) arrays of all nonzero counters."""
        if self.sparse:
            return self.keys, self.vals
        flat = self.table.ravel()
        nz = np.flatnonzero(flat)
        return nz.astype(np.int64), flat[nz]

    def plus(self, other: "_Counters") -> "_Counters":
        out = _Counters(self.rows, self.width, self.sparse)
        if self.sparse:
            out.keys, out.vals = self.keys.copy(), self.vals.copy()
            out._absorb(other.keys, other.vals)
        else:
            out.table = self.table + other.table
        return out


class CountSketch:
    """Count-Sketch with a top-``capacity`` candidate tracker.

    Rows default to ``ceil(c_d * ln(m_hint / delta))`` and width to
    ``ceil(c_w * capacity / epsilon**2)``; pass ``width`` to override, e.g.
    with :func:`power_width`.  ``universe`` bounds valid indices to
    ``[1, universe]`` (unbounded below 2**61 when omitted).
    """

    def __init__(
        self,
        capacity: int,
        epsilon: float,
        delta: float,
        seed: int,
        *,
        m_hint: int = DEFAULT_M_HINT,
        width: int | None = None,
        universe: int | None = None,
        c_w: float = DEFAULT_C_W,
        c_d: float = DEFAULT_C_D,
    ):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if not 0 < epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
        if not 0 < delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {delta}")
        if width is not None and width < 1:
            raise ValueError(f"width must be >= 1, got {width}")
        self.capacity = capacity
        self.epsilon = epsilon
        self.delta = delta
        self.seed = seed
        self.m_hint = m_hint
        self.universe = universe
        self.rows = sketch_rows(delta, m_hint, c_d)
        self.width = topk_width(capacity, epsilon, c_w) if width is None else width
        self._bucket_coeffs = np.stack(
            [_rng(derive_seed(seed, BUCKET_TAG, r)).integers(0, MERSENNE_61, 4, dtype=np.uint64)
             for r in range(self.rows)]
        )
        self._sign_coeffs = np.stack(
            [_rng(derive_seed(seed, SIGN_TAG, r)).integers(0, MERSENNE_61, 4, dtype=np.uint64)
             for r in range(self.rows)]
        )
        self._counters = _Counters(self.rows, self.width)
        self.tracker: dict[int, int] = {}
        self.total_updates = 0

    # -- hashing ---------------------------------------------------------

    def _check(self, idx: np.ndarray) -> None:
        if not idx.size:
            return
        hi = MERSENNE_61 - 1 if self.universe is None else self.universe
        if idx.min() < 1 or idx.max() > hi:
            raise IndexError(f"indices outside [1, {hi}]")

    def _hash(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        b = poly_eval_many(self._bucket_coeffs, idx) % np.uint64(self.width)
        s = (poly_eval_many(self._sign_coeffs, idx) & np.uint64(1)).astype(np.int64) * 2 - 1
        return b.astype(np.int64), s

    def bucket(self, row: int, i: int) -> int:
        return poly_eval(self._bucket_coeffs[row].tolist(), i) % self.width

    def sign(self, row: int, i: int) -> int:
        return 1 if poly_eval(self._sign_coeffs[row].tolist(), i) & 1 else -1

    # -- updates and queries ----------------------------------------------

    def update(self, i: int, c: int = 1) -> None:
        self.update_many(np.array([i]), np.array([c]))

    def update_many(self, indices, counts=None) -> None:
        """Apply a batch of signed updates; duplicates are summed first."""
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        if counts is None:
            idx, cnt = np.unique(idx, return_counts=True)
        else:
            raw = np.asarray(counts, dtype=np.int64).reshape(-1)
            if raw.shape != idx.shape:
                raise ValueError("indices and counts must have the same length")
            idx, inv = np.unique(idx, return_inverse=True)
            cnt = np.zeros(idx.size, dtype=np.int64)
            np.add.at(cnt, inv, raw)
        self._check(idx)
        if not idx.size:
            return
        buckets, signs = self._hash(idx)
        self._counters.add(buckets, signs * cnt[None, :])
        self.total_updates += int(np.abs(cnt).sum())
        self._refresh(idx, self._estimates(buckets, signs))

    def query_many(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        self._check(idx)
        if not idx.size:
            return np.zeros(0, dtype=np.float64)
        return self._estimates(*self._hash(idx))

    def _estimates(self, buckets: np.ndarray, signs: np.ndarray) -> np.ndarray:
        return np.median(signs * self._counters.get(buckets), axis=0)

    def query(self, i: int) -> float:
        return float(self.query_many([i])[0])

    def _tracked(self) -> np.ndarray:
        return np.fromiter(self.tracker, dtype=np.int64, count=len(self.tracker))

    def _refresh(self, touched: np.ndarray, touched_est: np.ndarray | None = None) -> None:
        # touched must be unique; tracked indices get re-queried
        if touched_est is None:
            touched_est = self.query_many(touched)
        others = np.setdiff1d(self._tracked(), touched, assume_unique=True)
        cand = np.concatenate([touched, others])
        est = np.concatenate([touched_est, self.query_many(others)])
        # largest estimate first, ties by smaller index
        order = np.lexsort((cand, -est))[: self.capacity]
        self.tracker = dict(zip(cand[order].tolist(), est[order].tolist()))

    def top(self) -> Cover:
        """Tracked candidates with fresh estimates, clamped at zero."""
        idx = np.sort(self._tracked())
        return Cover(idx, np.maximum(self.query_many(idx), 0.0))

    # -- linearity ---------------------------------------------------------

    def same_config(self, other: "CountSketch") -> bool:
        return (
            self.rows == other.rows
            and self.width == other.width
            and self.capacity == other.capacity
            and self.universe == other.universe
            and np.array_equal(self._bucket_coeffs, other._bucket_coeffs)
            and np.array_equal(self._sign_coeffs, other._sign_coeffs)
        )

    def merge(self, other: "CountSketch") -> "CountSketch":
        """Counter-wise sum; the tracker is rebuilt from both trackers."""
        if not self.same_config(other):
            raise ValueError("cannot merge sketches with different configuration")
        out = object.__new__(CountSketch)
        out.__dict__.update(self.__dict__)
        out._counters = self._counters.plus(other._counters)
        out.total_updates = self.total_updates + other.total_updates
        out.tracker = {}
        out._refresh(np.union1d(self._tracked(), other._tracked()))
        return out

    def counters(self) -> dict[tuple[int, int], int]:
        """Nonzero counters keyed by (row, bucket)."""
        keys, vals = self._counters.nonzero()
        return {(int(k) // self.width, int(k) % self.width): int(v) for k, v in zip(keys, vals)}

    def counters_equal(self, other: "CountSketch") -> bool:
        ka, va = self._counters.nonzero()
        kb, vb = other._counters.nonzero()
        return np.array_equal(ka, kb) and np.array_equal(va, vb)

    @property
    def sparse(self) -> bool:
        return self._counters.sparse

    def words(self) -> dict[str, int]:
        """Machine words charged to this sketch (fixed at construction)."""
        return {
            "table_words": self.rows * self.width,
            "tracker_words": 2 * self.capacity,
            "hash_words": 8 * self.rows,
        }


class SketchOracle:
    """Count-Sketch heavy hitter plug-in for :func:`recsketch.core.estimate_l1`.

    Covers the frequency vector, or the power vector (f_i ** k) when ``k``
    is given, at heaviness ``alpha`` and accuracy ``epsilon``.
    """

    def __init__(self, alpha, epsilon, delta, seed, *, universe, k=None,
                 m_hint=DEFAULT_M_HINT, c_w=DEFAULT_C_W, c_d=DEFAULT_C_D):
        self.k = k
        capacity = min(universe, math.ceil(1.0 / alpha))
        if k is None:
            eps_f, width = epsilon, topk_width(capacity, epsilon, c_w)
        else:
            eps_f = frequency_error(epsilon, k)
            width = power_width(k, epsilon, alpha, universe, c_w)
        self.sketch = CountSketch(capacity, eps_f, delta, seed, m_hint=m_hint, width=width,
                                  universe=universe, c_w=c_w, c_d=c_d)

    def update(self, i, c=1):
        self.sketch.update(i, c)

    def update_many(self, indices, counts=None):
        self.sketch.update_many(indices, counts)

    def finalize(self) -> Cover:
        top = self.sketch.top()
        return top if self.k is None else cover_powers(top, self.k)


def sketch_oracle_factory(universe, k=None, m_hint=DEFAULT_M_HINT, c_w=DEFAULT_C_W, c_d=DEFAULT_C_D):
    def make(level, alpha, epsilon, delta, seed):
        return SketchOracle(alpha, epsilon, delta, seed, universe=universe, k=k,
                            m_hint=m_hint, c_w=c_w, c_d=c_d)

    return make
