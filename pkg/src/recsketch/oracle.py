"""Brute-force ground truth: exact frequencies, moments, majors and covers.

Everything here stores full tables and exists to check the sublinear code.
Vectors are mappings ``index -> non-negative value``; a
:class:`FrequencyVector` is one such mapping built from a stream.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .core import BaseEstimate
from .countsketch import Cover


@dataclass
class FrequencyVector:
    counts: dict[int, int] = field(default_factory=dict)
    n: int = 0

    def __post_init__(self):
        for i, c in self.counts.items():
            if c < 0:
                raise ValueError(f"negative count {c} for index {i}")
        self.counts = {i: c for i, c in self.counts.items() if c}

    @classmethod
    def from_stream(cls, items: Iterable[int], n: int | None = None) -> "FrequencyVector":
        counts = Counter(int(i) for i in items)
        if n is None:
            n = max(counts, default=0)
        if counts and (min(counts) < 1 or max(counts) > n):
            raise ValueError(f"stream items outside [1, {n}]")
        return cls(dict(counts), n)

    @property
    def m(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, i: int) -> int:
        return self.counts.get(i, 0)

    def items(self):
        return self.counts.items()


def _values(v) -> Mapping[int, float]:
    return v.counts if isinstance(v, FrequencyVector) else v


def power_vector(v, k: float) -> dict[int, float]:
    return {i: x**k for i, x in _values(v).items() if x}


def exact_fk(fv, k: float) -> float:
    """Sum of f_i ** k over nonzero entries (so 0**k contributes 0)."""
    if k < 0:
        raise ValueError(f"moment order must be >= 0, got {k}")
    vals = [x for x in _values(fv).values() if x]
    if float(k).is_integer() and all(isinstance(x, (int, np.integer)) for x in vals):
        return float(sum(int(x) ** int(k) for x in vals))
    return math.fsum(float(x) ** k for x in vals)


def l1(v) -> float:
    return math.fsum(_values(v).values())


def exact_major(v, alpha: float) -> set[int]:
    """Indices with v_i >= alpha * |V| (the boundary is inclusive)."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    vals = _values(v)
    total = l1(vals)
    if total == 0:
        return set()
    return {i for i, x in vals.items() if x > 0 and x >= alpha * total}


def is_cover(q: Cover, v, alpha: float, epsilon: float) -> bool:
    vals = _values(v)
    for i, w in q:
        x = vals.get(i, 0)
        if not (1 - epsilon) * x <= w <= (1 + epsilon) * x:
            return False
    return exact_major(vals, alpha) <= q.index_set()


def fact51_check(v, i: int, alpha: float, k: float) -> bool:
    """Whether v_i**2 >= 0.5 * alpha**(2/k) * n0**(2/k - 1) * sum_{j != i} v_j**2.

    Requires v_i**k >= alpha * F_k; under that precondition the inequality
    holds by Hoelder, so a False return means a bug upstream.
    """
    vals = _values(v)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    vi = vals.get(i, 0)
    fk = exact_fk(vals, k)
    if vi**k < alpha * fk:
        raise ValueError(f"index {i} is not alpha-heavy in the power vector")
    n0 = sum(1 for x in vals.values() if x)
    rest = math.fsum(x * x for j, x in vals.items() if j != i)
    return vi * vi >= 0.5 * alpha ** (2 / k) * n0 ** (2 / k - 1) * rest


def exact_hh_oracle(v, alpha: float, epsilon: float = 0.0, delta: float = 0.0) -> Cover:
    """Exactly the alpha-major indices of ``v`` with their true weights."""
    vals = _values(v)
    return Cover.from_pairs((i, float(vals[i])) for i in exact_major(vals, alpha))


def identity(f):
    return f


class ExactOracle:
    """Streaming plug-in that emits :func:`exact_hh_oracle` on finalize.

    ``transform`` maps a count to the implicit vector entry (e.g.
    ``lambda f: f ** k``); it must send 0 to 0 so the vector is separable.
    """

    def __init__(self, alpha: float, transform: Callable = identity):
        self.alpha = alpha
        self.transform = transform
        self.counts: Counter = Counter()

    def update(self, i: int, c: int = 1) -> None:
        self.counts[int(i)] += int(c)

    def update_many(self, indices, counts) -> None:
        for i, c in zip(np.asarray(indices).tolist(), np.asarray(counts).tolist()):
            self.counts[i] += c

    def vector(self) -> dict[int, float]:
        return {i: self.transform(c) for i, c in self.counts.items() if c}

    def finalize(self) -> Cover:
        return exact_hh_oracle(self.vector(), self.alpha)


def exact_oracle_factory(transform: Callable = identity):
    """Oracle factory with the ``(level, alpha, epsilon, delta, seed)`` signature."""

    def make(level, alpha, epsilon, delta, seed):
        return ExactOracle(alpha, transform)

    return make


class ExactBase:
    """Exact |V| of the deepest substream with a bound on distinct indices."""

    def __init__(self, capacity: int = 1 << 16, transform: Callable = identity):
        self.capacity = capacity
        self.transform = transform
        self.counts: dict[int, int] = {}
        self.overflowed = False

    def update(self, i: int, c: int = 1) -> None:
        i = int(i)
        if i not in self.counts and len(self.counts) >= self.capacity:
            self.overflowed = True
            return
        self.counts[i] = self.counts.get(i, 0) + int(c)

    def update_many(self, indices, counts) -> None:
        for i, c in zip(np.asarray(indices).tolist(), np.asarray(counts).tolist()):
            self.update(i, c)

    def finalize(self) -> BaseEstimate:
        if self.overflowed:
            return BaseEstimate(0.0, exact=False, overflowed=True)
        return BaseEstimate(math.fsum(self.transform(c) for c in self.counts.values() if c))
