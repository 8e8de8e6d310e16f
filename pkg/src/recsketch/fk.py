"""Single-pass F_k estimation (k > 2) by recursive sketching.

Each of the ``depth`` levels runs a Count-Sketch over its substream and emits
a cover of the power vector (f_i ** k).  The deepest substream goes to an
exact bounded counter (``t <= 1``) or to a nested estimator with ``t - 1``
stages (``t >= 2``).  Depth follows the iterated-log schedule::

    t = 0   ceil(log2 n)
    t >= 1  max(2, ceil(c * log2 g_t(n)))   g_1 = log2 n, g_t = log2 g_{t-1}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import BaseEstimate, LevelOutputs, LevelPlan, route, y_backsolve
from .countsketch import (
    DEFAULT_C_D,
    DEFAULT_C_W,
    DEFAULT_M_HINT,
    CountSketch,
    cover_powers,
    frequency_error,
    power_width,
)
from .hashing import CHAIN_TAG, NESTED_TAG, SKETCH_TAG, derive_seed, make_chain
from .oracle import exact_fk


@dataclass(frozen=True)
class FkConfig:
    k: float
    epsilon: float
    t: int = 1
    seed: int = 0
    base_capacity: int = 1 << 16
    c_w: float = DEFAULT_C_W
    c_d: float = DEFAULT_C_D
    c_alpha: float = 1.0
    depth_c: float = 1.0

    def __post_init__(self):
        if not self.k > 2:
            raise ValueError(f"k must exceed 2, got {self.k}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")
        if self.base_capacity < 1:
            raise ValueError("base_capacity must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.c_w <= 0 or self.c_d <= 0 or self.c_alpha <= 0 or self.depth_c <= 0:
            raise ValueError("sizing constants must be positive")


def iterated_log(n: float, t: int) -> float:
    """g_t(n): g_0 = n, g_t = log2 g_{t-1}; -inf once the argument drops to 0."""
    g = float(n)
    for _ in range(t):
        g = math.log2(g) if g > 0 else -math.inf
    return g


def fk_depth(n: int, t: int, c: float = 1.0) -> int:
    if t == 0:
        return math.ceil(math.log2(n)) if n > 1 else 0
    g = iterated_log(n, t)
    if g <= 1:
        return 2
    return max(2, math.ceil(c * math.log2(g)))


class RecursiveFkState:
    """Mergeable F_k sketch over the universe [1, n]."""

    def __init__(self, config: FkConfig, n: int, m_hint: int = DEFAULT_M_HINT):
        if n < 1:
            raise ValueError(f"universe size must be >= 1, got {n}")
        self.config = config
        self.n = n
        self.m_hint = m_hint
        phi = fk_depth(n, config.t, config.depth_c)
        eps = config.epsilon
        alpha = min(1.0, config.c_alpha * eps**2 / max(phi, 1) ** 3)
        delta = 1.0 / (100 * max(phi, 1))
        self.plan = LevelPlan(
            depth=phi,
            chain=make_chain(derive_seed(config.seed, CHAIN_TAG), n, phi),
            alpha=alpha,
            epsilon_inner=eps,
            delta_inner=delta,
            gamma=eps,
            c_alpha=config.c_alpha,
        )
        self.width = power_width(config.k, eps, alpha, n, config.c_w)
        self.capacity = min(n, math.ceil(1.0 / alpha))
        self.level_sketches = [
            CountSketch(
                self.capacity,
                frequency_error(eps, config.k),
                delta,
                derive_seed(config.seed, SKETCH_TAG, j),
                m_hint=m_hint,
                width=self.width,
                universe=n,
                c_w=config.c_w,
                c_d=config.c_d,
            )
            for j in range(phi)
        ]
        self.base_counter: dict[int, int] = {}
        self.nested: RecursiveFkState | None = None
        if config.t >= 2:
            inner = replace(config, t=config.t - 1, seed=derive_seed(config.seed, NESTED_TAG))
            self.nested = RecursiveFkState(inner, n, m_hint)
        self._overflowed = False

    @property
    def depth(self) -> int:
        return self.plan.depth

    @property
    def chain(self):
        return self.plan.chain

    @property
    def overflowed(self) -> bool:
        if self.nested is not None:
            return self._overflowed or self.nested.overflowed
        return self._overflowed

    # -- ingestion ---------------------------------------------------------

    def update(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise IndexError(f"index {i} outside [1, {self.n}]")
        deepest = self.chain.deepest_level(i)
        for j in range(min(deepest + 1, self.depth)):
            self.level_sketches[j].update(i, 1)
        if deepest == self.depth:
            self._base_add(np.array([i]), np.array([1]))

    def update_many(self, items, counts=None) -> None:
        """Ingest a batch of stream elements (optionally with multiplicities)."""
        items = np.asarray(items, dtype=np.int64).reshape(-1)
        if items.size and (items.min() < 1 or items.max() > self.n):
            raise IndexError(f"stream items outside [1, {self.n}]")
        if counts is None:
            idx, cnt, deepest = route(self.chain, items)
        else:
            counts = np.asarray(counts, dtype=np.int64).reshape(-1)
            idx, inv = np.unique(items, return_inverse=True)
            cnt = np.zeros(idx.size, dtype=np.int64)
            np.add.at(cnt, inv, counts)
            deepest = self.chain.deepest_levels(idx)
        for j, sketch in enumerate(self.level_sketches):
            keep = deepest >= j
            if keep.any():
                sketch.update_many(idx[keep], cnt[keep])
        keep = deepest >= self.depth
        if keep.any():
            self._base_add(idx[keep], cnt[keep])

    def _base_add(self, idx: np.ndarray, cnt: np.ndarray) -> None:
        if self.nested is not None:
            self.nested.update_many(idx, cnt)
            return
        cap = self.config.base_capacity
        base = self.base_counter
        for i, c in zip(idx.tolist(), cnt.tolist()):
            if i in base:
                base[i] += c
            elif len(base) < cap:
                base[i] = c
            else:
                self._overflowed = True

    # -- estimation --------------------------------------------------------

    def base_value(self) -> float:
        if self.nested is not None:
            return self.nested.estimate()
        return exact_fk(self.base_counter, self.config.k)

    def outputs(self) -> LevelOutputs:
        covers = tuple(cover_powers(s.top(), self.config.k) for s in self.level_sketches)
        return LevelOutputs(covers, BaseEstimate(self.base_value(), exact=self.nested is None))

    def estimate(self) -> float:
        """Estimate of F_k; 0.0 when the base overflowed (see ``overflowed``)."""
        if self.overflowed:
            return 0.0
        return max(0.0, y_backsolve(self.outputs(), self.chain))

    # -- linearity ---------------------------------------------------------

    def same_config(self, other: "RecursiveFkState") -> bool:
        if self.config != other.config or self.n != other.n or self.m_hint != other.m_hint:
            return False
        if self.chain != other.chain:
            return False
        return all(a.same_config(b) for a, b in zip(self.level_sketches, other.level_sketches))

    def merge(self, other: "RecursiveFkState") -> "RecursiveFkState":
        if not self.same_config(other):
            raise ValueError("cannot merge states with different configuration or seeds")
        out = object.__new__(RecursiveFkState)
        out.__dict__.update(self.__dict__)
        out.level_sketches = [a.merge(b) for a, b in zip(self.level_sketches, other.level_sketches)]
        out._overflowed = self._overflowed or other._overflowed
        out.base_counter = dict(self.base_counter)
        for i, c in other.base_counter.items():
            out.base_counter[i] = out.base_counter.get(i, 0) + c
        if len(out.base_counter) > self.config.base_capacity:
            out._overflowed = True
        if self.nested is not None:
            out.nested = self.nested.merge(other.nested)
        return out

    def counters_equal(self, other: "RecursiveFkState") -> bool:
        if len(self.level_sketches) != len(other.level_sketches):
            return False
        if not all(a.counters_equal(b) for a, b in zip(self.level_sketches, other.level_sketches)):
            return False
        if self.base_counter != other.base_counter:
            return False
        if self.nested is not None:
            return other.nested is not None and self.nested.counters_equal(other.nested)
        return True

    # -- accounting --------------------------------------------------------

    def space_report(self) -> dict[str, int | float]:
        """Words charged per component; fixed at construction."""
        rows = self.level_sketches[0].rows if self.level_sketches else 0
        table = tracker = hashes = 0
        for s in self.level_sketches:
            w = s.words()
            table += w["table_words"]
            tracker += w["tracker_words"]
            hashes += w["hash_words"]
        hashes += 2 * self.depth
        if self.nested is not None:
            base = self.nested.space_report()["total_words"]
        else:
            base = 2 * self.config.base_capacity
        return {
            "k": self.config.k,
            "epsilon": self.config.epsilon,
            "t": self.config.t,
            "n": self.n,
            "depth": self.depth,
            "alpha": self.plan.alpha,
            "rows": rows,
            "width": self.width,
            "capacity": self.capacity,
            "table_words": table,
            "tracker_words": tracker,
            "hash_words": hashes,
            "base_words": base,
            "total_words": table + tracker + hashes + base,
        }


def format_report(report: dict) -> str:
    """Flat ``key=value`` lines."""
    lines = []
    for key, value in report.items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"
