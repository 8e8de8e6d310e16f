"""Recursive L1 estimation for separable implicit vectors.

A stream is split into nested substreams D_0 = D, D_1, ..., D_depth where
D_j keeps the elements whose first ``j`` chain bits are all one.  A heavy
hitter oracle run on each D_j (j < depth) yields a cover Q_j, the deepest
substream is measured by a base estimator, and the level estimates are
unwound with

    Y_depth = base
    Y_j     = 2 * Y_{j+1} + sum_{i in Q_j} (1 - 2 * h_{j+1}(i)) * w_{Q_j}(i)

to give Y_0, an estimate of |V|.

Plug-in contracts
-----------------
oracle factory
    ``factory(level, alpha, epsilon, delta, seed)`` returning an object with
    ``update_many(indices, counts)`` and ``finalize() -> Cover``.
base factory
    ``factory()`` returning an object with ``update_many(indices, counts)``
    and ``finalize() -> BaseEstimate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .countsketch import Cover
from .hashing import CHAIN_TAG, HashChain, derive_seed, make_chain

DEFAULT_C_ALPHA = 0.01
DEFAULT_C_DELTA = 0.01
_REL_TOL = 1e-12


@dataclass(frozen=True)
class BaseEstimate:
    value: float
    exact: bool = True
    overflowed: bool = False

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"base estimate must be non-negative, got {self.value}")


@dataclass(frozen=True)
class LevelOutputs:
    covers: tuple[Cover, ...]
    base: BaseEstimate

    @property
    def depth(self) -> int:
        return len(self.covers)


@dataclass(frozen=True)
class LevelPlan:
    depth: int
    chain: HashChain
    alpha: float
    epsilon_inner: float
    delta_inner: float
    gamma: float
    c_alpha: float = DEFAULT_C_ALPHA
    c_delta: float = DEFAULT_C_DELTA

    @classmethod
    def build(
        cls,
        gamma: float,
        n: int,
        seed: int,
        depth: int | None = None,
        c_alpha: float = DEFAULT_C_ALPHA,
        c_delta: float = DEFAULT_C_DELTA,
    ) -> "LevelPlan":
        """Plan with alpha = c_alpha*gamma^2/(depth+1)^3 and eps = gamma/(30(depth+1)).

        ``depth`` defaults to ceil(log2 n).
        """
        if not 0 < gamma < 1:
            raise ValueError(f"gamma must be in (0, 1), got {gamma}")
        if depth is None:
            depth = math.ceil(math.log2(n)) if n > 1 else 0
        chain = make_chain(derive_seed(seed, CHAIN_TAG), n, depth)
        return cls(
            depth=depth,
            chain=chain,
            alpha=c_alpha * gamma**2 / (depth + 1) ** 3,
            epsilon_inner=gamma / (30 * (depth + 1)),
            delta_inner=c_delta / (depth + 1),
            gamma=gamma,
            c_alpha=c_alpha,
            c_delta=c_delta,
        )


def validate_plan(plan: LevelPlan) -> list[str]:
    """Diagnostics for every violated scaling relation; empty when sound."""
    out = []
    phi = plan.depth
    if plan.chain.depth != phi:
        out.append(f"chain depth {plan.chain.depth} != plan depth {phi}")
    if not 0 < plan.gamma < 1:
        out.append(f"gamma={plan.gamma} outside (0, 1)")
    alpha_max = plan.c_alpha * plan.gamma**2 / max(phi, 1) ** 3
    if not 0 < plan.alpha <= alpha_max * (1 + _REL_TOL):
        out.append(f"alpha={plan.alpha:g} violates 0 < alpha <= c_alpha*gamma^2/depth^3={alpha_max:g}")
    eps_max = plan.gamma / (30 * (phi + 1))
    if not 0 < plan.epsilon_inner <= eps_max * (1 + _REL_TOL):
        out.append(
            f"epsilon_inner={plan.epsilon_inner:g} violates epsilon_inner <= "
            f"gamma/(30*(depth+1))={eps_max:g}"
        )
    delta_max = plan.c_delta / (phi + 1)
    if not 0 < plan.delta_inner <= delta_max * (1 + _REL_TOL):
        out.append(
            f"delta_inner={plan.delta_inner:g} violates delta_inner <= "
            f"c_delta/(depth+1)={delta_max:g}"
        )
    return out


def x_statistic(v: Sequence[float], core, h: Sequence[int]) -> float:
    """sum_{i in core} v_i + 2 * sum_{i not in core} h_i * v_i.

    ``v`` and ``h`` are explicit arrays; ``core`` holds positions into them.
    """
    v = np.asarray(v, dtype=np.float64)
    h = np.asarray(h)
    if v.shape != h.shape:
        raise ValueError(f"vector has {v.size} entries but h has {h.size}")
    in_core = np.zeros(v.size, dtype=bool)
    in_core[list(core)] = True
    return float(v[in_core].sum() + 2.0 * (h[~in_core] * v[~in_core]).sum())


def y_backsolve(outputs: LevelOutputs, chain: HashChain) -> float:
    if outputs.base is None or outputs.depth != chain.depth:
        raise ValueError(
            f"need {chain.depth} covers and a base estimate, got {outputs.depth} covers"
        )
    y = float(outputs.base.value)
    for j in range(chain.depth - 1, -1, -1):
        q = outputs.covers[j]
        if len(q):
            signs = 1.0 - 2.0 * chain.levels[j].bits(q.indices)
            y = 2.0 * y + float(np.dot(signs, q.weights))
        else:
            y = 2.0 * y
    return y


@dataclass(frozen=True)
class L1Estimate:
    value: float
    overflowed: bool
    outputs: LevelOutputs


def route(chain: HashChain, stream) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct items, their counts, and the deepest level each survives to."""
    items = np.asarray(stream, dtype=np.int64).reshape(-1)
    idx, cnt = np.unique(items, return_counts=True)
    return idx, cnt, chain.deepest_levels(idx)


def estimate_l1(
    stream,
    oracle_factory: Callable,
    base_factory: Callable,
    plan: LevelPlan,
    seed: int = 0,
) -> L1Estimate:
    """Run one oracle per level and the base estimator, then back-solve.

    An overflowing base gives ``value == 0`` with ``overflowed`` set.
    """
    chain = plan.chain
    idx, cnt, deepest = route(chain, stream)
    covers = []
    for j in range(plan.depth):
        oracle = oracle_factory(
            j, plan.alpha, plan.epsilon_inner, plan.delta_inner, derive_seed(seed, j)
        )
        keep = deepest >= j
        oracle.update_many(idx[keep], cnt[keep])
        covers.append(oracle.finalize())
    base = base_factory()
    keep = deepest >= plan.depth
    base.update_many(idx[keep], cnt[keep])
    outputs = LevelOutputs(tuple(covers), base.finalize())
    if outputs.base.overflowed:
        return L1Estimate(0.0, True, outputs)
    return L1Estimate(y_backsolve(outputs, chain), False, outputs)
