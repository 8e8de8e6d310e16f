"""Seeded hash families over the universe [1, n].

All families work over the Mersenne prime field p = 2**61 - 1, which covers
any universe up to 2**32 with room to spare.  Scalar evaluation uses Python
integers; the ``*_many`` variants evaluate whole index arrays with numpy using
an exact 61-bit modular multiply built from 32-bit limbs.

Seeds are expanded with :func:`derive_seed`, a counter-based derivation on top
of :class:`numpy.random.SeedSequence`: the child seed for ``(root, *path)`` is
the first 64-bit word of ``SeedSequence(root, spawn_key=path)``.  Each level of
a chain and each row of a sketch gets its own path, so shards built with the
same root seed share every hash function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MERSENNE_61 = (1 << 61) - 1

_P = np.uint64(MERSENNE_61)
_LO32 = np.uint64(0xFFFFFFFF)
_LO29 = np.uint64((1 << 29) - 1)
_S29 = np.uint64(29)
_S32 = np.uint64(32)
_S61 = np.uint64(61)
_EIGHT = np.uint64(8)

# path tags used by derive_seed
LEVEL_TAG = 1
BUCKET_TAG = 2
SIGN_TAG = 3
SKETCH_TAG = 4
CHAIN_TAG = 5
NESTED_TAG = 6


def derive_seed(root: int, *path: int) -> int:
    """Expand ``root`` into an independent 64-bit seed for ``path``."""
    if root < 0:
        raise ValueError(f"seed must be non-negative, got {root}")
    ss = np.random.SeedSequence(int(root), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def _fold(x: np.ndarray) -> np.ndarray:
    # x < 2**63 -> x mod p
    x = (x & _P) + (x >> _S61)
    return np.where(x >= _P, x - _P, x)


def mulmod61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact ``a * b mod (2**61 - 1)`` for uint64 arrays with entries < p."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    a_hi, a_lo = a >> _S32, a & _LO32
    b_hi, b_lo = b >> _S32, b & _LO32
    hh = a_hi * b_hi
    mid = a_hi * b_lo + a_lo * b_hi
    ll = a_lo * b_lo
    # 2**64 == 8 (mod p); mid * 2**32 == (mid >> 29) + ((mid & (2**29-1)) << 32)
    s = hh * _EIGHT + (mid >> _S29) + ((mid & _LO29) << _S32)
    s = s + (ll & _P) + (ll >> _S61)
    return _fold(s)


def addmod61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _fold(np.asarray(a, dtype=np.uint64) + np.asarray(b, dtype=np.uint64))


def poly_eval_many(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate one polynomial per row of ``coeffs`` at every point of ``x``.

    ``coeffs`` has shape (rows, degree+1) with the constant term first.
    Returns an array of shape (rows, len(x)) of values mod p.
    """
    coeffs = np.asarray(coeffs, dtype=np.uint64)
    x = np.asarray(x, dtype=np.uint64)[None, :]
    acc = np.broadcast_to(coeffs[:, -1:], (coeffs.shape[0], x.shape[1]))
    for col in range(coeffs.shape[1] - 2, -1, -1):
        acc = addmod61(mulmod61(acc, x), coeffs[:, col : col + 1])
    return acc


def poly_eval(coeffs: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % MERSENNE_61
    return acc


@dataclass(frozen=True)
class PairwiseBitHash:
    """Zero-one hash ``i -> ((a*i + b) mod p) mod 2`` on [1, n]."""

    coeff_a: int
    coeff_b: int
    universe_size: int
    prime_modulus: int = MERSENNE_61

    def __post_init__(self):
        if self.prime_modulus <= self.universe_size:
            raise ValueError("prime modulus must exceed the universe size")
        for c in (self.coeff_a, self.coeff_b):
            if not 0 <= c < self.prime_modulus:
                raise ValueError(f"coefficient {c} outside [0, p)")

    def bit(self, i: int) -> int:
        i = int(i)
        if not 1 <= i <= self.universe_size:
            raise IndexError(f"index {i} outside [1, {self.universe_size}]")
        return ((self.coeff_a * i + self.coeff_b) % self.prime_modulus) & 1

    def bits(self, idx: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`bit`; returns a uint8 array."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 1 or idx.max() > self.universe_size):
            raise IndexError(f"indices outside [1, {self.universe_size}]")
        if self.prime_modulus != MERSENNE_61:
            return np.array([self.bit(int(i)) for i in idx], dtype=np.uint8)
        v = poly_eval_many(np.array([[self.coeff_b, self.coeff_a]], dtype=np.uint64), idx)[0]
        return (v & np.uint64(1)).astype(np.uint8)


def make_pairwise(seed: int, n: int) -> PairwiseBitHash:
    if n < 1:
        raise ValueError(f"universe size must be >= 1, got {n}")
    a, b = _rng(seed).integers(0, MERSENNE_61, size=2, dtype=np.uint64)
    return PairwiseBitHash(int(a), int(b), n)


def bit(h: PairwiseBitHash, i: int) -> int:
    return h.bit(i)


@dataclass(frozen=True)
class FourwiseHash:
    """Degree-3 polynomial over the prime field reduced to ``range(size)``.

    With ``size == 2`` use :meth:`sign` for a +/-1 output.
    """

    coeffs: tuple[int, int, int, int]
    size: int

    def __post_init__(self):
        if len(self.coeffs) != 4:
            raise ValueError("a 4-wise hash needs exactly 4 coefficients")
        if self.size < 1:
            raise ValueError("range must be >= 1")

    def __call__(self, i: int) -> int:
        return poly_eval(self.coeffs, int(i)) % self.size

    def sign(self, i: int) -> int:
        return 1 if poly_eval(self.coeffs, int(i)) & 1 else -1


def make_fourwise(seed: int, size: int) -> FourwiseHash:
    c = _rng(seed).integers(0, MERSENNE_61, size=4, dtype=np.uint64)
    return FourwiseHash(tuple(int(x) for x in c), size)


@dataclass(frozen=True)
class HashChain:
    """Independent zero-one levels H_1..H_depth defining nested substreams.

    Index ``i`` belongs to level ``j`` when the first ``j`` level bits of
    ``i`` are all one; every index belongs to level 0.
    """

    levels: tuple[PairwiseBitHash, ...]
    universe_size: int

    @property
    def depth(self) -> int:
        return len(self.levels)

    def member(self, j: int, i: int) -> bool:
        if not 0 <= j <= self.depth:
            raise IndexError(f"level {j} outside [0, {self.depth}]")
        if not 1 <= i <= self.universe_size:
            raise IndexError(f"index {i} outside [1, {self.universe_size}]")
        return all(h.bit(i) for h in self.levels[:j])

    def deepest_level(self, i: int) -> int:
        """Largest ``j`` with ``member(j, i)``."""
        j = 0
        for h in self.levels:
            if not h.bit(i):
                break
            j += 1
        return j

    def deepest_levels(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros(idx.shape, dtype=np.int64)
        alive = np.arange(idx.size)
        for h in self.levels:
            if not alive.size:
                break
            alive = alive[h.bits(idx[alive]) == 1]
            out[alive] += 1
        return out


def make_chain(seed: int, n: int, depth: int) -> HashChain:
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    levels = tuple(make_pairwise(derive_seed(seed, LEVEL_TAG, j), n) for j in range(depth))
    return HashChain(levels, n)


def level_member(chain: HashChain, j: int, i: int) -> bool:
    return chain.member(j, i)
