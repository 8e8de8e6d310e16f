"""Text stream files and synthetic stream generators.

File format: an optional header ``# n=<int> m=<int>`` followed by one
decimal integer per line, each in [1, n].
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_HEADER = re.compile(r"^#\s*n=(\d+)\s+m=(\d+)\s*$")


class StreamFormatError(ValueError):
    pass


@dataclass
class StreamFile:
    items: np.ndarray
    n: int
    declared_m: int | None = None

    @property
    def m(self) -> int:
        return int(self.items.size)


def parse_stream(text: str, n: int | None = None) -> StreamFile:
    """Parse stream text; ``n`` overrides a missing header, else max item is used."""
    lines = text.splitlines()
    declared_n = declared_m = None
    start = 0
    if lines and lines[0].startswith("#"):
        match = _HEADER.match(lines[0].strip())
        if not match:
            raise StreamFormatError(f"line 1: malformed header {lines[0]!r}")
        declared_n, declared_m = int(match.group(1)), int(match.group(2))
        start = 1
    body = []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        s = line.strip()
        if not s:
            continue
        try:
            body.append(int(s))
        except ValueError:
            raise StreamFormatError(f"line {lineno}: not an integer: {s!r}") from None
    items = np.array(body, dtype=np.int64)
    if declared_n is not None:
        if n is not None and n != declared_n:
            raise StreamFormatError(f"--n {n} disagrees with header n={declared_n}")
        n = declared_n
    elif n is None:
        n = int(items.max()) if items.size else 1
    if n < 1:
        raise StreamFormatError(f"universe size must be >= 1, got {n}")
    if items.size and (items.min() < 1 or items.max() > n):
        bad = items[(items < 1) | (items > n)][0]
        raise StreamFormatError(f"item {bad} outside [1, {n}]")
    if declared_m is not None and declared_m != items.size:
        raise StreamFormatError(f"header declares m={declared_m} but body has {items.size} items")
    return StreamFile(items, n, declared_m)


def read_stream(path: str, n: int | None = None) -> StreamFile:
    with open(path) as fh:
        return parse_stream(fh.read(), n)


def format_stream(items, n: int) -> str:
    items = np.asarray(items, dtype=np.int64)
    body = "\n".join(map(str, items.tolist()))
    return f"# n={n} m={items.size}\n" + (body + "\n" if items.size else "")


def parse_dist(spec: str) -> tuple[str, float | None]:
    """``zipf:<s>``, ``uniform`` or ``single_heavy:<ratio>``."""
    name, _, arg = spec.partition(":")
    if name == "uniform":
        if arg:
            raise ValueError("uniform takes no parameter")
        return name, None
    if name not in ("zipf", "single_heavy"):
        raise ValueError(f"unknown distribution {name!r}")
    try:
        value = float(arg)
    except ValueError:
        raise ValueError(f"{name} needs a numeric parameter, got {arg!r}") from None
    if name == "zipf" and value <= 0:
        raise ValueError("zipf exponent must be positive")
    if name == "single_heavy" and not 0 <= value <= 1:
        raise ValueError("single_heavy ratio must be in [0, 1]")
    return name, value


def zipf_probabilities(n: int, s: float) -> np.ndarray:
    p = np.arange(1, n + 1, dtype=np.float64) ** -s
    return p / p.sum()


def generate(dist: str, n: int, m: int, seed: int) -> np.ndarray:
    """Deterministic stream of ``m`` items in [1, n]."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    name, param = parse_dist(dist)
    rng = np.random.default_rng(seed)
    if name == "uniform":
        return rng.integers(1, n + 1, size=m)
    if name == "zipf":
        return rng.choice(n, size=m, p=zipf_probabilities(n, param)) + 1
    heavy = int(param * m)
    if heavy < m and n < 2:
        raise ValueError("single_heavy needs n >= 2 for the light items")
    light = rng.integers(2, n + 1, size=m - heavy) if heavy < m else np.zeros(0, np.int64)
    items = np.concatenate([np.ones(heavy, dtype=np.int64), light])
    rng.shuffle(items)
    return items
