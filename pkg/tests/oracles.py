"""Reference computations written independently of the package code."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def all_vectors(n: int) -> np.ndarray:
    """Every length-n 0/1 vector, one per row; column 0 is the top level."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int64)


def overlaps(a: np.ndarray, d: int) -> np.ndarray:
    """Shifted self-overlap of the free levels, for each row of ``a``.

    Free levels g = 1 - a. Stacking g over d always-free levels and d empty
    levels over g, the overlap counts rows i >= d where both copies are free
    plus the last d free levels that meet the always-free tail.
    """
    g = 1 - a
    n = a.shape[1]
    inner = (g[:, d:] * g[:, : n - d]).sum(axis=1) if d < n else np.zeros(len(a), dtype=np.int64)
    tail = g[:, max(n - d, 0):].sum(axis=1)
    return inner + tail


@lru_cache(maxsize=None)
def exhaustive_min_overlap(n: int, d: int) -> tuple[int, ...]:
    """Minimum overlap for each popcount 0..n over all 2**n assignment vectors."""
    a = all_vectors(n)
    rho = overlaps(a, d) if n else np.array([d * 0])
    pop = a.sum(axis=1) if n else np.array([0])
    return tuple(int(rho[pop == x].min()) for x in range(n + 1))


def block_fill_vector(n: int, d: int, x: int) -> list[int]:
    """Fill x ones by walking the blocks: even ones, leftover tail, then the odd ones.

    Written as a sort on a per-position priority rather than by concatenating
    index ranges.
    """
    if d == 0:
        return [1] * x + [0] * (n - x)
    l = n // d

    def key(i):
        b = i // d + 1
        if b > l:
            return (1, i)
        if b % 2 == 0:
            return (0, i)
        return (2, -i if l % 2 else i)

    order = sorted(range(n), key=key)
    a = [0] * n
    for i in order[:x]:
        a[i] = 1
    return a


def block_fill_phi(p: int, q: int, exhaustive: bool = False) -> int:
    """Alignment gain from the layer-filling picture.

    A (p+q)-level window: placing x aligned ones leaves p - x free levels
    on each shifted copy, the q offset levels are free for nothing else,
    and overlapping free levels count once. The best x wins.
    """
    best = -1
    table = exhaustive_min_overlap(p, q) if exhaustive else None
    for x in range(p + 1):
        if exhaustive:
            rho = table[x]
        else:
            rho = int(overlaps(np.array([block_fill_vector(p, q, x)], dtype=np.int64), q)[0]) if p else q * 0
        best = max(best, p - x + q - rho)
    return best


def brute_force_phi_small(p: int, q: int) -> int:
    """Same quantity with a literal loop over subsets (tiny p only)."""
    best = -1
    for x in range(p + 1):
        rho = min(
            sum(g1 * g2 for g1, g2 in zip(
                [1 - (i in s) for i in range(p)] + [1] * q,
                [0] * q + [1 - (i in s) for i in range(p)],
            ))
            for s in map(set, itertools.combinations(range(p), x))
        )
        best = max(best, p - x + q - rho)
    return best
