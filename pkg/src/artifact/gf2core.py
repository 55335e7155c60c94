"""Bit-level linear algebra over GF(2).

Level 1 is the most significant bit everywhere in this package. Dense
matrices are numpy uint8 arrays; the hot paths (rank of a column set)
work on Python ints used as bitsets, where bit ``q - 1`` is level 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    pass


class GainDomainError(ValueError):
    pass


def as_bits(v: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(v, dtype=np.uint8)
    if arr.ndim != 1:
        raise DimensionError("bit vector must be one-dimensional")
    if np.any(arr > 1):
        raise ValueError("bit vector entries must be 0 or 1")
    return arr


def make_shift_matrix(q: int, s: int) -> np.ndarray:
    """q x q matrix with ones on the s-th subdiagonal.

    Multiplying a vector by it moves every bit s levels down; the lowest s
    bits fall off and the top is zero-filled.
    """
    if q <= 0 or s < 0 or s > q:
        raise DimensionError(f"invalid shift: q={q}, s={s}")
    return np.eye(q, k=-s, dtype=np.uint8)


@dataclass(frozen=True)
class FineGain:
    """A real gain with its binary expansion truncated to ``depth`` bits."""

    value: float
    depth: int
    bits: tuple[int, ...]

    @classmethod
    def from_real(cls, g: float | Fraction, depth: int, upper: int = 2) -> "FineGain":
        if not (1 < g <= upper):
            raise GainDomainError(f"fine gain {g} outside (1, {upper}]")
        if depth < 0:
            raise DimensionError("depth must be non-negative")
        # exact rational so the floor is bit-exact for dyadic inputs
        frac = Fraction(g) - 1
        bits = []
        for _ in range(depth):
            frac *= 2
            b = 1 if frac >= 1 else 0
            bits.append(b)
            frac -= b
        return cls(float(g), depth, tuple(bits))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "FineGain":
        bits = tuple(int(b) for b in bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("expansion bits must be 0 or 1")
        value = 1.0 + sum(b * 2.0 ** -(i + 1) for i, b in enumerate(bits))
        return cls(value, len(bits), bits)

    def reconstruct(self) -> Fraction:
        return 1 + sum(Fraction(b, 2 ** (i + 1)) for i, b in enumerate(self.bits))


def make_lt_matrix(gain: FineGain | float, q: int) -> np.ndarray:
    """Unit lower-triangular Toeplitz matrix with first column [1, g_1, ..., g_{q-1}]."""
    if q < 1:
        raise DimensionError("q must be positive")
    if not isinstance(gain, FineGain):
        gain = FineGain.from_real(gain, q - 1)
    elif not (1 < gain.value <= 2) and any(gain.bits):
        raise GainDomainError(f"fine gain {gain.value} outside (1, 2]")
    if gain.depth < q - 1:
        raise DimensionError(f"expansion depth {gain.depth} < {q - 1}")
    col = np.zeros(q, dtype=np.uint8)
    col[0] = 1
    col[1:] = gain.bits[: q - 1]
    m = np.zeros((q, q), dtype=np.uint8)
    for j in range(q):
        m[j:, j] = col[: q - j]
    return m


def matvec(m: np.ndarray, v: Sequence[int] | np.ndarray) -> np.ndarray:
    return (np.asarray(m, dtype=np.int64) @ as_bits(v).astype(np.int64) % 2).astype(np.uint8)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64) % 2).astype(np.uint8)


def first_one(v: Sequence[int] | np.ndarray) -> int | None:
    """1-based level of the most significant set bit, or None for the zero vector."""
    nz = np.flatnonzero(as_bits(v))
    return int(nz[0]) + 1 if nz.size else None


def _row_reduce(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    a = np.array(m, dtype=np.uint8, copy=True) & 1
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(a[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        below = np.flatnonzero(a[:, c])
        below = below[below != r]
        a[below] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def gf2_rank(m: np.ndarray) -> int:
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return 0
    return len(_row_reduce(m)[1])


def gf2_solve(m: np.ndarray, y: Sequence[int] | np.ndarray) -> np.ndarray | None:
    """One solution x of m @ x = y, or None when y is outside the column space."""
    m = np.atleast_2d(np.asarray(m, dtype=np.uint8))
    y = as_bits(y)
    rows, cols = m.shape
    if y.shape[0] != rows:
        raise DimensionError("right-hand side length does not match rows")
    aug, pivots = _row_reduce(np.hstack([m, y[:, None]]))
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for r, c in enumerate(pivots):
        x[c] = aug[r, cols]
    return x


# int-bitset helpers: bit (q - level) holds the given level


def bits_to_int(v: Sequence[int] | np.ndarray) -> int:
    out = 0
    for b in as_bits(v):
        out = (out << 1) | int(b)
    return out


def int_to_bits(x: int, q: int) -> np.ndarray:
    return np.array([(x >> (q - 1 - i)) & 1 for i in range(q)], dtype=np.uint8)


def toeplitz_first_column(gain: FineGain, q: int) -> int:
    """First column of make_lt_matrix(gain, q) packed as an int."""
    return bits_to_int([1, *gain.bits[: q - 1]]) if q > 1 else 1


def lt_column(first_col: int, j: int) -> int:
    """Column j (1-based) of the Toeplitz matrix whose first column is ``first_col``."""
    return first_col >> (j - 1)


def rank_of_columns(cols: Iterable[int]) -> int:
    """Rank of a set of int-packed column vectors, via an xor basis keyed on the top bit."""
    basis: dict[int, int] = {}
    for v in cols:
        while v:
            top = v.bit_length()
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                break
    return len(basis)


def rank_columns_batch(cols: np.ndarray) -> np.ndarray:
    """Ranks of many column sets at once.

    ``cols`` has shape (samples, k) of uint64 packed columns (q <= 64). The
    elimination runs over the k columns, vectorised across samples.
    """
    cols = np.array(cols, dtype=np.uint64, copy=True)
    samples, k = cols.shape
    rank = np.zeros(samples, dtype=np.int64)
    one = np.uint64(1)
    for i in range(k):
        v = cols[:, i]
        nz = v != 0
        if not nz.any():
            continue
        rank += nz
        # highest set bit of each pivot, as a mask
        top = np.zeros(samples, dtype=np.uint64)
        w = v.copy()
        for shift in (1, 2, 4, 8, 16, 32):
            w |= w >> np.uint64(shift)
        top[nz] = (w[nz] >> one) + one
        rest = cols[:, i + 1 :]
        hit = (rest & top[:, None]) != 0
        hit &= nz[:, None]
        rest ^= np.where(hit, v[:, None], np.uint64(0))
        cols[:, i + 1 :] = rest
    return rank
