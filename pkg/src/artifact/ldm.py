"""Linear deterministic IMAC: alignment gain, assignment vectors, rates and bounds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np


class RegimeError(ValueError):
    pass


def layer_count(p: int, q: int) -> int:
    return 0 if q == 0 else p // q


def phi(p: int, q: int) -> int:
    """Alignment gain of a common part spanning p levels with block size q."""
    if p < 0 or q < 0:
        raise ValueError("phi takes non-negative arguments")
    if q > p:
        # only reachable outside the scheme's operating range
        warnings.warn(f"phi({p}, {q}) evaluated with q > p", stacklevel=2)
    l = layer_count(p, q)
    if l % 2 == 0:
        return q + l * q // 2
    return p - (l - 1) * q // 2


def fill_order(n: int, delta: int) -> list[int]:
    """0-based positions in the order the optimal assignment sets them to one.

    Even-numbered blocks first, then the remainder block, then the odd blocks;
    with an odd block count the odd part is walked backwards.
    """
    if delta == 0:
        return list(range(n))
    l, rem = divmod(n, delta)

    def block(b: int) -> list[int]:
        return list(range((b - 1) * delta, b * delta))

    order = [i for b in range(2, l + 1, 2) for i in block(b)]
    order += list(range(l * delta, n))
    odd = [i for b in range(1, l + 1, 2) for i in block(b)]
    order += odd[::-1] if l % 2 else odd
    return order


@dataclass(frozen=True)
class AssignmentVector:
    a: np.ndarray
    delta: int

    @property
    def x(self) -> int:
        return int(self.a.sum())

    @property
    def gamma(self) -> np.ndarray:
        return (1 - self.a).astype(np.uint8)

    @property
    def gamma1(self) -> np.ndarray:
        return np.concatenate([self.gamma, np.ones(self.delta, dtype=np.uint8)])

    @property
    def gamma2(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.delta, dtype=np.uint8), self.gamma])

    @property
    def rho(self) -> int:
        return int(self.gamma1.astype(np.int64) @ self.gamma2.astype(np.int64))


def overlap(a: np.ndarray, delta: int) -> int:
    return AssignmentVector(np.asarray(a, dtype=np.uint8), delta).rho


def ld_assignment_vector(n: int, delta: int, x: int) -> AssignmentVector:
    if delta < 0 or n < 0:
        raise ValueError("span and block size must be non-negative")
    if not 0 <= x <= n:
        raise ValueError(f"popcount {x} infeasible for span {n}")
    a = np.zeros(n, dtype=np.uint8)
    a[fill_order(n, delta)[:x]] = 1
    return AssignmentVector(a, delta)


@dataclass(frozen=True)
class LdConfig:
    n11: int
    n12: int
    n21: int
    n22: int
    ni_2to1: int
    ni_1to2: int

    def __post_init__(self):
        if min(self.n12, self.n22, self.ni_2to1, self.ni_1to2) < 0:
            raise ValueError("coarse gains must be non-negative")
        if self.n11 < self.n12 or self.n21 < self.n22:
            raise ValueError("the first user of each cell must be the stronger one")

    @classmethod
    def symmetric(cls, n1: int, n2: int, ni: int) -> "LdConfig":
        return cls(n1, n2, n1, n2, ni, ni)

    @property
    def delta1(self) -> int:
        return self.n11 - self.n12

    @property
    def delta2(self) -> int:
        return self.n21 - self.n22

    def is_weak(self) -> bool:
        return self.ni_2to1 + self.ni_1to2 <= min(self.n12, self.n22)

    def require_weak(self) -> None:
        if not self.is_weak():
            raise RegimeError(
                f"interference {self.ni_2to1}+{self.ni_1to2} exceeds the weaker direct "
                f"links min({self.n12}, {self.n22}); not in the weak regime"
            )

    def cell(self, k: int) -> tuple[int, int, int, int]:
        """(strong, weak, incoming, outgoing) levels of cell k."""
        if k == 1:
            return self.n11, self.n12, self.ni_2to1, self.ni_1to2
        if k == 2:
            return self.n21, self.n22, self.ni_1to2, self.ni_2to1
        raise ValueError("cell must be 1 or 2")


class SubCase(str, Enum):
    IC_LIMITED = "IC-limited"
    RISING_GAIN = "rising-gain"
    FULL_GAIN = "full-gain"


def ld_subcase(cfg: LdConfig, cell: int) -> SubCase:
    cfg.require_weak()
    n1, n2, incoming, _ = cfg.cell(cell)
    if n2 <= n1 - incoming:
        return SubCase.IC_LIMITED
    if 2 * n2 <= 2 * n1 - incoming:
        return SubCase.RISING_GAIN
    return SubCase.FULL_GAIN


def cell_rate(cfg: LdConfig, cell: int) -> int:
    """Per-cell share of the weak-regime sum rate.

    A full-gain cell gets n^j_i + zeta + phi (the sub-system decomposition);
    the other sub-cases use the rate of the lower-triangular scheme, which
    needs no alignment for the IC-limited cell.
    """
    n1, n2, incoming, outgoing = cfg.cell(cell)
    sub = ld_subcase(cfg, cell)
    if sub is SubCase.FULL_GAIN:
        zeta = n2 - incoming - outgoing
        return outgoing + zeta + phi(incoming, n1 - n2)
    # same as the lower-triangular Case I per-cell sum for these sub-cases
    from .ltdm import weak_cell_rate

    return weak_cell_rate(n1, n2, outgoing, incoming)


def ld_achievable_sum_rate(cfg: LdConfig) -> int:
    cfg.require_weak()
    if all(ld_subcase(cfg, k) is SubCase.FULL_GAIN for k in (1, 2)):
        return (
            cfg.n12 + cfg.n22 - cfg.ni_2to1 - cfg.ni_1to2
            + phi(cfg.ni_2to1, cfg.delta1) + phi(cfg.ni_1to2, cfg.delta2)
        )
    return cell_rate(cfg, 1) + cell_rate(cfg, 2)


def ld_upper_bound(cfg: LdConfig) -> Fraction:
    cfg.require_weak()
    return Fraction(cfg.n11 + cfg.n21) - Fraction(cfg.ni_1to2 + cfg.ni_2to1, 2)
