"""Ground truth by rank: decodability of concrete instances, exhaustive search, Monte Carlo outage."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gf2core import (
    DimensionError,
    FineGain,
    make_lt_matrix,
    rank_columns_batch,
    gf2_rank,
    rank_of_columns,
    toeplitz_first_column,
)
from .ltdm import LtdAllocation, LtdConfig

DEFAULT_SEED = 20240611
EXHAUSTIVE_CAP = 8

# per receiver: (own strong user, own weak user, interference sum)
ROLES = ("own1", "own2", "interference")

Plan = tuple[tuple[tuple[int, ...], tuple[int, ...]], tuple[tuple[int, ...], tuple[int, ...]]]


def make_rng(seed: int | None = None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(DEFAULT_SEED if seed is None else seed)))


@dataclass(frozen=True)
class ChannelGains:
    """Fine gains seen at each receiver, indexed [receiver - 1][role]."""

    per_receiver: tuple[tuple[FineGain, FineGain, FineGain], tuple[FineGain, FineGain, FineGain]]

    @classmethod
    def ld_limit(cls, depth: int) -> "ChannelGains":
        g = FineGain.from_bits([0] * depth)
        return cls(((g, g, g), (g, g, g)))

    @classmethod
    def from_values(cls, values: Sequence[float], depth: int) -> "ChannelGains":
        if len(values) != 6:
            raise ValueError("expected six fine gains")
        gs = [FineGain.from_real(v, depth) for v in values]
        return cls((tuple(gs[:3]), tuple(gs[3:])))

    @classmethod
    def random(cls, rng: np.random.Generator, depth: int) -> "ChannelGains":
        bits = rng.integers(0, 2, size=(6, depth))
        gs = [FineGain.from_bits(b) for b in bits]
        return cls((tuple(gs[:3]), tuple(gs[3:])))


def receiver_depth(cfg: LtdConfig, receiver: int) -> int:
    n1, _, incoming, _ = cfg.cell(receiver)
    return max(n1, incoming)


def plan_of(alloc: LtdAllocation | Plan) -> Plan:
    if isinstance(alloc, LtdAllocation):
        return tuple((c.levels1, c.levels2) for c in alloc.cells)
    return alloc


def _rows(cfg: LtdConfig, plan: Plan, receiver: int):
    """Rows hit by each role at ``receiver`` (1-based, in the q-level output)."""
    n1, n2, incoming, _ = cfg.cell(receiver)
    q = max(n1, incoming)
    own1, own2 = plan[receiver - 1]
    for lv, lim in ((own1, n1), (own2, n2)):
        if any(not 1 <= j <= lim for j in lv):
            raise DimensionError(f"level outside a signal of length {lim}")
    other1, other2 = plan[2 - receiver]
    visible = sorted({j for j in (*other1, *other2) if j <= incoming})
    return q, (
        [j + q - n1 for j in own1],
        [j + q - n2 for j in own2],
        [j + q - incoming for j in visible],
    )


@dataclass(frozen=True)
class ReceiverSystem:
    receiver: int
    matrix: np.ndarray
    labels: tuple[tuple[str, int], ...]

    @property
    def unknowns(self) -> int:
        return self.matrix.shape[1]


def build_receiver_system(cfg: LtdConfig, gains: ChannelGains, alloc, receiver: int) -> ReceiverSystem:
    plan = plan_of(alloc)
    q, rows = _rows(cfg, plan, receiver)
    cols, labels = [], []
    for role, g, rs in zip(ROLES, gains.per_receiver[receiver - 1], rows):
        h = make_lt_matrix(g, q)
        for r in rs:
            cols.append(h[:, r - 1])
            labels.append((role, r))
    matrix = np.stack(cols, axis=1) if cols else np.zeros((q, 0), dtype=np.uint8)
    return ReceiverSystem(receiver, matrix, tuple(labels))


def is_decodable(sys: ReceiverSystem) -> bool:
    if sys.unknowns == 0:
        return True
    return gf2_rank(sys.matrix) == sys.unknowns


def decodable_at_both(cfg: LtdConfig, gains: ChannelGains, alloc) -> bool:
    return all(is_decodable(build_receiver_system(cfg, gains, alloc, k)) for k in (1, 2))


def outage_fraction(cfg: LtdConfig, alloc, samples: int, seed: int | None = None) -> float:
    """Share of sampled fine-gain tuples where some receiver cannot decode."""
    if samples < 1:
        raise ValueError("need at least one sample")
    plan = plan_of(alloc)
    rng = make_rng(seed)
    fail = np.zeros(samples, dtype=bool)
    for k in (1, 2):
        q, rows = _rows(cfg, plan, k)
        if not any(rows):
            continue
        if q > 64:
            raise DimensionError("batch rank supports at most 64 levels")
        # expansion bits of the three gains, iid fair bits at depth q - 1
        bits = rng.integers(0, 2, size=(3, samples, max(q - 1, 0)), dtype=np.uint64)
        weights = (np.uint64(1) << np.arange(q - 2, -1, -1, dtype=np.uint64)) if q > 1 else np.zeros(0, np.uint64)
        first = (np.uint64(1) << np.uint64(q - 1)) | (bits * weights).sum(axis=2, dtype=np.uint64)
        cols = [first[i] >> np.uint64(r - 1) for i, rs in enumerate(rows) for r in rs]
        ranks = rank_columns_batch(np.stack(cols, axis=1))
        fail |= ranks < len(cols)
    return float(fail.mean())


@dataclass(frozen=True)
class ExhaustiveResult:
    best: int
    plan: Plan


def _own_columns(first: tuple[int, int], n1: int, n2: int, q: int, visible: int, used: int):
    """Packed columns the cell may use given which visible levels it occupies."""
    out = []
    for which, n in ((0, n1), (1, n2)):
        for j in range(1, n + 1):
            if j <= visible and not (used >> (j - 1)) & 1:
                continue
            out.append(((which, j), first[which] >> (j + q - n - 1)))
    return out


def exhaustive_best_rate(cfg: LtdConfig, gains: ChannelGains) -> ExhaustiveResult:
    """Largest sum rate decodable at both receivers, over every level-subset allocation.

    The search runs over the visible footprint U_k of each cell at the other
    receiver. Given (U_1, U_2), cell k's best rate is the rank of its
    admissible own columns together with the interference columns of U_l,
    minus |U_l|; the matroid property makes that exact.
    """
    if max(cfg.n11, cfg.n21) > EXHAUSTIVE_CAP:
        raise ValueError(f"exhaustive search capped at n1 <= {EXHAUSTIVE_CAP}")
    firsts, dims = [], []
    for k in (1, 2):
        n1, n2, incoming, outgoing = cfg.cell(k)
        q = max(n1, incoming)
        g1, g2, gi = (toeplitz_first_column(g, q) for g in gains.per_receiver[k - 1])
        firsts.append((g1, g2, gi))
        dims.append((n1, n2, incoming, outgoing, q))
    # footprint of cell k lives on levels 1..min(outgoing, n_k1)
    spans = [min(dims[k][3], dims[k][0]) for k in (0, 1)]

    def score(k: int, u_own: int, u_in: int):
        n1, n2, incoming, _, q = dims[k]
        g1, g2, gi = firsts[k]
        interf = [gi >> (j + q - incoming - 1) for j in range(1, spans[1 - k] + 1) if (u_in >> (j - 1)) & 1]
        own = _own_columns((g1, g2), n1, n2, q, spans[k], u_own)
        return rank_of_columns(interf + [c for _, c in own]) - len(interf)

    tables = [
        [[score(k, a, b) for b in range(1 << spans[1 - k])] for a in range(1 << spans[k])] for k in (0, 1)
    ]
    best, arg = -1, (0, 0)
    for u1 in range(1 << spans[0]):
        row1 = tables[0][u1]
        for u2 in range(1 << spans[1]):
            v = row1[u2] + tables[1][u2][u1]
            if v > best:
                best, arg = v, (u1, u2)
    return ExhaustiveResult(best, _witness(dims, firsts, spans, arg))


def _witness(dims, firsts, spans, arg) -> Plan:
    plan = []
    for k in (0, 1):
        n1, n2, incoming, _, q = dims[k]
        g1, g2, gi = firsts[k]
        u_own, u_in = arg[k], arg[1 - k]
        basis = [gi >> (j + q - incoming - 1) for j in range(1, spans[1 - k] + 1) if (u_in >> (j - 1)) & 1]
        rank = rank_of_columns(basis)
        picked = ([], [])
        for (which, j), col in _own_columns((g1, g2), n1, n2, q, spans[k], u_own):
            if rank_of_columns(basis + [col]) > rank:
                basis.append(col)
                rank += 1
                picked[which].append(j)
        plan.append((tuple(picked[0]), tuple(picked[1])))
    return tuple(plan)


def plan_rate(plan: Plan) -> int:
    return sum(len(a) + len(b) for a, b in plan)


def ld_system_matrix(cfg: LtdConfig, alloc, receiver: int) -> np.ndarray:
    """Pure shift-matrix construction of a receiver system (all fine gains equal to one)."""
    plan = plan_of(alloc)
    q, rows = _rows(cfg, plan, receiver)
    cols = [np.eye(q, dtype=np.uint8)[:, r - 1] for rs in rows for r in rs]
    return np.stack(cols, axis=1) if cols else np.zeros((q, 0), dtype=np.uint8)


__all__ = [
    "ChannelGains",
    "DEFAULT_SEED",
    "ExhaustiveResult",
    "ReceiverSystem",
    "build_receiver_system",
    "decodable_at_both",
    "exhaustive_best_rate",
    "is_decodable",
    "ld_system_matrix",
    "make_rng",
    "outage_fraction",
    "plan_rate",
]
