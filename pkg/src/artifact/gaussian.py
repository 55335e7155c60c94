"""Gaussian IMAC: power layering, successive-decoding rates, bounds and constellation distance.

Powers are linear SNR-scale values; exponents and rates are in bits (log2).
Each cell splits its received power range into layers that mirror the
deterministic block structure: common blocks of width log2(SNR_i1/SNR_i2)
at the top, an interference-free private layer, and at the bottom the
layers where the other cell's aligned common parts arrive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ltdm import LtdConfig, upper_bounds

GAP_CONSTANT = 11.1
OUTER_CODE_LOSS = 1.5
DISTANCE_THRESHOLD = 32.0
ALIGN_RTOL = 1e-9


class SingularityError(ValueError):
    pass


class InvariantBreach(RuntimeError):
    pass


def phi_real(p: float, q: float) -> float:
    """Alignment gain for real-valued spans."""
    if q <= 0:
        return 0.0
    l = math.floor(p / q)
    if l % 2 == 0:
        return q + l * q / 2
    return p - (l - 1) * q / 2


@dataclass(frozen=True)
class GaussConfig:
    """Linear SNR/INR values; inr_1to2 is cell 1's power arriving at receiver 2."""

    P: float
    snr11: float
    snr12: float
    snr21: float
    snr22: float
    inr_1to2: float
    inr_2to1: float

    def __post_init__(self):
        for name in ("snr11", "snr12", "snr21", "snr22"):
            if not getattr(self, name) > 1:
                raise ValueError(f"{name} must exceed 1")
        if self.snr12 > self.snr11 or self.snr22 > self.snr21:
            raise ValueError("the first user of each cell must be the stronger one")
        if self.inr_1to2 < 1 or self.inr_2to1 < 1:
            raise ValueError("interference-to-noise ratios below 1 are not modelled")

    @classmethod
    def symmetric(cls, P: float, alpha: float, beta: float) -> "GaussConfig":
        """SNR_i1 = P, SNR_i2 = P^beta, INR = P^alpha."""
        return cls(P, P, P**beta, P, P**beta, P**alpha, P**alpha)

    @classmethod
    def from_channel(cls, P: float, h: np.ndarray) -> "GaussConfig":
        """From real gains h[i, k, j] (cell i, user k, receiver j); interference users share a gain."""
        h = np.asarray(h, dtype=float)
        s = lambda i, k, j: float(h[i, k, j] ** 2 * P)
        return cls(P, s(0, 0, 0), s(0, 1, 0), s(1, 0, 1), s(1, 1, 1), s(0, 0, 1), s(1, 0, 0))

    def snr(self, cell: int, user: int) -> float:
        return {(1, 1): self.snr11, (1, 2): self.snr12, (2, 1): self.snr21, (2, 2): self.snr22}[cell, user]

    def incoming(self, cell: int) -> float:
        return self.inr_2to1 if cell == 1 else self.inr_1to2

    def outgoing(self, cell: int) -> float:
        return self.inr_1to2 if cell == 1 else self.inr_2to1

    def block_bits(self, cell: int) -> float:
        return math.log2(self.snr(cell, 1)) - math.log2(self.snr(cell, 2))

    def beta(self, cell: int) -> float:
        return math.log2(self.snr(cell, 2)) / math.log2(self.snr(cell, 1))

    def alpha(self, cell: int) -> float:
        return math.log2(self.incoming(cell)) / math.log2(self.snr(cell, 1))

    def layers(self, cell: int) -> float:
        """Real layer count: outgoing span over block width."""
        d = self.block_bits(cell)
        if d <= 0:
            raise SingularityError(f"cell {cell}: equal user strengths (beta = 1) leave no block structure")
        return math.log2(self.outgoing(cell)) / d

    def is_weak(self, relaxed: bool = False) -> bool:
        """Interference exponents add up below the weaker (or, relaxed, stronger) direct links."""
        load = math.log2(self.inr_1to2) + math.log2(self.inr_2to1)
        if relaxed:
            cap = min(math.log2(self.snr11), math.log2(self.snr21))
        else:
            cap = min(math.log2(self.snr12), math.log2(self.snr22))
        return load <= cap + 1e-12

    def require_weak(self) -> bool:
        """Returns True when only the relaxed condition holds (caveat flag)."""
        if self.is_weak():
            return False
        if self.is_weak(relaxed=True):
            warnings.warn("configuration satisfies only the relaxed weak-interference condition", stacklevel=3)
            return True
        raise ValueError("configuration is outside the weak interference regime")


def modulate_inputs(h: np.ndarray) -> dict[str, float]:
    """Effective gains after pre-multiplying each input by the cross gain of its partner.

    ``h[i, k, j]`` is the fine gain from user k of cell i to receiver j.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (2, 2, 2):
        raise ValueError("expected a 2x2x2 gain array")
    if np.any(h <= 1) or np.any(h > 2):
        raise ValueError("fine gains must lie in (1, 2]")
    g = {
        "g11_1": h[0, 0, 0] * h[0, 1, 1],
        "g12_1": h[0, 1, 0] * h[0, 0, 1],
        "g21_2": h[1, 0, 1] * h[1, 1, 0],
        "g22_2": h[1, 1, 1] * h[1, 0, 0],
    }
    # both interferers arrive through the same product, so their parts align
    for rx, cell in ((0, 1), (1, 0)):
        a = h[cell, 0, rx] * h[cell, 1, rx]
        b = h[cell, 1, rx] * h[cell, 0, rx]
        if a != b:
            raise InvariantBreach("interference gains do not align")
        g[f"g{cell + 1}_{rx + 1}"] = float(a)
    return {k: float(v) for k, v in g.items()}


@dataclass(frozen=True)
class Layer:
    kind: str  # common, remainder, private, incoming, incoming_rem
    index: int
    top: float
    bottom: float

    @property
    def power(self) -> float:
        return self.top - self.bottom

    @property
    def exact_power(self) -> Fraction:
        return Fraction(self.top) - Fraction(self.bottom)


@dataclass(frozen=True)
class PowerPartition:
    cell: int
    layers: tuple[Layer, ...]
    L: float
    L_other: float

    @property
    def theta(self) -> tuple[float, ...]:
        return tuple(l.power for l in self.layers)

    @property
    def floor_L(self) -> int:
        return math.floor(self.L)

    @property
    def l_max(self) -> int:
        return len(self.layers)

    def user_power(self, cfg: GaussConfig, user: int) -> Fraction:
        """Exact transmit power of one user, summed over the layers it occupies."""
        gain_sq = Fraction(cfg.snr(self.cell, user)) / Fraction(cfg.P)
        used = [l.exact_power for l in self.layers if uses_layer(self, l) == user]
        return sum(used, Fraction(0)) / gain_sq

    def span_power(self, first: int = 0) -> Fraction:
        """Exact power of layers ``first`` onwards (0-based)."""
        return sum((l.exact_power for l in self.layers[first:]), Fraction(0))


def power_partition(cfg: GaussConfig, cell: int) -> PowerPartition:
    other = 2 if cell == 1 else 1
    L = cfg.layers(cell)
    L_other = cfg.layers(other)
    s_bits = math.log2(cfg.snr(cell, 1))
    d = cfg.block_bits(cell)
    d_other = cfg.block_bits(other)
    inr_in = cfg.incoming(cell)
    fl, fl_other = math.floor(L), math.floor(L_other)

    # boundary targets from the top; each layer is the gap between two targets
    marks: list[tuple[str, int, float]] = [("common", m, 2.0 ** (s_bits - m * d)) for m in range(1, fl + 1)]
    if fl >= 1:
        marks[0] = ("common", 1, cfg.snr(cell, 2))
    if fl % 2 == 1:
        marks.append(("remainder", fl + 1, 2.0 ** (s_bits - (fl + 1) * d)))
    marks.append(("private", 0, inr_in))
    in_bits = math.log2(inr_in)
    marks += [("incoming", m, 2.0 ** (in_bits - m * d_other)) for m in range(1, fl_other + 1)]
    marks.append(("incoming_rem", 0, 1.0))

    layers = []
    top = cfg.snr(cell, 1)
    for kind, idx, target in marks:
        # targets never rise; the relaxed regime can push a target below the next one
        floor_here = 1.0 if kind == "incoming_rem" else (inr_in if kind in ("common", "remainder") else 1.0)
        bottom = min(top, max(target, floor_here))
        if bottom < top:
            layers.append(Layer(kind, idx, top, bottom))
        top = bottom
    return PowerPartition(cell, tuple(layers), L, L_other)


def level_rate(theta: float, noise: float, k: int = 1) -> float:
    """Rate of a lattice layer of power theta over effective noise; k aligned codewords share it."""
    if theta <= 0 or noise <= 0:
        raise ValueError("layer power and noise must be positive")
    if k not in (1, 2):
        raise ValueError("at most two codewords align on one layer")
    return max(0.0, math.log2(1 / k + theta / noise))


# which sub-signals occupy which layers


def uses_layer(part: PowerPartition, layer: Layer) -> int | None:
    """User (1 or 2) of this cell that transmits on ``layer``, or None if it stays empty."""
    fl_other = math.floor(part.L_other)
    if layer.kind == "common":
        return 1 if layer.index % 2 else 2
    if layer.kind == "remainder":
        return 2
    if layer.kind == "private":
        return 1
    if layer.kind == "incoming":
        return 1 if layer.index % 2 == 0 else None
    # the bottom sliver is clean only when the other cell keeps its private part below our noise floor
    return 1 if fl_other % 2 == 1 else None


@dataclass(frozen=True)
class SubSignal:
    cell: int
    user: int
    layer: Layer

    def scale(self, cfg: GaussConfig, receiver: int) -> float:
        if receiver == self.cell:
            return 1.0
        return cfg.outgoing(self.cell) / cfg.snr(self.cell, self.user)

    def received(self, cfg: GaussConfig, receiver: int) -> float:
        return self.layer.power * self.scale(cfg, receiver)

    def received_top(self, cfg: GaussConfig, receiver: int) -> float:
        return self.layer.top * self.scale(cfg, receiver)


def sub_signals(cfg: GaussConfig) -> list[SubSignal]:
    out = []
    for cell in (1, 2):
        part = power_partition(cfg, cell)
        for layer in part.layers:
            user = uses_layer(part, layer)
            if user is not None:
                out.append(SubSignal(cell, user, layer))
    return out


def _groups(components: list[tuple[float, float, SubSignal]]):
    """Order by received top edge; equal edges and powers form one aligned group."""
    comps = sorted(components, key=lambda c: (-c[0], -c[1]))
    groups: list[list[tuple[float, float, SubSignal]]] = []
    for c in comps:
        if groups and all(math.isclose(a, b, rel_tol=ALIGN_RTOL) for a, b in zip(groups[-1][0][:2], c[:2])):
            groups[-1].append(c)
        else:
            groups.append([c])
    return groups


def decoding_constraints(cfg: GaussConfig, signals: list[SubSignal]) -> dict[SubSignal, float]:
    """Rate cap of every sub-signal from successive decoding at both receivers.

    Each receiver peels layers from the top edge down while any own layer
    is left; everything positioned below the current layer, including
    other-cell leakage under the noise floor, counts as noise. Interference
    that arrives entirely below the noise floor is skipped rather than
    decoded.
    """
    caps = {s: math.inf for s in signals}
    for rx in (1, 2):
        comps = [(s.received_top(cfg, rx), s.received(cfg, rx), s) for s in signals]
        groups = _groups([c for c in comps if c[1] > 0])
        own_idx = [i for i, g in enumerate(groups) if any(s.cell == rx for *_, s in g)]
        if not own_idx:
            continue
        tail = [sum(c[1] for c in g) for g in groups]
        below = np.concatenate([np.cumsum(tail[::-1])[::-1][1:], [0.0]])
        for i in range(own_idx[-1] + 1):
            g = groups[i]
            top, power = g[0][0], g[0][1]
            if all(s.cell != rx for *_, s in g) and top <= 1.0:
                continue
            r = level_rate(power, 1.0 + float(below[i]), len(g)) if len(g) <= 2 else 0.0
            for *_, s in g:
                caps[s] = min(caps[s], r)
    return caps


def noise_terms(cfg: GaussConfig, receiver: int, level: int) -> float:
    """1 plus the power of every used layer strictly below ``level`` (1-based) on this receiver's grid.

    An aligned incoming layer carries two codewords and counts twice.
    """
    part = power_partition(cfg, receiver)
    if not 1 <= level <= part.l_max:
        raise ValueError(f"level {level} outside 1..{part.l_max}")
    total = 1.0
    for layer in part.layers[level:]:
        if uses_layer(part, layer) is not None:
            total += layer.power
        elif layer.kind == "incoming":
            total += 2 * layer.power
    return total


def odd_block_share(cfg: GaussConfig, cell: int) -> float:
    """Sum over odd m <= floor(L) of x^(m-1) - x^m with x = SNR_i1^-(1-beta); stays below one."""
    x = 2.0 ** -cfg.block_bits(cell)
    fl = math.floor(cfg.layers(cell))
    return sum(x ** (m - 1) - x**m for m in range(1, fl + 1, 2))


@dataclass(frozen=True)
class GaussRate:
    raw: float
    closed_form: float
    per_signal: tuple[tuple[int, int, str, int, float], ...]
    outer_per_layer: float
    outer_six_streams: float
    odd_layers: bool
    relaxed: bool

    @property
    def margin(self) -> float:
        return self.raw - self.closed_form


def closed_form_rate(cfg: GaussConfig) -> float:
    total = -6.0
    for cell in (1, 2):
        total += math.log2(cfg.snr(cell, 2)) - math.log2(cfg.incoming(cell))
        total += phi_real(math.log2(cfg.outgoing(cell)), cfg.block_bits(cell))
        total -= 2.5 * math.floor(cfg.layers(cell))
    return total


def outer_code_adjust(rate: float, streams: int = 1) -> float:
    if rate < 0:
        raise ValueError("rate must be non-negative")
    return max(0.0, rate - OUTER_CODE_LOSS * streams)


def achievable_sum_rate(cfg: GaussConfig, check: bool = True) -> GaussRate:
    relaxed = cfg.require_weak()
    signals = sub_signals(cfg)
    caps = decoding_constraints(cfg, signals)
    rates = tuple(
        (s.cell, s.user, s.layer.kind, s.layer.index, caps[s] if math.isfinite(caps[s]) else 0.0) for s in signals
    )
    raw = sum(r[-1] for r in rates)
    closed = closed_form_rate(cfg)
    odd = any(math.floor(cfg.layers(c)) % 2 for c in (1, 2))
    out = GaussRate(
        raw,
        closed,
        rates,
        sum(outer_code_adjust(r[-1]) for r in rates),
        outer_code_adjust(raw, 6),
        odd,
        relaxed,
    )
    # the closed form is a guarantee only under the strict condition
    if check and not relaxed and raw < closed - 1e-9:
        raise InvariantBreach(f"layered rate {raw:.6f} below the closed form {closed:.6f}")
    return out


def example_layer_rates(P: float) -> tuple[float, float, float, float]:
    """The four layer rates of the symmetric alpha = 1/2, beta = 3/4 example."""
    cfg = GaussConfig.symmetric(P, 0.5, 0.75)
    part = power_partition(cfg, 1)
    th = part.theta
    n = [noise_terms(cfg, 1, l) for l in range(1, 5)]
    return (
        level_rate(th[0], n[0]),
        level_rate(th[1], n[1]),
        level_rate(th[2], n[2], 2),
        level_rate(th[3], n[3]),
    )


def alignment_check(cfg: GaussConfig, cell: int, level: int) -> tuple[bool, tuple[float, float], tuple[float, float]]:
    """Received powers of x_i1 on block ``level`` and x_i2 on block ``level + 1``.

    Returns (aligned-and-separated, powers at the other receiver, powers at the own receiver).
    """
    if level < 1:
        raise ValueError("levels start at 1")
    s_bits = math.log2(cfg.snr(cell, 1))
    d = cfg.block_bits(cell)
    block = lambda m: 2.0 ** (s_bits - (m - 1) * d) - 2.0 ** (s_bits - m * d)
    t1, t2 = block(level), block(level + 1)
    inr = cfg.outgoing(cell)
    far = (t1 * inr / cfg.snr(cell, 1), t2 * inr / cfg.snr(cell, 2))
    near = (t1, t2)
    aligned = math.isclose(far[0], far[1], rel_tol=ALIGN_RTOL)
    separated = d > 0 and not math.isclose(near[0], near[1], rel_tol=ALIGN_RTOL)
    return aligned and separated, far, near


def coarse_levels(cfg: GaussConfig) -> LtdConfig:
    c = lambda x: max(0, math.ceil(math.log2(x)))
    return LtdConfig(c(cfg.snr11), c(cfg.snr12), c(cfg.snr21), c(cfg.snr22), c(cfg.inr_2to1), c(cfg.inr_1to2))


def gaussian_upper_bound(cfg: GaussConfig) -> float:
    return float(upper_bounds(coarse_levels(cfg)).minimum) + GAP_CONSTANT


# minimum constellation distance


@dataclass(frozen=True)
class Stream:
    """Integer constellation 0..points-1 scaled by 2**offset, received through gain ``group``."""

    group: int
    offset: int
    points: int

    @classmethod
    def of_rate(cls, group: int, strength: int, rate: int) -> "Stream":
        return cls(group, strength - rate, 2**rate)

    @classmethod
    def aligned(cls, group: int, strength: int, rate: int) -> "Stream":
        # sum of two codewords on the same levels
        return cls(group, strength - rate, 2 ** (rate + 1) - 1)


def _difference_set(streams: Sequence[Stream]) -> np.ndarray | None:
    """All differences of one gain group's composite constellation; None if two points coincide."""
    points = np.zeros(1, dtype=np.int64)
    diffs = np.zeros(1, dtype=np.int64)
    for s in streams:
        step = 1 << max(s.offset, 0)
        points = (points[:, None] + np.arange(s.points, dtype=np.int64)[None, :] * step).ravel()
        span = np.arange(-(s.points - 1), s.points, dtype=np.int64) * step
        diffs = np.unique((diffs[:, None] + span[None, :]).ravel())
    if np.unique(points).size < points.size:
        return None
    return diffs


def min_constellation_distance(gains: Sequence[float], streams: Sequence[Stream], cap: int = 1 << 22) -> float:
    """Smallest |sum_g gain_g * diff_g| over distinct received tuples."""
    groups = sorted({s.group for s in streams})
    sets = []
    for g in groups:
        diffs = _difference_set([s for s in streams if s.group == g])
        if diffs is None:
            return 0.0
        sets.append((float(gains[g]), diffs))
    sets = [s for s in sets if s[1].size > 1]
    if not sets:
        return math.inf
    sets.sort(key=lambda s: s[1].size)
    *small, (g_big, big) = sets
    work = int(np.prod([s[1].size for s in small])) if small else 1
    if work > cap:
        raise ValueError(f"enumeration of {work} points exceeds the cap {cap}")
    partial = np.zeros(1)
    for g, d in small:
        partial = (partial[:, None] + g * d[None, :].astype(float)).ravel()
    best = math.inf
    zero_prefix = np.isclose(partial, 0.0) if small else np.array([True])
    # for each partial sum, the nearest big-group multiple on either side
    target = -partial / g_big
    pos = np.searchsorted(big, target)
    for shift in (-1, 0):
        idx = np.clip(pos + shift, 0, big.size - 1)
        val = np.abs(partial + g_big * big[idx])
        # exclude the all-zero difference
        val = np.where(zero_prefix & (big[idx] == 0), np.inf, val)
        best = min(best, float(val.min()))
    nonzero_big = np.abs(big[big != 0]).min()
    best = min(best, g_big * float(nonzero_big))
    return best


LEMMA_CONSTANTS = {"strong": 13104, "weak": 2016, "weak_core": 1008}


def lemma_strong_conditions(n1: int, n2: int, ni: int, rc11: int, rc12: int, rc21: int, rp11: int, delta: float, c: float = 13104):
    """Margins of the three per-receiver inequalities of the decoding lemma for ni >= n1 / 2."""
    L = math.log2(c / delta)
    return (
        n1 - L - (rc11 + rc12 + rc21 + rp11),
        n2 - L - (rc12 + rc21 + rp11),
        ni - 6 - (rc21 + rp11),
    )


def lemma_weak_conditions(
    n1: int, n2: int, ni: int, rc11: int, rc12: int, rc21: int, rp1: int, rp2: int, delta: float, c: float = 2016
):
    """Margins of the four per-receiver inequalities when the private part is split in two (ni < n1 / 2)."""
    L = math.log2(c / delta)
    return (
        n1 - L - (rc11 + rc12 + rc21 + rp1 + rp2),
        n2 - 6 - (rc12 + rc21 + rp1 + rp2),
        n1 - ni - (rc21 + rp1 + rp2),
        ni - (rc21 + rp2),
    )


def receiver_streams(n1: int, n2: int, ni: int, rc11: int, rc12: int, rc21: int, rp11: int) -> list[Stream]:
    """Streams at receiver 1: one PAM for u11 (common and private bits), one for u12, and the aligned sum."""
    out = [Stream.of_rate(0, n1, rc11 + rp11), Stream.of_rate(1, n2, rc12), Stream.aligned(2, ni, rc21)]
    return [s for s in out if s.points > 1]


def distance_outage(
    n1: int, n2: int, ni: int, rates: tuple[int, int, int, int], samples: int, rng: np.random.Generator
) -> float:
    """Share of sampled fine-gain tuples where some receiver's minimum distance drops below 32."""
    streams = receiver_streams(n1, n2, ni, *rates)
    fails = 0
    for _ in range(samples):
        h = 1 + rng.random((2, 2, 2))
        h = np.where(h <= 1, 2.0, h)
        g = modulate_inputs(h)
        d1 = min_constellation_distance((g["g11_1"], g["g12_1"], g["g2_1"]), streams)
        d2 = min_constellation_distance((g["g21_2"], g["g22_2"], g["g1_2"]), streams)
        fails += min(d1, d2) < DISTANCE_THRESHOLD
    return fails / samples
