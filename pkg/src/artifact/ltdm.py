"""Lower-triangular deterministic IMAC: regimes, bit allocations, decoding checks, bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable

from .ldm import LdConfig, RegimeError

F = Fraction

# regime intervals on alpha = ni / n1, closed ends marked True
REGIMES = (
    ("I", F(0), True, F(1, 2), True),
    ("II", F(1, 2), False, F(3, 5), False),
    ("III.A", F(3, 5), True, F(2, 3), True),
    ("III.B", F(2, 3), False, F(3, 4), True),
    ("III.C", F(3, 4), False, F(1), True),
    ("IV", F(1), False, F(3, 2), True),
    ("V", F(3, 2), False, None, False),
)
BREAKPOINTS = (F(1, 2), F(3, 5), F(2, 3), F(3, 4), F(1), F(3, 2))


def pos(x):
    return x if x > 0 else 0 * x


def floor(x) -> int:
    return math.floor(x)


class LtdConfig(LdConfig):
    """Coarse gains of the two cells; same layout as the deterministic LD config."""

    @property
    def is_symmetric(self) -> bool:
        return self.n11 == self.n21 and self.n12 == self.n22 and self.ni_1to2 == self.ni_2to1

    @property
    def n1(self) -> int:
        self._need_symmetric()
        return self.n11

    @property
    def n2(self) -> int:
        self._need_symmetric()
        return self.n12

    @property
    def ni(self) -> int:
        self._need_symmetric()
        return self.ni_1to2

    @property
    def alpha(self) -> Fraction:
        if self.n1 == 0:
            raise ValueError("alpha undefined for n1 = 0")
        return F(self.ni, self.n1)

    def _need_symmetric(self):
        if not self.is_symmetric:
            raise RegimeError("this quantity is defined for symmetric configurations only")

    def is_weak_ltd(self) -> bool:
        return self.ni_2to1 + self.ni_1to2 <= min(self.n11, self.n21)


def regime_of(alpha: Fraction) -> str:
    for name, lo, lo_closed, hi, hi_closed in REGIMES:
        above = alpha >= lo if lo_closed else alpha > lo
        below = True if hi is None else (alpha <= hi if hi_closed else alpha < hi)
        if above and below:
            return name
    raise ValueError(f"alpha {alpha} outside every regime")


def neighbours(alpha: Fraction) -> tuple[str, ...]:
    """Regimes whose schemes are evaluated at alpha (two at a breakpoint)."""
    own = regime_of(alpha)
    if alpha not in BREAKPOINTS:
        return (own,)
    names = [r[0] for r in REGIMES]
    i = names.index(own)
    other = names[i + 1] if own != "V" and REGIMES[i][3] == alpha else names[i - 1]
    return tuple(sorted({own, other}, key=names.index))


@dataclass(frozen=True)
class CellAllocation:
    rc1: int
    rc2: int
    rp1: int
    rp2: int = 0
    label: str = ""
    # level sets in each signal's own scale, level 1 = MSB
    levels1: tuple[int, ...] = ()
    levels2: tuple[int, ...] = ()

    @property
    def total(self) -> int:
        return self.rc1 + self.rc2 + self.rp1 + self.rp2

    @property
    def common_max(self) -> int:
        return max(self.rc1, self.rc2)

    def as_dict(self) -> dict[str, int]:
        return {"Rc1": self.rc1, "Rc2": self.rc2, "Rp1": self.rp1, "Rp2": self.rp2}


@dataclass(frozen=True)
class LtdAllocation:
    cells: tuple[CellAllocation, CellAllocation]
    case: str
    label: str
    guaranteed: bool = False

    @property
    def sum_rate(self) -> int:
        return self.cells[0].total + self.cells[1].total

    @property
    def weak(self) -> bool:
        return self.case == "I"


def place_levels(n1: int, outgoing: int, rc1: int, rc2: int, rp1: int, rp2: int):
    """Common parts at the top, Rp2 just below the outgoing reach, Rp1 at the bottom."""
    lv1 = list(range(1, rc1 + 1))
    lv1 += range(outgoing + 1, outgoing + rp2 + 1)
    lv1 += range(n1 - rp1 + 1, n1 + 1)
    if len(set(lv1)) != len(lv1):
        raise RegimeError("overlapping level segments in the stronger user's allocation")
    return tuple(sorted(lv1)), tuple(range(1, rc2 + 1))


def _cell(n1, n2, outgoing, rc1, rc2, rp1, rp2, label) -> CellAllocation:
    rc1, rc2, rp1, rp2 = (max(0, int(v)) for v in (rc1, rc2, rp1, rp2))
    lv1, lv2 = place_levels(n1, outgoing, rc1, rc2, rp1, rp2)
    return CellAllocation(rc1, rc2, rp1, rp2, label, lv1, lv2)


def weak_cell_label(n1: int, n2: int, outgoing: int) -> str:
    if n2 <= n1 - outgoing:
        return "I.1"
    if 2 * n2 <= 2 * n1 - outgoing:
        return "I.2"
    return "I.3"


def weak_cell_allocation(n1: int, n2: int, outgoing: int, incoming: int) -> CellAllocation:
    rc1 = outgoing // 2
    rc2 = min(-(-outgoing // 2), pos(n2 - (n1 - outgoing)))
    rp1 = incoming // 2
    rp2 = n1 - outgoing - incoming
    if rp2 < 0:
        raise RegimeError("interference spans exceed the stronger direct link")
    return _cell(n1, n2, outgoing, rc1, rc2, rp1, rp2, weak_cell_label(n1, n2, outgoing))


def weak_cell_rate(n1: int, n2: int, outgoing: int, incoming: int) -> int:
    return weak_cell_allocation(n1, n2, outgoing, incoming).total


def _symmetric_cell(case: str, n1: int, n2: int, ni: int) -> CellAllocation:
    t = ni // 3
    if case == "I":
        return weak_cell_allocation(n1, n2, ni, ni)
    if case == "II":
        h = (n1 - ni) // 2
        sub = "II.1" if n2 >= ni + h else "II.2"
        return _cell(n1, n2, ni, h, min(h, n2 - ni), ni - h, 0, sub)
    if case == "III.A":
        rc2 = min(t, floor(pos(n2 - ni) + F(5 * ni, 3) - n1), pos(n2 - (n1 - ni)))
        if 3 * n2 >= 3 * n1 - ni:
            sub = "III.A.1"
        elif n2 > ni:
            sub = "III.A.2"
        else:
            sub = "III.A.3"
        return _cell(n1, n2, ni, t, rc2, n1 - ni, 0, sub)
    if case == "III.B":
        # below n1 - ni the weak user is silent and the cell runs the IC scheme,
        # which is the B.4 allocation frozen at its lower edge
        eff = max(n2, n1 - ni)
        extra = min(
            floor(pos(F(2 * ni, 3) - eff)),
            floor(pos(n1 - F(4 * ni, 3)) + F(pos(2 * ni - eff - n1), 2)),
        )
        rc2 = min(t, floor(pos(n2 - ni) + pos(F(5 * ni, 3) - n1)), pos(n2 - (n1 - ni)))
        if 3 * n2 >= 3 * n1 - ni:
            sub = "III.B.1"
        elif n2 > ni:
            sub = "III.B.2"
        elif 3 * n2 >= 2 * ni:
            sub = "III.B.3"
        elif n2 > n1 - ni:
            sub = "III.B.4"
        else:
            sub = "III.B.IC"
        return _cell(n1, n2, ni, t + extra, rc2, n1 - ni, 0, sub)
    if case == "III.C":
        above = pos(n2 - (n1 - ni))
        rc1 = t + floor(pos(F(ni, 3) - above) / 2)
        if 3 * n2 >= 3 * n1 - 2 * ni:
            sub = "III.C.1"
        elif n2 > n1 - ni:
            sub = "III.C.2"
        else:
            sub = "III.C.IC"
        return _cell(n1, n2, ni, rc1, min(t, above), n1 - ni, 0, sub)
    if case == "IV":
        rc1 = t + floor(pos(F(ni, 3) - n2) / 2)
        sub = "IV.1" if n2 >= t else "IV.2"
        return _cell(n1, n2, ni, rc1, min(t, n2), 0, 0, sub)
    if case == "V":
        half = n1 // 2
        if n2 >= half:
            rc1, sub = half, "V.1"
        elif 2 * n1 < ni + n2:
            rc1, sub = n1 - n2, "V.1.2"
        else:
            rc1, sub = (ni - n2) // 2, "V.2"
        return _cell(n1, n2, ni, rc1, min(half, n2), 0, 0, sub)
    raise ValueError(f"unknown case {case}")


def classify_regime(cfg: LtdConfig) -> str:
    """Sub-case label; asymmetric weak configs get one label per cell."""
    if not cfg.is_symmetric:
        cfg_weak_or_raise(cfg)
        labels = [weak_cell_label(*_cell_dims(cfg, k)[:3]) for k in (1, 2)]
        return labels[0] if labels[0] == labels[1] else "/".join(labels)
    if cfg.n1 == 0:
        raise ValueError("n1 must be positive")
    return _symmetric_cell(regime_of(cfg.alpha), cfg.n1, cfg.n2, cfg.ni).label


def _cell_dims(cfg: LtdConfig, k: int) -> tuple[int, int, int, int]:
    n1, n2, incoming, outgoing = cfg.cell(k)
    return n1, n2, outgoing, incoming


def cfg_weak_or_raise(cfg: LtdConfig) -> None:
    if not cfg.is_weak_ltd():
        raise RegimeError(
            "asymmetric configurations are supported only in the weak regime "
            f"(interference {cfg.ni_2to1}+{cfg.ni_1to2} > min({cfg.n11}, {cfg.n21}))"
        )


def raw_allocation(cfg: LtdConfig, case: str | None = None) -> LtdAllocation:
    if not cfg.is_symmetric:
        cfg_weak_or_raise(cfg)
        cells = tuple(weak_cell_allocation(*_cell_dims(cfg, k)) for k in (1, 2))
        label = cells[0].label if cells[0].label == cells[1].label else f"{cells[0].label}/{cells[1].label}"
        return LtdAllocation(cells, "I", label)
    if cfg.n1 <= 0:
        raise ValueError("n1 must be positive")
    if case is None:
        options = [raw_allocation(cfg, c) for c in neighbours(cfg.alpha)]
        return max(options, key=lambda a: a.sum_rate)
    cell = _symmetric_cell(case, cfg.n1, cfg.n2, cfg.ni)
    return LtdAllocation((cell, cell), case, cell.label)


# decoding conditions


@dataclass(frozen=True)
class Condition:
    receiver: int
    index: int
    lhs: int
    rhs: float
    # own components appearing on the left-hand side
    terms: tuple[str, ...] = ()
    interference: bool = True

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + 1e-12


@dataclass(frozen=True)
class DecodingReport:
    conditions: tuple[Condition, ...]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.conditions)

    @property
    def worst_margin(self) -> float:
        return min((c.margin for c in self.conditions), default=math.inf)


def _slack(c: int, delta: float | None) -> float:
    # delta=None gives the bare inequalities without the outage-budget term
    return 0.0 if delta is None else math.log2(c / delta)


def check_decoding_weak(alloc: LtdAllocation, cfg: LtdConfig, delta: float | None) -> DecodingReport:
    slack = _slack(8, delta)
    out = []
    for k in (1, 2):
        own, other = alloc.cells[k - 1], alloc.cells[2 - k]
        n1, n2, incoming, outgoing = cfg.cell(k)
        m = other.common_max
        rows = [
            (own.rc1 + own.rp1 + own.rp2 + own.rc2 + m, n1 - slack, ("rp2", "rc1", "rc2", "rp1")),
            (own.rp1 + own.rp2 + own.rc2 + m, n2, ("rp2", "rc2", "rp1")),
            (own.rp1 + own.rp2 + m, n1 - outgoing, ("rp2", "rp1")),
            (own.rp1 + m, incoming, ("rp1",)),
        ]
        for i, (lhs, rhs, terms) in enumerate(rows, 1):
            if i == 2 and own.rc2 == 0:
                # the weaker user is silent; its ordering constraint is vacuous
                continue
            out.append(Condition(k, i, lhs, rhs, terms))
    return DecodingReport(tuple(out))


def check_decoding_general(alloc: LtdAllocation, cfg: LtdConfig, delta: float | None) -> DecodingReport:
    """Chain conditions over the active streams sorted by received strength.

    With strengths n1 >= n2 >= ni this is the three-inequality form; weaker
    own users and interference stronger than the direct links are handled by
    re-sorting, which is the index swap the scheme text asks for.
    """
    slack = _slack(32, delta)
    out = []
    for k in (1, 2):
        own, other = alloc.cells[k - 1], alloc.cells[2 - k]
        n1, n2, incoming, _ = cfg.cell(k)
        streams = [(n1, 0, own.rc1, "rc1"), (n2, 1, own.rc2, "rc2"), (incoming, 2, other.common_max, None)]
        streams = sorted((s for s in streams if s[2] > 0), key=lambda s: (-s[0], s[1]))
        for i in range(len(streams)):
            tail = streams[i:]
            lhs = sum(s[2] for s in tail) + own.rp1
            last = i == len(streams) - 1
            rhs = tail[0][0] - (0 if last else slack)
            terms = tuple(s[3] for s in tail if s[3]) + ("rp1",)
            out.append(Condition(k, i + 1, lhs, rhs, terms, any(s[3] is None for s in tail)))
        if not streams and own.rp1:
            out.append(Condition(k, 1, own.rp1, n1 - slack, ("rp1",), False))
    return DecodingReport(tuple(out))


def check_decoding(alloc: LtdAllocation, cfg: LtdConfig, delta: float | None) -> DecodingReport:
    if alloc.weak:
        return check_decoding_weak(alloc, cfg, delta)
    return check_decoding_general(alloc, cfg, delta)


_PRIORITY = ("rp2", "rc1", "rc2", "rp1")


def _relevel(cell: CellAllocation, n1: int, outgoing: int) -> CellAllocation:
    lv1, lv2 = place_levels(n1, outgoing, cell.rc1, cell.rc2, cell.rp1, cell.rp2)
    return replace(cell, levels1=lv1, levels2=lv2)


def backoff(alloc: LtdAllocation, cfg: LtdConfig, delta: float) -> LtdAllocation:
    """Strip single bits until every decoding condition holds.

    For each violated condition the first positive own component in the order
    Rp2, Rc1, Rc2, Rp1 loses one bit; if none is left, the other cell's larger
    common part shrinks instead.
    """
    cells = [dict(vars(c)) for c in alloc.cells]
    keys = ("rc1", "rc2", "rp1", "rp2")

    def build():
        made = []
        for k in (1, 2):
            c = CellAllocation(**{x: cells[k - 1][x] for x in keys}, label=cells[k - 1]["label"])
            n1, _, _, outgoing = cfg.cell(k)
            made.append(_relevel(c, n1, outgoing))
        return LtdAllocation(tuple(made), alloc.case, alloc.label, guaranteed=True)

    current = build()
    while True:
        report = check_decoding(current, cfg, delta)
        bad = [c for c in report.conditions if not c.ok]
        if not bad or current.sum_rate == 0:
            return current
        cond = bad[0]
        own = cells[cond.receiver - 1]
        other = cells[2 - cond.receiver]
        for name in _PRIORITY:
            if name in cond.terms and own[name] > 0:
                own[name] -= 1
                break
        else:
            big = "rc1" if other["rc1"] >= other["rc2"] else "rc2"
            if other[big] > 0:
                other[big] -= 1
            else:
                # nothing left to strip on this condition
                own_any = next((n for n in _PRIORITY if own[n] > 0), None)
                if own_any is None:
                    return current
                own[own_any] -= 1
        current = build()


def allocate(cfg: LtdConfig, delta: float | None = None) -> LtdAllocation:
    """Raw scheme allocation, or the backed-off one that passes the decoding lemma when delta is given."""
    raw = raw_allocation(cfg)
    if delta is None:
        return raw
    return backoff(raw, cfg, delta)


# bounds


@dataclass(frozen=True)
class BoundSet:
    values: tuple[Fraction, ...]

    @property
    def minimum(self) -> Fraction:
        return min(self.values)

    @property
    def active(self) -> int:
        return self.values.index(self.minimum) + 1


def upper_bounds(cfg: LtdConfig) -> BoundSet:
    if not cfg.is_symmetric:
        return weak_upper_bounds(cfg)
    n1, n2, ni = cfg.n1, cfg.n2, cfg.ni
    p = pos(n1 - ni)
    return BoundSet((
        F(2 * max(p, ni) + min(p, ni)),
        F(2, 3) * (2 * max(n1, ni) + p),
        F(2 * n1),
        F(max(2 * n2, 2 * p, 2 * ni)),
        F(max(n1, ni) + max(n2, p)),
    ))


def weak_upper_bounds(cfg: LtdConfig) -> BoundSet:
    cfg_weak_or_raise(cfg)
    a1 = max(cfg.n11 - cfg.ni_1to2, cfg.n12)
    a2 = max(cfg.n21 - cfg.ni_2to1, cfg.n22)
    h1 = cfg.n11 - F(cfg.ni_1to2, 2)
    h2 = cfg.n21 - F(cfg.ni_2to1, 2)
    return BoundSet((F(a1 + a2), a1 + h2, h1 + a2, h1 + h2))


def corollary_branches(n1, ni) -> list[tuple[Fraction, Fraction, Fraction]]:
    """(alpha_lo, alpha_hi, value) for the branches whose closed interval contains alpha."""
    n1, ni = F(n1), F(ni)
    table = [
        (F(0), F(1, 2), 2 * (n1 - ni / 2)),
        (F(1, 2), F(3, 5), n1 + ni),
        (F(3, 5), F(1), 2 * (n1 - ni / 3)),
        (F(1), F(3, 2), F(4, 3) * ni),
        (F(3, 2), None, 2 * n1),
    ]
    a = ni / n1
    return [(lo, hi, v) for lo, hi, v in table if a >= lo and (hi is None or a <= hi)]


def corollary_bound(n1, ni) -> Fraction:
    if n1 <= 0:
        raise ValueError("n1 must be positive")
    values = {v for _, _, v in corollary_branches(n1, ni)}
    if len(values) != 1:
        raise ArithmeticError(f"corollary branches disagree at ni/n1={F(ni, 1) / n1}: {values}")
    return values.pop()


def decoding_slack(alloc: LtdAllocation, delta: float) -> float:
    c = 8 if alloc.weak else 32
    return 2 * math.log2(c / delta)


@dataclass(frozen=True)
class GapReport:
    label: str
    achievable: int
    guaranteed: int
    bound: Fraction
    gap: Fraction
    guarantee: float
    within: bool


def gap_report(cfg: LtdConfig, delta: float) -> GapReport:
    raw = allocate(cfg)
    safe = allocate(cfg, delta)
    bound = upper_bounds(cfg).minimum
    gap = bound - raw.sum_rate
    guarantee = 2 * math.log2(128 / delta)
    return GapReport(raw.label, raw.sum_rate, safe.sum_rate, bound, gap, guarantee, gap <= guarantee)


def lemma_sums(alloc: LtdAllocation, cfg: LtdConfig) -> list[tuple[int, int, int, int]]:
    """(receiver, condition, left-hand side, right-hand side) with the outage term dropped."""
    return [(c.receiver, c.index, c.lhs, int(c.rhs)) for c in check_decoding(alloc, cfg, None).conditions]


def verify_scheme_conditions(case: str, configs: Iterable[LtdConfig]) -> list[tuple[LtdConfig, int, int, int]]:
    """Configs in ``case`` whose raw allocation breaks a delta-free lemma inequality.

    Returns (cfg, condition, lhs, rhs) for each breach; an empty list means
    every inequality holds as the scheme design intends.
    """
    bad = []
    for cfg in configs:
        alloc = raw_allocation(cfg, case)
        for _, idx, lhs, rhs in lemma_sums(alloc, cfg):
            if lhs > rhs:
                bad.append((cfg, idx, lhs, rhs))
    return bad
