"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python -m tests.test_acceptance`` for the bare report.
"""

import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest
from click.testing import CliRunner

from artifact.cli import main
from artifact.gaussian import (
    GaussConfig,
    achievable_sum_rate,
    distance_outage,
    example_layer_rates,
    lemma_strong_conditions,
    power_partition,
)
from artifact.ldm import ld_assignment_vector, phi
from artifact.ltdm import LtdConfig, allocate, check_decoding, classify_regime, corollary_bound, corollary_branches, upper_bounds
from artifact.oracle import ChannelGains, decodable_at_both, exhaustive_best_rate, outage_fraction

from .oracles import block_fill_phi, exhaustive_min_overlap

RESULTS: list[str] = []
SEED = 20240611


def record(n: int, ok: bool, detail: str, started: float):
    RESULTS.append(f"criterion {n:2d} {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.1f}s) {detail}")
    assert ok, detail


def test_criterion_01_worked_example():
    t = time.perf_counter()
    res = CliRunner().invoke(main, ["compare", "--n1", "22", "--n2", "20", "--ni", "10"])
    row = dict(zip(res.output.splitlines()[1].split(","), res.output.splitlines()[2].split(",")))
    got = (row["ld_achievable"], row["ltd_achievable"], row["bound"])
    record(1, res.exit_code == 0 and got == ("32", "34", "34") and time.perf_counter() - t < 1, f"ld/ltd/bound = {got}", t)


def test_criterion_02_phi_against_block_filling():
    t = time.perf_counter()
    bad = [(p, q) for p in range(41) for q in range(p + 1) if phi(p, q) != block_fill_phi(p, q)]
    record(2, not bad, f"{861 - len(bad)}/861 pairs agree", t)


def test_criterion_03_assignment_optimality():
    t = time.perf_counter()
    bad, n = [], 0
    for size in range(0, 15):
        for d in range(0, size + 1):
            best = exhaustive_min_overlap(size, d)
            for x in range(size + 1):
                n += 1
                if ld_assignment_vector(size, d, x).rho != best[x]:
                    bad.append((size, d, x))
    record(3, not bad, f"{n - len(bad)}/{n} (n, offset, ones) cases optimal", t)


def test_criterion_04_corollary_values():
    t = time.perf_counter()
    alphas = (F(0), F(1, 2), F(3, 5), F(2, 3), F(3, 4), F(1), F(3, 2), F(2))
    got = [corollary_bound(60, a * 60) for a in alphas]
    # 2(n1 - ni/3) covers both 2/3 and 3/4
    want = [120, 90, 96, 2 * (60 - F(40, 3)), 2 * (60 - F(45, 3)), 80, 120, 120]
    joins = all(
        len({b[2] for b in corollary_branches(60, a * 60)}) == 1 for a in (F(1, 2), F(3, 5), F(1), F(3, 2))
    )
    record(4, got == want and joins, f"values {[str(v) for v in got]}, breakpoints agree: {joins}", t)


def test_criterion_05_sandwich():
    t = time.perf_counter()
    slack = 2 * math.log2(128 / 0.5) + 4
    bad, n = [], 0
    for n1 in range(1, 61):
        for n2 in range(0, n1 + 1):
            for ni in range(0, 2 * n1 + 1):
                cfg = LtdConfig.symmetric(n1, n2, ni)
                rate, low = allocate(cfg).sum_rate, upper_bounds(cfg).minimum
                n += 1
                if not low - slack <= rate <= low:
                    bad.append((n1, n2, ni))
    record(5, not bad, f"{len(bad)} violations over {n} configs", t)


def test_criterion_06_outage_measure():
    t = time.perf_counter()
    pool = [
        LtdConfig.symmetric(n1, n2, ni)
        for n1 in range(16, 25)
        for n2 in range(0, n1 + 1)
        for ni in range(0, 2 * n1 + 1)
    ]
    pool = [c for c in pool if classify_regime(c) in ("I.3", "II.1", "III.A.1")]
    cfgs = random.Random(SEED).sample(pool, 100)
    worst, failed = 0.0, 0
    for cfg in cfgs:
        alloc = allocate(cfg, 0.5)
        if not check_decoding(alloc, cfg, 0.5).passed:
            failed += 1
            continue
        worst = max(worst, outage_fraction(cfg, alloc, 10_000, seed=SEED))
    record(6, failed == 0 and worst <= 0.55, f"worst outage {worst:.4f} over {len(cfgs)} configs", t)


def test_criterion_07_tiny_oracle():
    t = time.perf_counter()
    bad, n = [], 0
    for n1 in range(1, 7):
        for n2 in range(0, n1 + 1):
            for ni in range(0, 2 * n1 + 1):
                cfg = LtdConfig.symmetric(n1, n2, ni)
                gains = ChannelGains.ld_limit(max(n1, ni))
                alloc = allocate(cfg, 0.5)
                best = exhaustive_best_rate(cfg, gains).best
                n += 1
                if not (decodable_at_both(cfg, gains, alloc) and best >= alloc.sum_rate):
                    bad.append((n1, n2, ni))
    record(7, not bad, f"{len(bad)} violations over {n} configs (delta = 1/2 allocation)", t)


def test_criterion_08_gaussian_example():
    t = time.perf_counter()
    P = 2.0**40
    with pytest.warns(UserWarning):
        r = achievable_sum_rate(GaussConfig.symmetric(P, 0.5, 0.75))
    r1, r2, r3, r4 = example_layer_rates(P)
    q = math.log2(P**0.25)
    ok = r.raw > 52 - 1e-9 and all(v > q - 1 - 1e-9 for v in (r1, r2, r4)) and r3 > q - 2 - 1e-9
    record(8, ok, f"raw {r.raw:.4f}, layers {r1:.4f} {r2:.4f} {r3:.4f} {r4:.4f}", t)


def test_criterion_09_power_and_telescoping():
    t = time.perf_counter()
    rnd = random.Random(SEED)
    bad, n = 0, 0
    while n < 1000:
        P = 2.0 ** rnd.uniform(8, 60)
        s11, s21 = P * rnd.uniform(1, 4) / 4, P * rnd.uniform(1, 4) / 4
        s12, s22 = s11 ** rnd.uniform(0.05, 0.98), s21 ** rnd.uniform(0.05, 0.98)
        i1, i2 = 2 ** rnd.uniform(0, math.log2(s12) / 2), 2 ** rnd.uniform(0, math.log2(s22) / 2)
        if min(s12, s22) <= 1:
            continue
        cfg = GaussConfig(P, s11, s12, s21, s22, i1, i2)
        if not cfg.is_weak():
            continue
        n += 1
        for cell in (1, 2):
            part = power_partition(cfg, cell)
            total = sum(part.theta)
            target = cfg.snr(cell, 1) - 1
            exact = part.span_power() == F(cfg.snr(cell, 1)) - 1
            powers = all(part.user_power(cfg, u) <= F(P) for u in (1, 2))
            if not (powers and exact and math.isclose(total, target, rel_tol=1e-12)):
                bad += 1
    record(9, bad == 0, f"{bad} failing cells over {n} configs", t)


def test_criterion_10_min_distance():
    t = time.perf_counter()
    n1, n2, ni = 28, 26, 18
    ok_rates, bad_rates = (4, 4, 4, 1), (6, 5, 5, 1)
    m_ok = lemma_strong_conditions(n1, n2, ni, *ok_rates, delta=0.5)
    m_bad = lemma_strong_conditions(n1, n2, ni, *bad_rates, delta=0.5)
    assert min(m_ok) >= 0 and -4 < m_bad[0] <= -3
    low = distance_outage(n1, n2, ni, ok_rates, 1000, np.random.default_rng(SEED))
    high = distance_outage(n1, n2, ni, bad_rates, 1000, np.random.default_rng(SEED + 1))
    record(
        10,
        low <= 0.6 and high >= 0.9,
        f"passing rates {ok_rates}: {low:.3f} (<= 0.6); violating by {-m_bad[0]:.2f} bits {bad_rates}: {high:.3f} (>= 0.9)",
        t,
    )


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    print("\n".join(RESULTS))
