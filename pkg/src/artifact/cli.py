"""Command-line front end. Every command writes deterministic CSV."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .gaussian import (
    GaussConfig,
    InvariantBreach,
    SingularityError,
    achievable_sum_rate,
    distance_outage,
    gaussian_upper_bound,
    lemma_strong_conditions,
)
from .ldm import LdConfig, RegimeError, ld_achievable_sum_rate, ld_upper_bound
from .ltdm import (
    LtdAllocation,
    LtdConfig,
    allocate,
    check_decoding,
    corollary_bound,
    place_levels,
    upper_bounds,
)
from .oracle import DEFAULT_SEED, make_rng, outage_fraction

CONFIG_KEYS = {
    "model": str,
    "n1": int,
    "n2": int,
    "ni": int,
    "n11": int,
    "n12": int,
    "n21": int,
    "n22": int,
    "ni_2to1": int,
    "ni_1to2": int,
    "alpha": str,
    "beta": str,
    "power": float,
    "delta": float,
    "samples": int,
    "seed": int,
    "rates": str,
}

DEFAULTS = {"model": "ltd", "delta": 0.5, "samples": 1000, "seed": DEFAULT_SEED}


class InputError(click.ClickException):
    exit_code = 2


class Breach(click.ClickException):
    exit_code = 1


@dataclass(frozen=True)
class RunSpec:
    command: str
    model: str
    params: tuple[tuple[str, object], ...]
    delta: float
    samples: int
    seed: int
    out: str | None

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    def config_hash(self) -> str:
        body = json.dumps({"command": self.command, "model": self.model, "params": [list(p) for p in self.params],
                           "delta": self.delta, "samples": self.samples}, sort_keys=True, default=str)
        return hashlib.sha256(body.encode()).hexdigest()[:16]


def read_config(path: str) -> dict[str, object]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r} (allowed: {', '.join(sorted(CONFIG_KEYS))})")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def parse_grid(text: str | None, name: str) -> list[Fraction]:
    if text is None:
        return []
    try:
        grid = [Fraction(t.strip()) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--{name}: not a comma-separated list of numbers") from None
    if not grid:
        raise InputError(f"--{name}: empty grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError(f"--{name}: grid must be strictly increasing")
    return grid


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{float(v):.6f}"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.6f}"
    return str(v)


def emit(spec: RunSpec, columns: list[str], rows: list[tuple]) -> None:
    buf = io.StringIO()
    buf.write(
        f"# artifact {__version__} command={spec.command} seed={spec.seed} delta={fmt(spec.delta)} "
        f"model={spec.model} config={spec.config_hash()}\n"
    )
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in sorted(rows, key=_sort_key):
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if spec.out:
        Path(spec.out).write_text(text)
    else:
        click.echo(text, nl=False)


def _sort_key(row):
    return tuple((0, float(v), "") if isinstance(v, (int, float, Fraction, np.integer)) else (1, 0.0, str(v)) for v in row)


def common_options(f):
    opts = [
        click.option("--model", type=click.Choice(["ld", "ltd", "gauss"]), default=None),
        click.option("--n1", type=int), click.option("--n2", type=int), click.option("--ni", type=int),
        click.option("--n11", type=int), click.option("--n12", type=int), click.option("--n21", type=int),
        click.option("--n22", type=int), click.option("--ni-2to1", "ni_2to1", type=int),
        click.option("--ni-1to2", "ni_1to2", type=int),
        click.option("--alpha", help="value or strictly increasing comma-separated grid"),
        click.option("--beta", help="value or strictly increasing comma-separated grid"),
        click.option("--power", type=float, help="log2 of the transmit power P"),
        click.option("--delta", type=float), click.option("--samples", type=int), click.option("--seed", type=int),
        click.option("--rates", help="rc11,rc12,rc21,rp11 for Gaussian distance outage"),
        click.option("--out", type=click.Path(dir_okay=False)),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False)),
        click.option("--workers", type=int, default=1, show_default=True),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def build_spec(command: str, kwargs: dict) -> tuple[RunSpec, int]:
    workers = kwargs.pop("workers")
    cfg_path = kwargs.pop("config_path")
    out = kwargs.pop("out")
    merged = dict(DEFAULTS)
    if cfg_path:
        merged.update(read_config(cfg_path))
    merged.update({k: v for k, v in kwargs.items() if v is not None})
    delta = float(merged.pop("delta"))
    if not 0 < delta <= 1:
        raise InputError("--delta must lie in (0, 1]")
    samples = int(merged.pop("samples"))
    if samples < 1:
        raise InputError("--samples must be positive")
    if workers < 1:
        raise InputError("--workers must be positive")
    seed = int(merged.pop("seed"))
    model = str(merged.pop("model"))
    params = tuple(sorted((k, v) for k, v in merged.items()))
    return RunSpec(command, model, params, delta, samples, seed, out), workers


def ltd_config(spec: RunSpec) -> LtdConfig:
    asym = [spec.get(k) for k in ("n11", "n12", "n21", "n22", "ni_2to1", "ni_1to2")]
    try:
        if all(v is not None for v in asym):
            return LtdConfig(*asym)
        if any(v is not None for v in asym):
            raise InputError("asymmetric configs need all of n11, n12, n21, n22, ni_2to1, ni_1to2")
        n1, n2, ni = spec.get("n1"), spec.get("n2"), spec.get("ni")
        if n1 is None or ni is None:
            raise InputError("need --n1 and --ni (and optionally --n2), or the six asymmetric gains")
        return LtdConfig.symmetric(n1, n1 if n2 is None else n2, ni)
    except ValueError as e:
        if isinstance(e, InputError):
            raise
        raise InputError(str(e)) from None


def gauss_config(spec: RunSpec) -> GaussConfig:
    power, alpha, beta = spec.get("power"), spec.get("alpha"), spec.get("beta")
    if power is None or alpha is None or beta is None:
        raise InputError("gauss model needs --power, --alpha and --beta")
    try:
        return GaussConfig.symmetric(2.0 ** power, float(Fraction(alpha)), float(Fraction(beta)))
    except ValueError as e:
        raise InputError(str(e)) from None


def run_guarded(fn):
    try:
        return fn()
    except (RegimeError, SingularityError) as e:
        raise InputError(str(e)) from None
    except InvariantBreach as e:
        raise Breach(str(e)) from None


def pool_map(fn, items, workers: int):
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def ni_for(n1: int, alpha: Fraction) -> int:
    ni = alpha * n1
    if ni.denominator != 1:
        raise InputError(f"alpha={alpha} times n1={n1} is not an integer level count; pick another --n1")
    return int(ni)


@click.group()
@click.version_option(__version__, prog_name="artifact")
def main():
    """Rates, bounds and verification for the two-cell interfering multiple-access channel."""


@main.command()
@common_options
def gdof(**kw):
    """Normalized sum rate and bound over an alpha (and beta) grid."""
    spec, workers = build_spec("gdof", kw)
    alphas = parse_grid(spec.get("alpha", "0,1/2,3/5,2/3,3/4,1,3/2,2"), "alpha")
    betas = parse_grid(spec.get("beta", "1"), "beta")
    n1 = spec.get("n1") or 60
    if any(b <= 0 or b > 1 for b in betas):
        raise InputError("--beta values must lie in (0, 1]")

    def point(ab):
        a, b = ab
        n2 = b * n1
        if n2.denominator != 1:
            raise InputError(f"beta={b} times n1={n1} is not an integer")
        cfg = LtdConfig.symmetric(n1, int(n2), ni_for(n1, a))
        bounds = upper_bounds(cfg)
        ach = allocate(cfg).sum_rate
        cor = corollary_bound(n1, cfg.ni)
        return (a, b, Fraction(ach, n1), bounds.minimum / n1, cor / n1, bounds.active)

    rows = run_guarded(lambda: pool_map(point, [(a, b) for a in alphas for b in betas], workers))
    emit(spec, ["alpha", "beta", "achievable", "bound", "corollary", "active_bound"], rows)


@main.command()
@common_options
def rate(**kw):
    """Achievable sum rate for one configuration."""
    spec, _ = build_spec("rate", kw)

    def go():
        if spec.model == "gauss":
            r = achievable_sum_rate(gauss_config(spec))
            return [("gauss", r.raw, r.closed_form, r.outer_per_layer, r.outer_six_streams, "")]
        cfg = ltd_config(spec)
        if spec.model == "ld":
            return [("ld", ld_achievable_sum_rate(LdConfig(*_gains(cfg))), "", "", "", "")]
        raw, safe = allocate(cfg), allocate(cfg, spec.delta)
        return [("ltd", raw.sum_rate, "", safe.sum_rate, "", raw.label)]

    emit(spec, ["model", "achievable", "closed_form", "guaranteed", "outer_six_streams", "label"], run_guarded(go))


def _gains(cfg: LtdConfig):
    return cfg.n11, cfg.n12, cfg.n21, cfg.n22, cfg.ni_2to1, cfg.ni_1to2


@main.command()
@common_options
def bounds(**kw):
    """Upper bounds: every candidate, the minimum and which one is active."""
    spec, _ = build_spec("bounds", kw)

    def go():
        if spec.model == "gauss":
            return [("gauss", "min", gaussian_upper_bound(gauss_config(spec)))]
        cfg = ltd_config(spec)
        if spec.model == "ld":
            return [("ld", "min", ld_upper_bound(LdConfig(*_gains(cfg))))]
        b = upper_bounds(cfg)
        rows = [("ltd", f"D{i}", v) for i, v in enumerate(b.values, 1)]
        return rows + [("ltd", "min", b.minimum), ("ltd", "active", b.active)]

    emit(spec, ["model", "bound", "value"], run_guarded(go))


def overpack(alloc: LtdAllocation, cfg: LtdConfig, bits: int) -> LtdAllocation:
    """Add ``bits`` to the bottom private part of cell 1 (test injection)."""
    if bits <= 0:
        return alloc
    cell = alloc.cells[0]
    n1, _, _, outgoing = cfg.cell(1)
    rp1 = cell.rp1 + bits
    try:
        lv1, lv2 = place_levels(n1, outgoing, cell.rc1, cell.rc2, rp1, cell.rp2)
    except RegimeError:
        raise InputError(f"cannot over-pack by {bits} bits without overlapping levels") from None
    packed = replace(cell, rp1=rp1, levels1=lv1, levels2=lv2, label=cell.label + "+overpack")
    return replace(alloc, cells=(packed, alloc.cells[1]))


@main.command()
@common_options
@click.option("--overpack", "extra", type=int, default=0, help="inject extra private bits into cell 1")
def verify(extra, **kw):
    """Allocate, check the decoding conditions, then estimate outage against delta."""
    spec, _ = build_spec("verify", kw)
    if spec.model != "ltd":
        raise InputError("verify runs on the ltd model only")

    def go():
        cfg = ltd_config(spec)
        alloc = overpack(allocate(cfg, spec.delta), cfg, extra)
        report = check_decoding(alloc, cfg, spec.delta)
        rows = [("condition", c.receiver, c.index, c.lhs, c.rhs, c.margin, c.ok) for c in report.conditions]
        out = outage_fraction(cfg, alloc, spec.samples, spec.seed)
        rows.append(("outage", 0, 0, out, spec.delta, spec.delta - out, out <= spec.delta))
        rows.append(("sum_rate", 0, 0, alloc.sum_rate, "", "", True))
        return rows, report.passed and out <= spec.delta

    rows, ok = run_guarded(go)
    emit(spec, ["kind", "receiver", "index", "lhs", "rhs", "margin", "ok"], rows)
    if not ok:
        raise Breach("decoding check or outage estimate failed")


@main.command()
@common_options
def outage(**kw):
    """Monte Carlo outage over sampled fine gains."""
    spec, _ = build_spec("outage", kw)

    def go():
        if spec.model == "gauss":
            text = spec.get("rates")
            if text is None:
                raise InputError("gauss outage needs --rates rc11,rc12,rc21,rp11 and --n1/--n2/--ni")
            try:
                rates = tuple(int(t) for t in str(text).split(","))
            except ValueError:
                raise InputError("--rates must be four integers") from None
            if len(rates) != 4:
                raise InputError("--rates must be four integers")
            cfg = ltd_config(spec)
            n1, n2, ni = cfg.n1, cfg.n2, cfg.ni
            margins = lemma_strong_conditions(n1, n2, ni, *rates, delta=spec.delta)
            frac = distance_outage(n1, n2, ni, rates, spec.samples, make_rng(spec.seed))
            return [("distance", frac, min(margins))]
        cfg = ltd_config(spec)
        return [
            ("raw", outage_fraction(cfg, allocate(cfg), spec.samples, spec.seed), ""),
            ("guaranteed", outage_fraction(cfg, allocate(cfg, spec.delta), spec.samples, spec.seed), ""),
        ]

    emit(spec, ["allocation", "outage", "worst_lemma_margin"], run_guarded(go))


@main.command()
@common_options
def compare(**kw):
    """LD and LTD achievable rates against the bound, for one config or an alpha sweep."""
    spec, workers = build_spec("compare", kw)
    alphas = parse_grid(spec.get("alpha"), "alpha")

    def point(cfg: LtdConfig):
        ld = ld_achievable_sum_rate(LdConfig(*_gains(cfg)))
        ltd = allocate(cfg).sum_rate
        b = upper_bounds(cfg).minimum
        return (cfg.n11, cfg.n12, cfg.ni_2to1, ld, ltd, b, b - ld, b - ltd)

    def go():
        if alphas:
            n1, n2 = spec.get("n1"), spec.get("n2")
            if n1 is None:
                raise InputError("an alpha sweep needs --n1")
            cfgs = [LtdConfig.symmetric(n1, n1 if n2 is None else n2, ni_for(n1, a)) for a in alphas]
        else:
            cfgs = [ltd_config(spec)]
        return pool_map(point, cfgs, workers)

    emit(spec, ["n1", "n2", "ni", "ld_achievable", "ltd_achievable", "bound", "ld_gap", "ltd_gap"], run_guarded(go))


@main.command("gauss-rate")
@common_options
@click.option("--layers", is_flag=True, help="emit one row per layer instead of the summary")
def gauss_rate(layers, **kw):
    """Layered Gaussian sum rate, its closed form and the upper bound."""
    spec, _ = build_spec("gauss-rate", kw)
    spec = replace(spec, model="gauss")

    def go():
        cfg = gauss_config(spec)
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            r = achievable_sum_rate(cfg)
        if layers:
            return [(c, u, k, i, v) for c, u, k, i, v in r.per_signal]
        ub = gaussian_upper_bound(cfg)
        return [(r.raw, r.closed_form, r.outer_per_layer, r.outer_six_streams, ub, r.relaxed, r.odd_layers)]

    rows = run_guarded(go)
    if layers:
        emit(spec, ["cell", "user", "kind", "index", "rate"], rows)
    else:
        emit(spec, ["raw", "closed_form", "outer_per_layer", "outer_six_streams", "upper_bound", "relaxed", "odd_layers"], rows)


if __name__ == "__main__":
    sys.exit(main())
