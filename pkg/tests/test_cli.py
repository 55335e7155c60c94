import csv
import io
from fractions import Fraction

import pytest
from click.testing import CliRunner

from artifact.cli import main


def run(*args, code=0):
    res = CliRunner().invoke(main, [str(a) for a in args])
    assert res.exit_code == code, res.output
    return res.output


def table(text):
    lines = text.splitlines()
    assert lines[0].startswith("# artifact ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def header(text) -> dict[str, str]:
    return dict(part.split("=", 1) for part in text.splitlines()[0].split()[3:])


def test_delta_two_instance_rates():
    (row,) = table(run("compare", "--n1", 22, "--n2", 20, "--ni", 10))
    assert (row["ld_achievable"], row["ltd_achievable"], row["bound"]) == ("32", "34", "34")


def test_interference_free_models_agree():
    (row,) = table(run("compare", "--n1", 30, "--n2", 24, "--ni", 0))
    assert row["ld_achievable"] == row["ltd_achievable"] == row["bound"] == "60"


def test_gdof_full_gain_grid():
    rows = table(run("gdof", "--alpha", "0,.5,.6,1,1.5,2", "--n1", 60))
    got = [Fraction(r["achievable"]).limit_denominator(1000) for r in rows]
    assert got == [2, Fraction(3, 2), Fraction(8, 5), Fraction(4, 3), 2, 2]
    assert all(r["achievable"] == r["bound"] == r["corollary"] for r in rows)


def test_gdof_no_interference_is_two():
    (row,) = table(run("gdof", "--alpha", "0"))
    assert row["achievable"] == "2"


def test_gdof_weak_user_caps_the_gain():
    rows = table(run("gdof", "--beta", "0.8", "--alpha", "0.25,0.5,0.75,1", "--n1", 60))
    assert all(float(r["bound"]) <= 1.6 + 1e-9 for r in rows)
    # the full-gain curve would promise more at alpha = 1/4
    assert float(rows[0]["corollary"]) > 1.6 and float(rows[0]["bound"]) == 1.6


def test_alpha_sweep_ld_never_above_ltd():
    grid = ",".join(f"{k}/60" for k in range(25))
    rows = table(run("compare", "--n1", 60, "--n2", 50, "--alpha", grid))
    ld = [int(r["ld_achievable"]) for r in rows]
    ltd = [int(r["ltd_achievable"]) for r in rows]
    assert all(a <= b for a, b in zip(ld, ltd))
    assert any(a < b for a, b in zip(ld, ltd))
    # even layer counts: both schemes touch the bound
    for r in rows:
        ni = int(r["ni"])
        if ni and (ni // 10) % 2 == 0 and ni % 10 == 0:
            assert r["ld_achievable"] == r["ltd_achievable"] == r["bound"]


def test_reruns_are_byte_identical(tmp_path):
    args = ("outage", "--n1", 16, "--n2", 14, "--ni", 6, "--samples", 500, "--seed", 7)
    assert run(*args) == run(*args)
    out = tmp_path / "o.csv"
    run(*args, "--out", out)
    assert out.read_text() == run(*args)


def test_header_records_seed_and_delta():
    h = header(run("outage", "--n1", 12, "--ni", 4, "--samples", 50, "--seed", 99, "--delta", 0.25))
    assert h["command"] == "outage" and h["seed"] == "99" and h["delta"] == "0.250000"
    assert h["model"] == "ltd" and len(h["config"]) == 16


def test_rows_are_sorted():
    rows = table(run("gdof", "--alpha", "0,1/2,1,2", "--beta", "1/2,1", "--n1", 60))
    keys = [(Fraction(r["alpha"]), Fraction(r["beta"])) for r in rows]
    assert keys == sorted(keys)


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# three-level instance\nn1 = 22\nn2 = 20\nni = 10\n")
    assert table(run("compare", "--config", cfg)) == table(run("compare", "--n1", 22, "--n2", 20, "--ni", 10))


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n1 = 10\nwidth = 3\n")
    out = run("rate", "--config", cfg, code=2)
    assert "width" in out


@pytest.mark.parametrize("grid", ["1,1/2", "", "0,0", "a,b"])
def test_bad_grid(grid):
    run("gdof", "--alpha", grid, code=2)


def test_gauss_singularity_is_input_error():
    run("gauss-rate", "--power", 40, "--alpha", 0.3, "--beta", 1, code=2)


def test_strong_ld_request_is_input_error():
    run("rate", "--model", "ld", "--n1", 20, "--n2", 10, "--ni", 6, code=2)


def test_verify_passes_on_weak_instance():
    rows = table(run("verify", "--n1", 24, "--n2", 22, "--ni", 8, "--samples", 2000))
    assert all(r["ok"] == "1" for r in rows)
    (o,) = [r for r in rows if r["kind"] == "outage"]
    assert float(o["lhs"]) <= 0.5


def test_verify_fails_when_overpacked():
    out = run("verify", "--n1", 24, "--n2", 22, "--ni", 8, "--samples", 500, "--overpack", 4, code=1)
    rows = table(out.split("Error")[0])
    first = [r for r in rows if r["kind"] == "condition" and r["receiver"] == "1" and r["index"] == "1"]
    assert first and float(first[0]["margin"]) < 0


def test_verify_without_interference():
    rows = table(run("verify", "--n1", 24, "--n2", 22, "--ni", 0, "--samples", 200))
    assert all(r["ok"] == "1" for r in rows)


def test_gauss_rate_summary_and_layers():
    (row,) = table(run("gauss-rate", "--power", 40, "--alpha", 0.5, "--beta", 0.75))
    assert float(row["raw"]) >= 52 and row["closed_form"] == "44.000000"
    assert row["relaxed"] == "1" and float(row["upper_bound"]) == pytest.approx(71.1)
    layers = table(run("gauss-rate", "--power", 40, "--alpha", 0.5, "--beta", 0.75, "--layers"))
    assert sum(float(r["rate"]) for r in layers) == pytest.approx(float(row["raw"]), abs=1e-5)


def test_gauss_outage_needs_rates():
    run("outage", "--model", "gauss", "--n1", 28, "--n2", 26, "--ni", 18, code=2)


def test_workers_do_not_change_output():
    args = ("gdof", "--alpha", "0,1/2,3/5,2/3,3/4,1", "--beta", "1/2,3/4,1", "--n1", 60)
    assert run(*args, "--workers", 4) == run(*args)
