import subprocess
import sys

import numpy as np
import pytest

from nnsft.cli import main, parse_ratio
from nnsft.lattice import parse_window
from nnsft.sft import NnSft, bad_sites, hard_square, parse_sft, render_sft, violations


def run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "nnsft.cli", *args],
        capture_output=True,
        text=True,
        timeout=300,
    )


def test_parse_ratio():
    assert parse_ratio("1/64") == 1.0 / 64.0
    assert parse_ratio("0.25") == 0.25
    with pytest.raises(ValueError):
        parse_ratio("a/b")


def test_check_hardsquare():
    res = run_cli("check", "--spec", "hardsquare")
    assert res.returncode == 0
    assert "ssf: true" in res.stdout
    assert "safe_symbols: [0]" in res.stdout
    assert "local_implies_global: true" in res.stdout


def test_check_checkerboard4():
    res = run_cli("check", "--spec", "checkerboard:4")
    assert res.returncode == 1
    assert "ssf: false" in res.stdout
    assert "witness: north=0 south=1 east=2 west=3" in res.stdout
    assert "safe_symbols: []" in res.stdout
    assert "local_implies_global: unknown" in res.stdout


def test_check_spec_file(tmp_path):
    path = tmp_path / "hs.sft"
    path.write_text("alphabet 2\nhforbid 1 1\nvforbid 1 1\n")
    res = run_cli("check", "--spec", str(path))
    assert res.returncode == 0 and "ssf: true" in res.stdout


def test_input_errors_exit_2(tmp_path):
    assert run_cli("check", "--spec", "no-such-thing").returncode == 2
    bad = tmp_path / "bad.sft"
    bad.write_text("alphabet 2\nzap 1 1\n")
    res = run_cli("check", "--spec", str(bad))
    assert res.returncode == 2
    assert "line 2" in res.stderr
    assert run_cli("check", "--nonsense").returncode == 2
    assert run_cli("frobnicate").returncode == 2


def test_sample_and_repair_round_trip(tmp_path):
    raw = tmp_path / "w.txt"
    res = run_cli(
        "sample", "--spec", "hardsquare", "--size", "9", "--seed", "5",
        "--corrupt", "0.4", "--out", str(raw),
    )
    assert res.returncode == 0
    w = parse_window(raw.read_text())
    assert w.rect.centered_radius() == 9
    assert bad_sites(w, hard_square()).count > 0

    res = run_cli("repair", "--spec", "hardsquare", "--window", str(raw))
    assert res.returncode == 0
    repaired = parse_window(res.stdout)
    # default repair radius is the largest supported: N = 8
    inside = {s for s in bad_sites(repaired, hard_square()).sites
              if max(abs(s[0]), abs(s[1])) <= 8}
    assert inside == set()


def test_sample_stdout_admissible():
    res = run_cli("sample", "--spec", "checkerboard:5", "--size", "6", "--seed", "1")
    assert res.returncode == 0
    w = parse_window(res.stdout)
    from nnsft.sft import checkerboard

    assert violations(w, checkerboard(5)) == []


def test_repair_out_file_summary(tmp_path):
    raw = tmp_path / "w.txt"
    run_cli("sample", "--spec", "hardsquare", "--size", "7", "--seed", "3",
            "--corrupt", "0.5", "--out", str(raw))
    out = tmp_path / "fixed.txt"
    res = run_cli(
        "repair", "--spec", "hardsquare", "--window", str(raw),
        "--size", "5", "--out", str(out),
    )
    assert res.returncode == 0
    assert res.stdout.startswith("repaired N=5 bad_total=")
    parse_window(out.read_text())


def test_verify_csv_shape(tmp_path):
    csv_path = tmp_path / "t.csv"
    res = run_cli(
        "verify", "--spec", "hardsquare", "--size", "10", "--trials", "4",
        "--seed", "7", "--csv", str(csv_path),
    )
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert lines[0] == (
        "trial,seed,N,q,bad_total,bad_fraction,certified_gap,"
        "min_shell_margin,total_gap,total_bound,case1_status,all_pass"
    )
    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    assert len(rows) == 5  # header + 4 trials
    assert lines[-1].startswith("# summary:")
    assert csv_path.read_text() == res.stdout


def test_verify_rational_epsilon_and_hypothesis_guard():
    res = run_cli(
        "verify", "--spec", "hardsquare", "--size", "8", "--trials", "1",
        "--epsilon", "1/64", "--cap", "1/384",
    )
    assert res.returncode == 0
    res = run_cli(
        "verify", "--spec", "hardsquare", "--size", "8", "--trials", "1",
        "--cap", "1/64",
    )
    assert res.returncode == 2
    assert "hypothesis" in res.stderr


def test_entropy_output():
    res = run_cli("entropy", "--spec", "full:2", "--strip-width", "4")
    assert res.returncode == 0
    line = res.stdout.splitlines()[0]
    parts = line.split()
    assert parts[0] == "entropy_per_site"
    assert float(parts[1]) == pytest.approx(np.log(2), abs=1e-9)
    assert parts[2:] == ["strip_width", "4", "states", "16"]
    assert res.stdout.splitlines()[1] == "logarithm natural"


def test_cli_determinism():
    invocations = [
        ("check", "--spec", "checkerboard:5"),
        ("sample", "--spec", "hardsquare", "--size", "8", "--seed", "11", "--corrupt", "0.2"),
        ("entropy", "--spec", "hardsquare", "--strip-width", "8"),
        ("verify", "--spec", "hardsquare", "--size", "10", "--trials", "3", "--seed", "2"),
    ]
    for args in invocations:
        a, b = run_cli(*args), run_cli(*args)
        assert a.stdout == b.stdout and a.returncode == b.returncode


def test_verify_jobs_output_identical():
    base = ("verify", "--spec", "checkerboard:5", "--size", "10", "--trials", "4", "--seed", "3")
    serial = run_cli(*base, "--jobs", "1")
    par_a = run_cli(*base, "--jobs", "3")
    par_b = run_cli(*base, "--jobs", "3")
    assert serial.stdout == par_a.stdout == par_b.stdout
    assert serial.returncode == par_a.returncode == 0


def test_main_in_process_exit_codes(capsys):
    assert main(["check", "--spec", "hardsquare"]) == 0
    assert main(["check", "--spec", "checkerboard:2"]) == 1
    assert main(["check", "--spec", "bogus"]) == 2
    capsys.readouterr()


def test_spec_render_parse_round_trip_random():
    rng = np.random.default_rng(23)
    for _ in range(100):
        q = int(rng.integers(1, 6))
        hf = frozenset(
            (int(rng.integers(q)), int(rng.integers(q)))
            for _ in range(int(rng.integers(0, q * q + 1)))
        )
        vf = frozenset(
            (int(rng.integers(q)), int(rng.integers(q)))
            for _ in range(int(rng.integers(0, q * q + 1)))
        )
        sft = NnSft(q, hf, vf)
        assert parse_sft(render_sft(sft)) == sft
