"""Command-line interface: subcommands, exit codes, piping, config files,
and report determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from sphereq import read_field
from sphereq.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_eigen_table(capsys):
    code, out, _ = run_cli(["eigen", "--lmax", "3"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split() == ["l", "eigenvalue", "multiplicity"]
    assert lines[1:] == ["0 0 1", "1 -2 3", "2 -6 5", "3 -12 7"]


def test_bifurcate_integer_thresholds(capsys, tmp_path):
    csv = tmp_path / "bifs.csv"
    code, out, _ = run_cli(
        [
            "bifurcate",
            "--lambda-min", "0.5",
            "--lambda-max", "13",
            "--lmax", "3",
            "--csv", str(csv),
        ],
        capsys,
    )
    assert code == 0
    rows = [l.split() for l in out.strip().splitlines()[1:]]
    assert [(float(a), int(b)) for a, b in rows] == [(2.0, 1), (6.0, 2), (12.0, 3)]
    assert csv.read_text().startswith("lambda_star,l")


def test_gen_audit_harmonic_passes(capsys, tmp_path):
    field = tmp_path / "y22.sphf"
    code, _, _ = run_cli(
        ["gen", "harmonic", "--l", "2", "--m", "2", "--ntheta", "32",
         "--nphi", "64", "--out", str(field)],
        capsys,
    )
    assert code == 0
    report = tmp_path / "report.json"
    code, _, err = run_cli(
        ["audit", str(field), "--strict", "--json", str(report)], capsys
    )
    assert code == 0
    assert "verdict pass" in err
    assert json.loads(report.read_text())["verdict"] == "pass"


def test_gen_audit_biradial_strict_fails(capsys, tmp_path):
    field = tmp_path / "biradial.sphf"
    run_cli(
        ["gen", "figure1", "--ntheta", "48", "--nphi", "128", "--out", str(field)],
        capsys,
    )
    report = tmp_path / "report.json"
    code, _, err = run_cli(
        ["audit", str(field), "--strict", "--json", str(report)], capsys
    )
    assert code == 1
    assert "not-theorem-compatible" in err
    payload = json.loads(report.read_text())
    assert payload["midpoint"]["passed"] is False
    assert payload["extrema"]["count"] == 12


def test_pipe_gen_into_audit_strict():
    """The documented pipeline `gen figure1 | audit --strict` exits 1."""
    pipeline = (
        "%(py)s -m sphereq.cli gen figure1 --ntheta 48 --nphi 128 | "
        "%(py)s -m sphereq.cli audit --strict -" % {"py": sys.executable}
    )
    proc = subprocess.run(
        pipeline, shell=True, capture_output=True, text=True, timeout=300
    )
    assert proc.returncode == 1
    assert "verdict" in proc.stderr


def test_arc_sweep_csv_rows(capsys, tmp_path):
    field = tmp_path / "y22.sphf"
    run_cli(
        ["gen", "harmonic", "--l", "2", "--m", "2", "--ntheta", "32",
         "--nphi", "64", "--out", str(field)],
        capsys,
    )
    out_csv = tmp_path / "sweep.csv"
    code, _, err = run_cli(
        ["arc-sweep", str(field), "--neps", "50", "--out", str(out_csv)], capsys
    )
    assert code == 0
    lines = out_csv.read_text().strip().splitlines()
    assert len(lines) == 51 and lines[0] == "eps,w_max"
    assert "eps_star" in err


def test_solve_constant_seed(capsys, tmp_path):
    out = tmp_path / "flat.sphf"
    code, stdout, _ = run_cli(
        ["solve", "--lam", "3", "--seed", "constant", "--value", "0.9",
         "--ntheta", "16", "--nphi", "32", "--out", str(out)],
        capsys,
    )
    assert code == 0
    assert "newton_iters" in stdout
    u = read_field(out)
    assert np.max(np.abs(u.values - 1.0)) < 1e-8


def test_branch_emits_csv_and_sphf(capsys, tmp_path):
    code, out, _ = run_cli(
        ["branch", "--l", "2", "--m", "2", "--steps", "1", "--ntheta", "24",
         "--nphi", "48", "--outdir", str(tmp_path)],
        capsys,
    )
    assert code == 0
    csv = tmp_path / "branch_2_2.csv"
    assert csv.exists()
    rows = csv.read_text().strip().splitlines()
    assert len(rows) == 3  # header + start + one continuation step
    for k in range(2):
        field = read_field(tmp_path / ("branch_2_2_step%d.sphf" % k))
        assert field.sup_norm > 0.05


def test_circle_subcommand(capsys, tmp_path):
    out_csv = tmp_path / "profile.csv"
    code, out, _ = run_cli(
        ["circle", "--lam", "1.2", "--k", "1", "--n", "128", "--out", str(out_csv)],
        capsys,
    )
    assert code == 0
    assert "amplitude" in out
    assert len(out_csv.read_text().strip().splitlines()) == 129


def test_config_file_defaults_and_override(capsys, tmp_path):
    field = tmp_path / "y22.sphf"
    run_cli(
        ["gen", "harmonic", "--l", "2", "--m", "2", "--ntheta", "32",
         "--nphi", "64", "--out", str(field)],
        capsys,
    )
    cfg = tmp_path / "run.cfg"
    cfg.write_text("neps = 37\ntol-w = 1e-6\n")
    sweep = tmp_path / "sweep.csv"
    code, _, _ = run_cli(
        ["--config", str(cfg), "arc-sweep", str(field), "--out", str(sweep)],
        capsys,
    )
    assert code == 0
    assert len(sweep.read_text().strip().splitlines()) == 38  # config applied
    code, _, _ = run_cli(
        ["--config", str(cfg), "arc-sweep", str(field), "--neps", "12",
         "--out", str(sweep)],
        capsys,
    )
    assert code == 0
    assert len(sweep.read_text().strip().splitlines()) == 13  # flag wins


def test_audit_reports_are_deterministic(capsys, tmp_path):
    field = tmp_path / "y22.sphf"
    run_cli(
        ["gen", "harmonic", "--l", "3", "--m", "2", "--ntheta", "32",
         "--nphi", "64", "--out", str(field)],
        capsys,
    )
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    run_cli(["audit", str(field), "--json", str(out_a)], capsys)
    run_cli(["audit", str(field), "--json", str(out_b)], capsys)
    assert out_a.read_bytes() == out_b.read_bytes()


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_missing_input_exits_2(capsys, tmp_path):
    code, _, err = run_cli(["audit", str(tmp_path / "absent.sphf")], capsys)
    assert code == 2
    assert "sphereq:" in err


def test_no_subcommand_prints_help(capsys):
    code, out, _ = run_cli([], capsys)
    assert code == 2
    assert "COMMAND" in out


def test_gen_perturbed_fails_strict_audit(capsys, tmp_path):
    field = tmp_path / "perturbed.sphf"
    code, _, _ = run_cli(
        ["gen", "perturbed", "--l", "2", "--m", "2", "--pl", "1", "--pm", "1",
         "--eps", "0.1", "--ntheta", "32", "--nphi", "64", "--out", str(field)],
        capsys,
    )
    assert code == 0
    code, _, err = run_cli(
        ["audit", str(field), "--strict", "--json", str(tmp_path / "r.json")],
        capsys,
    )
    assert code == 1
    assert "verdict" in err
