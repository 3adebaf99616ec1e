"""End-to-end tests of the command-line interface and its exit codes."""

import numpy as np
import pytest

from cknsym.cli import main
from cknsym.grid import BallGrid, load_field
from cknsym.kvdoc import parse_kv
from cknsym.variational import report_summary_from_doc


def write_doc(path, text):
    path.write_text(text)
    return str(path)


def run(*argv):
    return main(list(argv))


# --------------------------------------------------------------------------
# enumerate


def test_enumerate_dimension_eight(tmp_path, capsys):
    cfg = write_doc(tmp_path / "enum.kv", "n: 8\n")
    assert run("enumerate", "--config", cfg) == 0
    pairs = parse_kv(capsys.readouterr().out)
    assert pairs["count"] == "4"
    assert pairs["config 0"] == "alpha=0 m=0,0,1"
    assert pairs["config 3"] == "alpha=0 m=2,0,0"


def test_enumerate_writes_output_file(tmp_path):
    cfg = write_doc(tmp_path / "enum.kv", "n: 4\nalpha_max: 1\n")
    out = tmp_path / "family.kv"
    assert run("enumerate", "--config", cfg, "--out", str(out)) == 0
    pairs = parse_kv(out.read_text())
    assert pairs["count"] == "2"


def test_enumerate_rejects_small_dimension(tmp_path, capsys):
    cfg = write_doc(tmp_path / "enum.kv", "n: 3\n")
    assert run("enumerate", "--config", cfg) == 2
    assert "error:" in capsys.readouterr().err


def test_enumerate_rejects_unknown_keys(tmp_path):
    cfg = write_doc(tmp_path / "enum.kv", "n: 8\nbogus: 1\n")
    assert run("enumerate", "--config", cfg) == 2


def test_enumerate_requires_a_config(capsys):
    assert run("enumerate") == 2
    assert "requires --config" in capsys.readouterr().err


def test_unwritable_output_is_an_io_failure(tmp_path):
    cfg = write_doc(tmp_path / "enum.kv", "n: 8\n")
    missing_dir = tmp_path / "no" / "such" / "dir" / "out.kv"
    assert run("enumerate", "--config", cfg, "--out", str(missing_dir)) == 1


def test_reruns_are_byte_identical(tmp_path):
    cfg = write_doc(tmp_path / "enum.kv", "n: 10\nalpha_max: 2\n")
    out1, out2 = tmp_path / "a.kv", tmp_path / "b.kv"
    assert run("enumerate", "--config", cfg, "--out", str(out1)) == 0
    assert run("enumerate", "--config", cfg, "--out", str(out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()


# --------------------------------------------------------------------------
# check-group


def test_check_group_passes_for_basic_config(tmp_path, capsys):
    cfg = write_doc(tmp_path / "grp.kv", "n: 4\nalpha: 0\nm: 1\ntrials: 200\n")
    assert run("check-group", "--config", cfg) == 0
    pairs = parse_kv(capsys.readouterr().out)
    assert pairs["P1 stabilizer-in-kernel"] == "pass"
    assert pairs["P2 sign-homomorphism"] == "pass"
    assert pairs["P3 infinite-orbits"] == "pass"
    assert pairs["overall"] == "pass"


def test_check_group_reports_tail_failure(tmp_path, capsys):
    # n = 7 with a width-3 block leaves one leftover coordinate: its orbit
    # is a fixed point, which the nonzero-weight regime cannot tolerate
    cfg = write_doc(tmp_path / "grp.kv",
                    "n: 7\nalpha: 0\nm: 0,1\nregime: a_eq_b_nonzero\ntrials: 100\n")
    assert run("check-group", "--config", cfg) == 1
    pairs = parse_kv(capsys.readouterr().out)
    assert pairs["P3 infinite-orbits"] == "fail"
    assert "P3 certificate" in pairs
    assert pairs["overall"] == "fail"


def test_check_group_rejects_malformed_config(tmp_path):
    cfg = write_doc(tmp_path / "grp.kv", "n: 4\nalpha: 0\nm: 7\n")
    assert run("check-group", "--config", cfg) == 2


def test_check_group_reruns_are_byte_identical(tmp_path):
    cfg = write_doc(tmp_path / "grp.kv", "n: 6\nalpha: 1\nm:\ntrials: 100\n")
    out1, out2 = tmp_path / "a.kv", tmp_path / "b.kv"
    assert run("check-group", "--config", cfg, "--out", str(out1), "--seed", "3") == 0
    assert run("check-group", "--config", cfg, "--out", str(out2), "--seed", "3") == 0
    assert out1.read_bytes() == out2.read_bytes()


# --------------------------------------------------------------------------
# distinguish


def test_distinguish_reports_guaranteed_pair(tmp_path, capsys):
    cfg = write_doc(tmp_path / "pair.kv",
                    "n: 8\nalpha_a: 0\nm_a: 1,0,0\nalpha_b: 0\nm_b: 2,0,0\n")
    assert run("distinguish", "--config", cfg) == 0
    pairs = parse_kv(capsys.readouterr().out)
    assert pairs["verdict"] == "guaranteed"


def test_distinguish_reports_undecided_pair(tmp_path, capsys):
    cfg = write_doc(tmp_path / "pair.kv",
                    "n: 8\nalpha_a: 0\nm_a: 2,0,0\nalpha_b: 0\nm_b: 0,0,1\n")
    assert run("distinguish", "--config", cfg) == 0
    pairs = parse_kv(capsys.readouterr().out)
    assert pairs["verdict"] == "not_guaranteed"
    assert "gcd" in pairs["reason"]


# --------------------------------------------------------------------------
# orbit


def test_orbit_classifies_the_origin_as_a_singleton(tmp_path, capsys):
    cfg = write_doc(tmp_path / "orb.kv",
                    "n: 4\nalpha: 0\nm: 1\npoint: 0,0,0,0\n")
    assert run("orbit", "--config", cfg) == 0
    pairs = parse_kv(capsys.readouterr().out)
    assert pairs["kind"] == "finite_singleton"


def test_orbit_classifies_generic_points_as_infinite(tmp_path, capsys):
    cfg = write_doc(tmp_path / "orb.kv",
                    "n: 4\nalpha: 0\nm: 1\npoint: 0.5,0.1,-0.2,0.3\n")
    assert run("orbit", "--config", cfg) == 0
    pairs = parse_kv(capsys.readouterr().out)
    assert pairs["kind"] == "infinite"


def test_orbit_rejects_malformed_points(tmp_path):
    cfg = write_doc(tmp_path / "orb.kv",
                    "n: 4\nalpha: 0\nm: 1\npoint: 0.5,oops,0,0\n")
    assert run("orbit", "--config", cfg) == 2


# --------------------------------------------------------------------------
# solve


SOLVE_DOC = """n: 4
alpha: 0
m: 1
points_per_axis: 9
max_iters: 12
"""


def test_solve_writes_the_result_bundle(tmp_path, capsys):
    cfg = write_doc(tmp_path / "solve.kv", SOLVE_DOC)
    out = tmp_path / "results"
    assert run("solve", "--config", cfg, "--out", str(out)) == 0
    listing = capsys.readouterr().out
    assert "report.txt" in listing and "field.dat" in listing and "run.log" in listing

    summary = report_summary_from_doc((out / "report.txt").read_text())
    assert summary["n"] == 4
    assert summary["sign certified"] is True
    assert summary["level estimate"] > 0

    grid, field = load_field(out / "field.dat")
    assert grid == BallGrid(4, 9, 1.0)
    assert field.shape == grid.shape
    assert np.max(np.abs(field)) > 0

    log = parse_kv((out / "run.log").read_text())
    assert log["max_iters"] == "12"
    assert log["q (resolved)"]
    assert log["outcome"]


def test_solve_reruns_are_byte_identical(tmp_path):
    cfg = write_doc(tmp_path / "solve.kv", SOLVE_DOC)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run("solve", "--config", cfg, "--out", str(out1)) == 0
    assert run("solve", "--config", cfg, "--out", str(out2)) == 0
    assert (out1 / "report.txt").read_bytes() == (out2 / "report.txt").read_bytes()
    assert (out1 / "field.dat").read_bytes() == (out2 / "field.dat").read_bytes()


def test_solve_resume_matches_uninterrupted_run(tmp_path):
    base = "n: 4\nalpha: 0\nm: 1\npoints_per_axis: 9\n"
    full_doc = write_doc(tmp_path / "full.kv", base + "max_iters: 20\n")
    part_doc = write_doc(tmp_path / "part.kv", base + "max_iters: 12\ncheckpoint_every: 4\n")
    full_out, part_out, res_out = tmp_path / "full", tmp_path / "part", tmp_path / "res"
    assert run("solve", "--config", full_doc, "--out", str(full_out)) == 0
    assert run("solve", "--config", part_doc, "--out", str(part_out)) == 0
    resume_doc = write_doc(
        tmp_path / "resume.kv",
        base + f"max_iters: 20\nresume: {part_out / 'checkpoint.dat'}\n")
    assert run("solve", "--config", resume_doc, "--out", str(res_out)) == 0

    full = report_summary_from_doc((full_out / "report.txt").read_text())
    resumed = report_summary_from_doc((res_out / "report.txt").read_text())
    assert resumed["energy"] == pytest.approx(full["energy"], rel=1e-12)
    assert resumed["level"] == pytest.approx(full["level"], rel=1e-12)


def test_solve_missing_checkpoint_is_an_io_failure(tmp_path, capsys):
    doc = write_doc(tmp_path / "solve.kv",
                    SOLVE_DOC + f"resume: {tmp_path / 'absent.dat'}\n")
    assert run("solve", "--config", doc, "--out", str(tmp_path / "out")) == 1
    assert "error:" in capsys.readouterr().err


def test_solve_rejects_half_specified_weights(tmp_path):
    doc = write_doc(tmp_path / "solve.kv", SOLVE_DOC + "a: 0.1\n")
    assert run("solve", "--config", doc, "--out", str(tmp_path / "out")) == 2


def test_solve_rejects_invalid_grid(tmp_path):
    doc = write_doc(tmp_path / "solve.kv",
                    "n: 4\nalpha: 0\nm: 1\npoints_per_axis: 8\n")
    assert run("solve", "--config", doc, "--out", str(tmp_path / "out")) == 2
