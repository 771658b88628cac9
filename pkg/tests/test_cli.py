import subprocess
import sys
from pathlib import Path

import pytest

from stonecomp.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_dualize(capsys):
    code, out, _ = run(capsys, "dualize", DATA / "cantor_depth2.tree")
    assert code == 0
    assert out.splitlines()[0] == "atoms 4, labeled-atoms 0"


def test_rce_build_merges_after_removal(capsys):
    code, out, _ = run(capsys, "rce-build", DATA / "one_removal.sched", "--points", 16, "--budget", 8)
    assert code == 0
    # point 0 starts at the empty string, point 2 at "1"
    d = {int(line.split()[3]): line.split()[4] for line in out.splitlines() if line.startswith("d 0 2 ")}
    assert [d[s] for s in range(3)] == ["1/2^0"] * 3
    assert all(d[s] == "0/2^0" for s in range(3, 9))


def test_covers(capsys):
    code, out, _ = run(capsys, "covers", DATA / "one_removal.sched", "--points", 4, "--depth", 1)
    lines = out.splitlines()
    assert code == 0 and lines[-1] == f"covers {len(lines) - 1}"
    assert all(line.startswith("cover@") for line in lines[:-1])


def test_extract(capsys):
    code, out, _ = run(capsys, "extract", DATA / "atom_cantor.tree")
    assert code == 0
    assert out.splitlines()[-1] == "isomorphic yes (ground truth has 2 atoms)"


def test_extract_with_too_few_points_fails(capsys):
    code, out, _ = run(capsys, "extract", DATA / "cantor_depth2.tree", "--points", 3)
    assert code == 1 and "isomorphic no" in out


def test_homeo(capsys):
    code, out, _ = run(capsys, "homeo", DATA / "atom_cantor.tree", DATA / "atom_cantor.tree")
    assert code == 0
    assert out.startswith("# source splitting tree (spine(1))")
    assert sum(line.startswith("point ") for line in out.splitlines()) == 16


def test_homeo_rejects_mismatched_spaces(capsys):
    code, _, err = run(capsys, "homeo", DATA / "atom_cantor.tree", DATA / "cantor_depth2.tree")
    assert code == 2 and "isolated points" in err


def test_banach_reconstruct(capsys):
    code, out, _ = run(capsys, "banach-reconstruct", DATA / "atom_cantor.tree", DATA / "cone0.cf")
    lines = out.splitlines()
    assert code == 0
    assert "stabilized yes" in lines and "isomorphic yes" in lines
    assert lines[-1].endswith("indicator of {0} splits no")


def test_verify_bundled_examples(capsys):
    for name in ("one_removal.sched", "late_removals.sched", "atom_cantor.tree"):
        code, out, _ = run(capsys, "verify", DATA / name, "--depth", 3)
        assert code == 0, out
        assert out.splitlines()[-1] == "suites failed 0"


def test_malformed_file_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.tree"
    bad.write_text("node -\nleaf 0 cantor\nleaf 1 blob\n")
    code, _, err = run(capsys, "dualize", bad)
    assert code == 2 and "line 3" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "dualize", "/nonexistent/tree")
    assert code == 2 and "No such file" in err


def test_bad_flags(capsys):
    assert run(capsys, "dualize", DATA / "atom_cantor.tree", "--budget", "-1")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


@pytest.mark.parametrize("args", [["dualize", "cantor_depth2.tree"], ["rce-build", "late_removals.sched", "--points", "8"]])
def test_entry_point_is_deterministic(args):
    cmd = [sys.executable, "-m", "stonecomp.cli", *args]
    runs = [subprocess.run(cmd, cwd=DATA, capture_output=True, env={"PYTHONHASHSEED": seed}) for seed in ("1", "2")]
    assert runs[0].returncode == 0
    assert runs[0].stdout == runs[1].stdout
