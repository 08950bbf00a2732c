import shutil

import pytest
import yaml

from quantinv.cli import EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK, main
from tests.conftest import DATA


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_example1(tmp_path, capsys):
    code, out, _ = _run(capsys, "analyze", DATA / "ex1.sys", "--out", tmp_path)
    assert code == EXIT_OK
    assert "NotULDI" in out
    reports = list(tmp_path.glob("*-analyze.yaml"))
    assert len(reports) == 1
    body = yaml.safe_load(reports[0].read_text())
    assert body["verdict"]["property"] == "NotULDI"
    assert list(tmp_path.glob("*-certificate.csv"))


def test_analyze_reports_are_stable(tmp_path, capsys):
    _run(capsys, "analyze", "ex3.sys", "--out", tmp_path, "--level", 6)
    first = sorted(tmp_path.iterdir())
    text = first[0].read_text()
    _run(capsys, "analyze", "ex3.sys", "--out", tmp_path, "--level", 6)
    assert sorted(tmp_path.iterdir()) == first        # identical run: nothing new written
    strip = lambda t: [l for l in t.splitlines() if not l.startswith("timestamp:")]
    assert strip(first[0].read_text()) == strip(text)
    # a different configuration gets its own report
    _run(capsys, "analyze", "ex3.sys", "--out", tmp_path, "--level", 5)
    assert len(list(tmp_path.glob("*-analyze.yaml"))) == 2


def test_analyze_inconclusive_exit(tmp_path, capsys):
    code, out, _ = _run(capsys, "analyze", "tight-boundary.sys", "--level", 4, "--out", tmp_path)
    assert code == EXIT_INCONCLUSIVE
    assert "Inconclusive" in out and "retry at level 6" in out


def test_strict_boundary_flag(tmp_path, capsys):
    code, out, _ = _run(capsys, "analyze", "ex3.sys", "--strict-boundary", "--out", tmp_path)
    assert code in (EXIT_OK, EXIT_INCONCLUSIVE)


@pytest.mark.parametrize("argv", [
    ("analyze", "ex1.sys", "--level", "3"),
    ("analyze", "ex1.sys", "--kmax", "-1"),
    ("analyze", "no-such-file.sys"),
    ("frobnicate",),
    ("classify1d", "2"),
])
def test_usage_errors(argv, tmp_path, capsys):
    code = main(list(argv) + (["--out", str(tmp_path)] if argv[0] == "analyze" else []))
    capsys.readouterr()
    assert code == EXIT_ERROR


def test_bad_system_file_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.sys"
    bad.write_text("A: [[1/2]]\nB: [[1], [2]]\nalphabet: [0, 1]\np: 1\n")
    code, _, err = _run(capsys, "analyze", bad, "--out", tmp_path)
    assert code == EXIT_ERROR
    assert "bad.sys" in err and "error" in err


def test_attractor_exports(tmp_path, capsys):
    code, out, _ = _run(capsys, "attractor", "ex1.sys", "--out", tmp_path)
    assert code == EXIT_OK
    names = {p.name for p in tmp_path.iterdir()}
    # purely expansive: no contractive part to export
    assert "example-1-Tc.csv" not in names
    for label in ("Te", "T"):
        assert f"example-1-{label}.csv" in names and f"example-1-{label}.svg" in names
    assert tmp_path.joinpath("example-1-Te.svg").read_text().lstrip().startswith("<")


def test_graph_dump(tmp_path, capsys):
    code, out, _ = _run(capsys, "graph", "ex3.sys", "--depth", 1, "--out", tmp_path)
    assert code == EXIT_OK
    dump = next(tmp_path.glob("*-graph-k1.txt")).read_text()
    assert dump.startswith("# depth_k 1")


@pytest.mark.parametrize("argv, expect", [
    (("1/2", "-1", "0", "1"), "NotULDI"),
    (("3", "0", "1"), "NotULI"),
    (("3/2", "0", "3"), "ULDI"),
])
def test_classify1d(argv, expect, tmp_path, capsys):
    code, out, _ = _run(capsys, "classify1d", *argv, "--out", tmp_path)
    assert code == EXIT_OK and expect in out


def test_oracle(capsys):
    code, out, _ = _run(capsys, "oracle", "ex3.sys", "--depth", 8)
    assert code == EXIT_OK and "collision" in out.lower()


def test_examples_all_pass(capsys):
    code, out, _ = _run(capsys, "examples")
    assert code == EXIT_OK
    assert out.strip().endswith("3/3 pass")


def test_examples_detect_corruption(tmp_path, capsys):
    for n in ("ex1.sys", "ex3.sys"):
        shutil.copy(DATA / n, tmp_path / n)
    text = (DATA / "ex2.sys").read_text().replace("[2, 0, 0]", "[1, 0, 0]")
    (tmp_path / "ex2.sys").write_text(text)
    code, out, _ = _run(capsys, "examples", tmp_path)
    assert code == EXIT_ERROR
    row = next(l for l in out.splitlines() if l.startswith("ex2.sys"))
    assert "FAIL" in row and "MarginalSpectrum" in row
    assert "2/3 pass" in out


def test_examples_missing_directory(tmp_path, capsys):
    code, _, err = _run(capsys, "examples", tmp_path / "missing")
    assert code == EXIT_ERROR and "not found" in err
