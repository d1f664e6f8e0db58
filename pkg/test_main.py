"""Tests for the command-line entry point."""

import pytest

import main as cli
from poset_core import boolean, dump_poset

DOUBLED = "cellposet 1\nd 2\nn 4\ne 0 1 -\ne 1 1 -\ne 2 2 0,1\ne 3 2 0,1\n"


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in (
        "CELLBALL_SWEEP_D",
        "CELLBALL_SWEEP_FACETS",
        "CELLBALL_SWEEP_WORKERS",
        "CELLBALL_WIDTH_ENTRY_MAX",
        "CELLBALL_LOG_LEVEL",
    ):
        monkeypatch.delenv(name, raising=False)


class TestCheck:
    def test_admissible(self, capsys):
        assert cli.main(["check", "1,1,1,2,0"]) == cli.EXIT_OK
        assert "admissible" in capsys.readouterr().out

    def test_inadmissible(self, capsys):
        assert cli.main(["check", "1,0,1,0,1,0"]) == cli.EXIT_NEGATIVE
        assert "first failing condition: (3)" in capsys.readouterr().out

    def test_sphere(self):
        assert cli.main(["check", "--sphere", "1,0,1"]) == cli.EXIT_OK
        assert cli.main(["check", "--sphere", "1,0,1,0,1"]) == cli.EXIT_NEGATIVE

    def test_negative_entry_after_separator(self):
        assert cli.main(["check", "--", "-1,0"]) == cli.EXIT_NEGATIVE

    def test_malformed(self, capsys):
        assert cli.main(["check", "1,x"]) == cli.EXIT_INPUT
        assert capsys.readouterr().out.startswith("Input error:")


class TestRealizeAndVerify:
    def test_round_trip(self, tmp_path, capsys):
        poset, trace = str(tmp_path / "ball.poset"), str(tmp_path / "ball.trace")
        assert cli.main(["realize", "1,1,1,2,0", "--out", poset, "--trace", trace, "--quiet"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "via case 3" in out
        assert "n = 1, m = 3, s = 1" in out
        assert open(poset, encoding="utf-8").read().startswith("cellposet 1\nd 4\n")

        assert cli.main(["--quiet", "verify", poset, trace, "1,1,1,2,0"]) == cli.EXIT_OK
        assert capsys.readouterr().out.splitlines()[-1] == "certified"

        assert cli.main(["verify", poset, trace, "1,1,2,1,0"]) == cli.EXIT_NEGATIVE
        assert "FAIL  (c) h-vector" in capsys.readouterr().out

    def test_refuses_inadmissible(self, capsys):
        assert cli.main(["realize", "1,0,1,0,1,0"]) == cli.EXIT_NEGATIVE
        assert capsys.readouterr().out.startswith("refused:")

    def test_truncated_poset_file(self, tmp_path):
        poset, trace = tmp_path / "ball.poset", tmp_path / "ball.trace"
        assert cli.main(["realize", "1,0,0,1,0", "--out", str(poset), "--trace", str(trace)]) == cli.EXIT_OK
        poset.write_text("\n".join(poset.read_text(encoding="utf-8").splitlines()[:5]) + "\n", encoding="utf-8")
        assert cli.main(["verify", str(poset), str(trace), "1,0,0,1,0"]) == cli.EXIT_INPUT

    def test_missing_file(self, tmp_path):
        missing = str(tmp_path / "nope.poset")
        assert cli.main(["verify", missing, str(tmp_path / "t"), "1,0"]) == cli.EXIT_INPUT

    def test_non_utf8_files(self, tmp_path, capsys):
        poset, trace = tmp_path / "ball.poset", tmp_path / "ball.trace"
        assert cli.main(["realize", "1,0,0,1,0", "--out", str(poset), "--trace", str(trace), "--quiet"]) == cli.EXIT_OK
        good_poset, good_trace = poset.read_bytes(), trace.read_bytes()
        capsys.readouterr()

        poset.write_bytes(b"cellposet 1\nd 1\nn 1\ne 0 1 \xff\n")
        assert cli.main(["verify", str(poset), str(trace), "1,0,0,1,0"]) == cli.EXIT_INPUT
        assert capsys.readouterr().out.startswith("Input error:")

        poset.write_bytes(good_poset)
        trace.write_bytes(good_trace.replace(b"boolean", b"b\xfflean", 1))
        assert cli.main(["verify", str(poset), str(trace), "1,0,0,1,0"]) == cli.EXIT_INPUT
        assert capsys.readouterr().out.startswith("Input error:")

    def test_same_path_twice(self, tmp_path):
        path = str(tmp_path / "x")
        assert cli.main(["realize", "1,0", "--out", path, "--trace", path]) == cli.EXIT_INPUT


class TestInfo:
    def test_doubled_edge(self, tmp_path, capsys):
        path = tmp_path / "doubled.poset"
        path.write_text(DOUBLED, encoding="utf-8")
        assert cli.main(["info", str(path)]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "h = (1,0,1)" in out
        assert "boundary: empty" in out

    def test_simplex(self, tmp_path, capsys):
        path = tmp_path / "simplex.poset"
        path.write_text(dump_poset(boolean(4)), encoding="utf-8")
        assert cli.main(["info", str(path)]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "f = (1,4,6,4,1)" in out
        assert "boundary h = (1,1,1,1)" in out
        assert "boundary f = (1,4,6,4), h = (1,1,1,1)" in out

    def test_invalid_poset(self, tmp_path, capsys):
        path = tmp_path / "bad.poset"
        path.write_text("cellposet 1\nd 2\nn 3\ne 0 1 -\ne 1 1 -\ne 2 2 0\n", encoding="utf-8")
        assert cli.main(["info", str(path)]) == cli.EXIT_NEGATIVE
        assert capsys.readouterr().out.startswith("invalid:")

    def test_non_utf8_poset(self, tmp_path, capsys):
        path = tmp_path / "bad.poset"
        path.write_bytes(b"cellposet 1\nd 1\nn 1\ne 0 1 \xff\n")
        assert cli.main(["info", str(path)]) == cli.EXIT_INPUT
        assert capsys.readouterr().out.startswith("Input error:")


class TestSweep:
    def test_stdout(self, capsys):
        assert cli.main(["sweep", "--d", "2", "--facets", "3", "--quiet"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("h\tverdict\t")
        assert "1,1,0\tcertified" in out

    def test_file(self, tmp_path, capsys):
        out_path = tmp_path / "sweep.tsv"
        assert cli.main(["--quiet", "sweep", "--d", "2", "--facets", "3", "--out", str(out_path)]) == cli.EXIT_OK
        assert out_path.read_text(encoding="utf-8").startswith("h\tverdict\t")
        assert "wrote sweep table" in capsys.readouterr().out

    def test_bounds_from_environment(self, monkeypatch, capsys):
        monkeypatch.setenv("CELLBALL_SWEEP_D", "1")
        monkeypatch.setenv("CELLBALL_SWEEP_FACETS", "2")
        monkeypatch.setenv("CELLBALL_WIDTH_ENTRY_MAX", "1")
        assert cli.main(["sweep", "--quiet"]) == cli.EXIT_OK
        assert "sweep d <= 1, facets <= 2" in capsys.readouterr().out

    def test_nonpositive_bound(self):
        assert cli.main(["sweep", "--d", "0"]) == cli.EXIT_INPUT


class TestConfig:
    def test_bad_integer(self, monkeypatch, capsys):
        monkeypatch.setenv("CELLBALL_SWEEP_D", "five")
        assert cli.main(["check", "1,0"]) == cli.EXIT_INPUT
        assert capsys.readouterr().out.startswith("Configuration error:")

    def test_bad_level(self, monkeypatch):
        monkeypatch.setenv("CELLBALL_LOG_LEVEL", "loud")
        assert cli.main(["check", "1,0"]) == cli.EXIT_INPUT

    def test_defaults(self):
        cfg = cli.load_config()
        assert (cfg.sweep_d, cfg.sweep_facets, cfg.sweep_workers) == (5, 8, 1)
        assert cfg.log_level == "WARNING"
