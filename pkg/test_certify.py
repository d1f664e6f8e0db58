"""Tests for trace replay, certification and the small-vector sweep."""

import random

import pytest

from hcalc import HVector, parse_hvector
from poset_core import boolean, canonical, dump_poset, f_vector, parse_poset
from certify import (
    Certificate,
    TraceError,
    certify_ball,
    certify_poset,
    cross_check_small,
    delete_element,
    dump_trace,
    duplicate_cover,
    load_trace,
    parse_trace,
    perturb_h,
    replay,
    sweep_one,
)
from realizer import ConstructionTrace, TraceStep, realize

ALL_CHECKS = (
    "(a) replay",
    "(b) validate",
    "(c) h-vector",
    "(d) pseudomanifold",
    "(e) boundary",
    "(f) boundary sphere",
    "(g) ball conditions",
    "(h) sphere closure",
)

TWO_SIMPLICES = (
    "celltrace 1\n"
    "t0 = boolean 4\n"
    "t1 = boolean 4\n"
    "t2 = glue t0 t1 [0:0,1:1,2:2,3:3,4:4,5:5,6:6,7:7,8:8,9:9,11:11,12:12,13:13]\n"
    "result t2\n"
)


def hv(text: str) -> HVector:
    return parse_hvector(text)


def interior_facet(P) -> int:
    upper = P.upper
    return next(x for x in P.facets() if all(len(upper[c]) == 2 for c in P.covers_of(x)))


class TestTraceFormat:
    def test_two_simplices_text(self):
        assert dump_trace(realize(hv("1,0,0,1,0")).trace) == TWO_SIMPLICES

    @pytest.mark.parametrize("text", ["1,1,1,2,0", "1,2,1,2,0", "1,1,0"])
    def test_parse_restores_trace(self, text):
        trace = realize(hv(text)).trace
        assert parse_trace(dump_trace(trace)) == trace

    def test_shelling_is_written(self):
        text = dump_trace(realize(hv("1,1,1,2,0")).trace)
        assert " shelling " in text

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "celltrace 2\nt0 = boolean 2\nresult t0\n",
            "celltrace 1\nt0 = boolean 2\n",
            "celltrace 1\nresult t0\n",
            "celltrace 1\nt0 = glue t0 t0 []\nresult t0\n",
            "celltrace 1\nt0 = boolean 2\nt1 = boolean 2\nt2 = glue t0 t1 [0-0]\nresult t2\n",
            "celltrace 1\nt0 = boolean 2\nt1 = boolean 2\nt2 = glue t0 t1 0:0\nresult t2\n",
            "celltrace 1\nt0 = cube 2\nresult t0\n",
            "celltrace 1\nt1 = boolean 2\nresult t0\n",
            "celltrace 1\nt0 = boolean 2\nresult t3\n",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(TraceError):
            parse_trace(text)

    def test_load_trace(self, tmp_path):
        path = tmp_path / "two.trace"
        path.write_text(TWO_SIMPLICES, encoding="utf-8")
        assert dump_trace(load_trace(str(path))) == TWO_SIMPLICES

    def test_load_trace_rejects_non_utf8(self, tmp_path):
        path = tmp_path / "bad.trace"
        path.write_bytes(b"celltrace 1\nt0 = boolean \xff\nresult t0\n")
        with pytest.raises(TraceError):
            load_trace(str(path))


class TestReplay:
    def test_single_generator(self):
        trace = ConstructionTrace.generator("boolean", 3)
        assert canonical(replay(trace)) == canonical(boolean(3))

    def test_two_simplices(self):
        P = replay(parse_trace(TWO_SIMPLICES))
        assert f_vector(P) == (1, 4, 6, 5, 2)

    @pytest.mark.parametrize("text", ["1,1,1,2,0", "1,2,1,3,0", "1,3,0,0"])
    def test_matches_realization(self, text):
        result = realize(hv(text))
        assert canonical(replay(result.trace)) == canonical(result.poset)

    def test_corrupted_pairs(self):
        text = TWO_SIMPLICES.replace("0:0,1:1,", "0:1,1:0,")
        with pytest.raises(TraceError) as info:
            replay(parse_trace(text))
        assert info.value.step == 2

    def test_unknown_right_id(self):
        text = TWO_SIMPLICES.replace("13:13]", "13:99]")
        with pytest.raises(TraceError):
            replay(parse_trace(text))

    def test_interior_gluing_is_rejected(self):
        # the second glue reuses the ridge the first one already closed
        steps = (
            TraceStep("boolean", (2,)),
            TraceStep("boolean", (2,)),
            TraceStep("glue", (0, 1), ((0, 0),)),
            TraceStep("boolean", (2,)),
            TraceStep("glue", (2, 3), ((0, 0),)),
        )
        with pytest.raises(TraceError) as info:
            replay(ConstructionTrace(steps, 4))
        assert info.value.step == 4

    def test_result_must_exist(self):
        with pytest.raises(TraceError):
            replay(ConstructionTrace((TraceStep("boolean", (2,)),), 3))


class TestCertify:
    def test_two_window_case_passes(self):
        result = realize(hv("1,1,1,2,0"))
        report = certify_poset(result.poset, result.trace, hv("1,1,1,2,0"))
        assert report.ok
        assert tuple(c.name for c in report.checks) == ALL_CHECKS
        assert report.render()[-1] == "certified"

    def test_files(self, tmp_path):
        result = realize(hv("1,2,1,3,0"))
        poset_path, trace_path = tmp_path / "ball.poset", tmp_path / "ball.trace"
        poset_path.write_text(dump_poset(result.poset), encoding="utf-8")
        trace_path.write_text(dump_trace(result.trace), encoding="utf-8")
        report = certify_ball(Certificate(str(poset_path), str(trace_path), hv("1,2,1,3,0")))
        assert report.ok

    def test_deleted_interior_facet(self):
        result = realize(hv("1,2,0"))
        P = delete_element(result.poset, interior_facet(result.poset))
        failed = certify_poset(P, result.trace, hv("1,2,0")).failed()
        assert "(a) replay" in failed
        assert "(d) pseudomanifold" in failed

    def test_wrong_h(self):
        result = realize(hv("1,1,1,2,0"))
        report = certify_poset(result.poset, result.trace, hv("1,1,2,2,0"))
        assert "(c) h-vector" in report.failed()
        assert report.render()[-1].startswith("not certified")

    def test_duplicate_cover(self):
        result = realize(hv("1,0,0,1,0"))
        top = result.poset.facets()[0]
        failed = certify_poset(duplicate_cover(result.poset, top), result.trace, hv("1,0,0,1,0")).failed()
        assert "(b) validate" in failed

    def test_random_mutations_are_caught(self):
        rng = random.Random(50)
        bases = [(hv(t), realize(hv(t))) for t in ("1,0,0,1,0", "1,2,0", "1,1,1,2,0", "1,1,1,0", "1,3,0,0")]
        for _ in range(50):
            h, result = rng.choice(bases)
            P, claimed = result.poset, h
            kind = rng.choice(("delete", "duplicate", "perturb"))
            if kind == "delete":
                P = delete_element(P, rng.choice(P.elements).id)
            elif kind == "duplicate":
                P = duplicate_cover(P, rng.choice([e.id for e in P.elements if e.covers]))
            else:
                claimed = perturb_h(h, rng.randrange(len(h)), rng.choice((-1, 1)))
            report = certify_poset(P, result.trace, claimed)
            assert not report.ok, (kind, str(h))


class TestSweep:
    def test_small_sweep_certifies_everything(self):
        report = cross_check_small(3, 6, width_entry_max=2)
        assert report.failures() == []
        assert report.anomalies() == []
        assert report.ok
        assert any(r.verdict == "certified" for r in report.rows)
        entries = [r.h.entries for r in report.rows]
        assert entries == sorted(entries)

    def test_parity_witness_is_recorded(self):
        row = sweep_one(hv("1,0,1,0,1,0"))
        assert row.verdict == "inadmissible"
        assert row.failing == ("(3)",)

    def test_certified_row(self):
        row = sweep_one(hv("1,1,1,2,0"))
        assert row.verdict == "certified"
        assert row.case == 3
        assert row.facets == 5

    def test_deterministic(self):
        first = cross_check_small(2, 4, width_entry_max=2)
        second = cross_check_small(2, 4, width_entry_max=2)
        assert first.rows == second.rows

    def test_table(self):
        report = cross_check_small(2, 3, width_entry_max=2)
        lines = report.to_tsv().splitlines()
        assert lines[0] == "h\tverdict\tfailing\tfacets\telements\twall_ms"
        assert any(line.startswith("1,1,0\tcertified\t-\t2\t") for line in lines)
        assert lines[-1].startswith("# width check:")

    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            cross_check_small(0, 3)

    @pytest.mark.slow
    def test_closed_loop(self):
        report = cross_check_small(5, 8)
        assert report.failures() == []
        assert report.ok
        counts = report.condition_counts()
        for label in ("(1)", "(2)", "(3)"):
            assert counts[label] > 0
        inadmissible = {str(r.h): r.failing for r in report.rows if r.verdict == "inadmissible"}
        assert inadmissible["1,0,1,0,1,0"] == ("(3)",)
