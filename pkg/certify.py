"""Independent verification of realized balls.

Replays construction traces, certifies a poset against a claimed h-vector and
sweeps every small candidate vector through the checker and the realizer.
"""

import logging
import multiprocessing
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from hcalc import (
    CONDITION_ORDER,
    HVector,
    HVectorError,
    ball_candidates,
    boundary_h,
    check_ball,
    check_kolins,
    check_sphere,
    format_vector,
    width_agreement,
)
from poset_core import (
    Element,
    GlueMap,
    PosetError,
    SimplicialPoset,
    boolean,
    boundary,
    boundary_is_pseudosphere,
    canonical,
    delta,
    dump_poset,
    glue,
    h_vector,
    is_pure,
    load_poset,
    order_ideal,
    parse_poset,
    pseudomanifold_violations,
    sp_closure,
    strongly_connected,
    validate,
    verify_shelling,
)
from realizer import ConstructionTrace, InadmissibleError, RealizationError, TraceStep, realize

log = logging.getLogger(__name__)

TRACE_HEADER = "celltrace 1"


class TraceError(ValueError):
    def __init__(self, message: str, step: Optional[int] = None) -> None:
        super().__init__(message if step is None else f"step t{step}: {message}")
        self.step = step


# --------------------------------------------------------------------------- #
# TRACE TEXT FORMAT
# --------------------------------------------------------------------------- #

def dump_trace(trace: ConstructionTrace) -> str:
    lines = [TRACE_HEADER]
    for index, step in enumerate(trace.steps):
        if step.op == "glue":
            left, right = step.params
            pairs = ",".join(f"{a}:{b}" for a, b in step.pairs)
            line = f"t{index} = glue t{left} t{right} [{pairs}]"
            if step.shelling:
                line += " shelling " + ",".join(str(x) for x in step.shelling)
        else:
            line = f"t{index} = {step.op} " + " ".join(str(p) for p in step.params)
        lines.append(line)
    lines.append(f"result t{trace.result}")
    return "\n".join(lines) + "\n"


def _step_ref(token: str, index: int) -> int:
    if not token.startswith("t"):
        raise TraceError(f"expected a step reference, got {token!r}", index)
    try:
        ref = int(token[1:])
    except ValueError:
        raise TraceError(f"expected a step reference, got {token!r}", index)
    if not 0 <= ref < index:
        raise TraceError(f"t{ref} is not an earlier step", index)
    return ref


def _ints(text: str, index: int) -> Tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",")) if text else ()
    except ValueError:
        raise TraceError(f"malformed integer list {text!r}", index)


def _parse_step(line: str, index: int) -> TraceStep:
    parts = line.split()
    if len(parts) < 3 or parts[0] != f"t{index}" or parts[1] != "=":
        raise TraceError(f"expected 't{index} = ...', got {line!r}", index)
    op, args = parts[2], parts[3:]
    if op == "boolean" and len(args) == 1:
        return TraceStep(op, _ints(args[0], index))
    if op == "delta" and len(args) == 2:
        return TraceStep(op, _ints(",".join(args), index))
    if op == "glue" and len(args) in (3, 5):
        left, right = _step_ref(args[0], index), _step_ref(args[1], index)
        body = args[2]
        if not (body.startswith("[") and body.endswith("]")):
            raise TraceError(f"pair list must be bracketed, got {body!r}", index)
        pairs = []
        for item in filter(None, body[1:-1].split(",")):
            a, sep, b = item.partition(":")
            if not sep:
                raise TraceError(f"malformed pair {item!r}", index)
            pairs.append(_ints(f"{a},{b}", index))
        shelling: Tuple[int, ...] = ()
        if len(args) == 5:
            if args[3] != "shelling":
                raise TraceError(f"unexpected token {args[3]!r}", index)
            shelling = _ints(args[4], index)
        return TraceStep(op, (left, right), tuple((a, b) for a, b in pairs), shelling)
    raise TraceError(f"unknown or malformed step {line!r}", index)


def load_trace(path: str) -> ConstructionTrace:
    with open(path, "r", encoding="utf-8") as f:
        try:
            text = f.read()
        except UnicodeDecodeError as exc:
            raise TraceError(f"{path} is not UTF-8 text (byte {exc.start})") from exc
    return parse_trace(text)


def parse_trace(text: str) -> ConstructionTrace:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != TRACE_HEADER:
        if lines and lines[0].startswith("celltrace"):
            raise TraceError(f"unsupported trace format version {lines[0]!r}")
        raise TraceError(f"missing '{TRACE_HEADER}' header")
    body = lines[1:]
    if not body or not body[-1].startswith("result "):
        raise TraceError("trace does not end with a result line")
    steps = tuple(_parse_step(line, index) for index, line in enumerate(body[:-1]))
    if not steps:
        raise TraceError("trace has no steps")
    tail = body[-1].split()
    if len(tail) != 2:
        raise TraceError(f"malformed result line {body[-1]!r}")
    return ConstructionTrace(steps, _step_ref(tail[1], len(steps)))


# --------------------------------------------------------------------------- #
# REPLAY
# --------------------------------------------------------------------------- #

def _check_glued_ideal(left: SimplicialPoset, right: SimplicialPoset, step: TraceStep, index: int) -> None:
    """The glued ideal must be a shellable codimension-one piece of both boundaries."""
    d = right.d
    if not step.pairs:
        if d == 1:
            return
        raise TraceError("empty gluing ideal", index)
    right_ids = {b for _, b in step.pairs}
    try:
        ideal = order_ideal(right, right_ids)
        if ideal.members != right_ids:
            raise TraceError("glued elements are not an order ideal", index)
        if not right_ids <= boundary(right).members or not {a for a, _ in step.pairs} <= boundary(left).members:
            raise TraceError("glued ideal leaves the boundary", index)
        view = ideal.as_poset(d - 1)
        if not is_pure(view):
            raise TraceError("glued ideal is not pure of codimension one", index)
        verify_shelling(view, step.shelling or sorted(view.facets()))
    except PosetError as exc:
        raise TraceError(f"glued ideal rejected: {exc}", index)


def replay(trace: ConstructionTrace) -> SimplicialPoset:
    """Rebuild the poset a trace describes, checking every step on the way."""
    built: List[SimplicialPoset] = []
    for index, step in enumerate(trace.steps):
        try:
            if step.op == "boolean" and len(step.params) == 1:
                P = boolean(step.params[0])
            elif step.op == "delta" and len(step.params) == 2:
                P = delta(*step.params)
            elif step.op == "glue" and len(step.params) == 2:
                left, right = step.params
                if not (0 <= left < index and 0 <= right < index):
                    raise TraceError("glue refers to a later step", index)
                _check_glued_ideal(built[left], built[right], step, index)
                P = glue(built[left], built[right], GlueMap.of(step.pairs))
            else:
                raise TraceError(f"unknown operation {step.op!r}", index)
        except PosetError as exc:
            raise TraceError(str(exc), index)
        report = validate(P)
        if not report.ok:
            raise TraceError(report.describe(), index)
        built.append(P)
    if not 0 <= trace.result < len(built):
        raise TraceError(f"result t{trace.result} does not exist")
    return built[trace.result]


# --------------------------------------------------------------------------- #
# CERTIFICATION
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Certificate:
    poset_path: str
    trace_path: str
    h: HVector

    def load(self) -> Tuple[SimplicialPoset, ConstructionTrace]:
        return load_poset(self.poset_path), load_trace(self.trace_path)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: str = ""


@dataclass(frozen=True)
class CertifyReport:
    checks: Tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.passed)

    def render(self) -> List[str]:
        lines = []
        for c in self.checks:
            mark = "pass" if c.passed else "FAIL"
            lines.append(f"{mark}  {c.name}" + (f"  [{c.witness}]" if c.witness else ""))
        lines.append("certified" if self.ok else f"not certified: {', '.join(self.failed())}")
        return lines


def _pseudomanifold_witness(P: SimplicialPoset) -> str:
    if not is_pure(P):
        return "not pure"
    if not strongly_connected(P):
        return "not strongly connected"
    bad = pseudomanifold_violations(P)
    if bad:
        return f"element {bad[0]} has more than two covers"
    if not boundary_is_pseudosphere(P):
        return "boundary is not a closed pseudomanifold"
    return ""


def _boundary_witness(P: SimplicialPoset, h: HVector) -> str:
    B = boundary(P)
    if B.is_empty():
        return "boundary is empty"
    got = h_vector(B.as_poset(P.d - 1))
    expected = boundary_h(h)
    return "" if got == expected else f"h(boundary) = ({got}), expected ({expected})"


def _boundary_sphere_witness(P: SimplicialPoset) -> str:
    report = check_sphere(h_vector(boundary(P).as_poset(P.d - 1)))
    return "" if report.admissible else report.first_failure().describe()


def _closure_witness(P: SimplicialPoset) -> str:
    SP = sp_closure(P)
    boundary_facets = boundary(P).as_poset(P.d - 1).facet_count()
    if SP.facet_count() != P.facet_count() + boundary_facets:
        return f"{SP.facet_count()} facets, expected {P.facet_count()} + {boundary_facets}"
    report = check_sphere(h_vector(SP))
    return "" if report.admissible else f"closure ({report.h}): {report.first_failure().describe()}"


def certify_poset(P: SimplicialPoset, trace: ConstructionTrace, h: HVector) -> CertifyReport:
    """Run every named check; a check that cannot run counts as failed."""

    def replay_witness() -> str:
        return "" if canonical(replay(trace)) == canonical(P) else "replayed poset differs from the file"

    def validate_witness() -> str:
        report = validate(P)
        return "" if report.ok else report.describe()

    def h_witness() -> str:
        got = h_vector(P)
        return "" if got == h else f"h = ({got}), claimed ({h})"

    def ball_witness() -> str:
        report = check_ball(h)
        return "" if report.admissible else report.first_failure().describe()

    steps = (
        ("(a) replay", replay_witness),
        ("(b) validate", validate_witness),
        ("(c) h-vector", h_witness),
        ("(d) pseudomanifold", lambda: _pseudomanifold_witness(P)),
        ("(e) boundary", lambda: _boundary_witness(P, h)),
        ("(f) boundary sphere", lambda: _boundary_sphere_witness(P)),
        ("(g) ball conditions", ball_witness),
        ("(h) sphere closure", lambda: _closure_witness(P)),
    )
    checks = []
    for name, run in steps:
        try:
            witness = run()
        # mutated posets can leave dangling covers behind
        except (ValueError, KeyError, IndexError) as exc:
            witness = f"{type(exc).__name__}: {exc}"
        checks.append(CheckResult(name, not witness, witness))
    report = CertifyReport(tuple(checks))
    log.debug("certified (%s): %s", h, report.failed() or "all checks pass")
    return report


def certify_ball(c: Certificate) -> CertifyReport:
    poset, trace = c.load()
    return certify_poset(poset, trace, c.h)


# --------------------------------------------------------------------------- #
# MUTATIONS
# --------------------------------------------------------------------------- #

def delete_element(P: SimplicialPoset, element_id: int) -> SimplicialPoset:
    """Drop one element; covers pointing at it are left dangling."""
    return SimplicialPoset(P.d, tuple(e for e in P.elements if e.id != element_id))


def duplicate_cover(P: SimplicialPoset, element_id: int) -> SimplicialPoset:
    def bump(e: Element) -> Element:
        if e.id != element_id or not e.covers:
            return e
        return Element(e.id, e.rank, e.covers + e.covers[:1])

    return SimplicialPoset(P.d, tuple(bump(e) for e in P.elements))


def perturb_h(h: HVector, index: int, amount: int = 1) -> HVector:
    return h.plus_unit(index, amount)


# --------------------------------------------------------------------------- #
# SWEEP
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class SweepRow:
    h: HVector
    verdict: str
    failing: Tuple[str, ...] = ()
    facets: int = 0
    elements: int = 0
    case: Optional[int] = None
    anomaly: str = ""
    detail: str = ""
    wall_ms: float = field(default=0.0, compare=False)

    def tsv(self) -> str:
        return "\t".join(
            [
                format_vector(self.h),
                self.verdict,
                ",".join(self.failing) or "-",
                str(self.facets),
                str(self.elements),
                f"{self.wall_ms:.1f}",
            ]
        )


def sweep_one(h: HVector) -> SweepRow:
    """Check one vector and, if admissible, realize and certify it through the text formats."""
    started = time.perf_counter()
    report = check_ball(h)
    anomaly = ""
    if report.admissible and not check_kolins(h).admissible:
        anomaly = "ball-admissible but fails the three-condition test"
    elif report.admissible and not check_sphere(boundary_h(h)).admissible:
        anomaly = "ball-admissible but the boundary vector is not sphere-admissible"

    if not report.admissible:
        return SweepRow(
            h,
            "inadmissible",
            report.failing_conditions(),
            anomaly=anomaly,
            wall_ms=(time.perf_counter() - started) * 1000,
        )

    trace_text = ""
    try:
        result = realize(h)
        trace_text = dump_trace(result.trace)
        poset = parse_poset(dump_poset(result.poset))
        certified = certify_poset(poset, parse_trace(trace_text), h)
        verdict = "certified" if certified.ok else "FAILED"
        detail = "" if certified.ok else "; ".join(certified.failed()) + "\n" + trace_text
        return SweepRow(
            h,
            verdict,
            facets=poset.facet_count(),
            elements=len(poset.elements),
            case=result.case,
            anomaly=anomaly,
            detail=detail,
            wall_ms=(time.perf_counter() - started) * 1000,
        )
    except (RealizationError, InadmissibleError, PosetError, HVectorError, TraceError) as exc:
        return SweepRow(
            h,
            "FAILED",
            anomaly=anomaly,
            detail=f"{type(exc).__name__}: {exc}\n{trace_text}",
            wall_ms=(time.perf_counter() - started) * 1000,
        )


@dataclass(frozen=True)
class SweepReport:
    d_max: int
    facet_max: int
    rows: Tuple[SweepRow, ...]
    width_checked: int = 0
    width_mismatches: Tuple[HVector, ...] = ()

    def failures(self) -> List[SweepRow]:
        return [r for r in self.rows if r.verdict == "FAILED"]

    def anomalies(self) -> List[SweepRow]:
        return [r for r in self.rows if r.anomaly]

    def condition_counts(self) -> Dict[str, int]:
        counts = {label: 0 for label in CONDITION_ORDER}
        for row in self.rows:
            for label in row.failing:
                counts[label] += 1
        return counts

    def lone_counts(self) -> Dict[str, int]:
        """Vectors rejected by exactly one condition, per condition."""
        counts = {label: 0 for label in CONDITION_ORDER}
        for row in self.rows:
            if len(row.failing) == 1:
                counts[row.failing[0]] += 1
        return counts

    @property
    def ok(self) -> bool:
        return not self.failures() and not self.anomalies() and not self.width_mismatches

    def to_tsv(self) -> str:
        header = "h\tverdict\tfailing\tfacets\telements\twall_ms"
        notes = [f"# {line}" for entry in self.summary_lines() for line in entry.splitlines()]
        return "\n".join([header] + [row.tsv() for row in self.rows] + notes) + "\n"

    def summary_lines(self) -> List[str]:
        certified = sum(1 for r in self.rows if r.verdict == "certified")
        admissible = certified + len(self.failures())
        lines = [
            f"sweep d <= {self.d_max}, facets <= {self.facet_max}: {len(self.rows)} vectors",
            f"admissible: {admissible}, certified: {certified}, failed: {len(self.failures())}",
        ]
        counts, lone = self.condition_counts(), self.lone_counts()
        for label in CONDITION_ORDER:
            note = "" if counts[label] else " (no witness in range)"
            lines.append(f"  condition {label}: {counts[label]} failing, {lone[label]} alone{note}")
        lines.append(f"width check: {self.width_checked} vectors, {len(self.width_mismatches)} mismatches")
        for row in self.anomalies():
            lines.append(f"anomaly ({row.h}): {row.anomaly}")
        for row in self.failures():
            lines.append(f"FAILED ({row.h}): {row.detail}")
        return lines


def cross_check_small(
    d_max: int,
    facet_max: int,
    workers: int = 1,
    progress: bool = False,
    width_entry_max: int = 4,
) -> SweepReport:
    if d_max < 1 or facet_max < 1:
        raise ValueError("sweep bounds must be positive")
    candidates: Sequence[HVector] = [
        h for d in range(1, d_max + 1) for h in ball_candidates(d, facet_max, top_max=1)
    ]
    log.info("sweeping %d candidate vectors with %d worker(s)", len(candidates), workers)

    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            rows = list(
                tqdm(
                    pool.imap(sweep_one, candidates, chunksize=8),
                    total=len(candidates),
                    desc="sweep",
                    disable=not progress,
                )
            )
    else:
        rows = [sweep_one(h) for h in tqdm(candidates, desc="sweep", disable=not progress)]

    rows.sort(key=lambda r: r.h.entries)
    checked, mismatches = width_agreement(d_max, width_entry_max)
    report = SweepReport(d_max, facet_max, tuple(rows), checked, tuple(mismatches))
    for row in report.failures():
        log.warning("admissible vector (%s) did not certify: %s", row.h, row.detail.splitlines()[0])
    return report
