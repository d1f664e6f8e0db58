"""Exact arithmetic on h-vectors of simplicial cell balls and spheres."""

import enum
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, List, Optional, Sequence, Tuple

log = logging.getLogger(__name__)


class HVectorError(ValueError):
    pass


@dataclass(frozen=True)
class HVector:
    entries: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise HVectorError("an h-vector needs at least one entry")
        for value in self.entries:
            # bool is an int subclass; reject it along with floats.
            if isinstance(value, bool) or not isinstance(value, int):
                raise HVectorError(f"h-vector entries must be integers, got {value!r}")

    @classmethod
    def of(cls, values: Iterable[int]) -> "HVector":
        return cls(tuple(values))

    @classmethod
    def unit(cls, d: int, i: int) -> "HVector":
        return cls(tuple(1 if k == i else 0 for k in range(d + 1)))

    @classmethod
    def zero(cls, d: int) -> "HVector":
        return cls((0,) * (d + 1))

    @property
    def d(self) -> int:
        return len(self.entries) - 1

    def __getitem__(self, i: int) -> int:
        return self.entries[i]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __add__(self, other: "HVector") -> "HVector":
        self._same_length(other)
        return HVector(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "HVector") -> "HVector":
        self._same_length(other)
        return HVector(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def _same_length(self, other: "HVector") -> None:
        if len(self.entries) != len(other.entries):
            raise HVectorError(f"length mismatch: {len(self.entries)} vs {len(other.entries)}")

    def total(self) -> int:
        return sum(self.entries)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.entries)

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.entries)

    def plus_unit(self, i: int, times: int = 1) -> "HVector":
        values = list(self.entries)
        values[i] += times
        return HVector(tuple(values))

    def __str__(self) -> str:
        return format_vector(self.entries)


def format_vector(values: Iterable[int]) -> str:
    return ",".join(str(v) for v in values)


def parse_hvector(text: str) -> HVector:
    """Parse the comma-separated form used on the command line and in files."""
    parts = [part.strip() for part in (text or "").strip().split(",")]
    if not parts or any(part == "" for part in parts):
        raise HVectorError(f"malformed h-vector {text!r}")
    try:
        return HVector(tuple(int(part) for part in parts))
    except ValueError:
        raise HVectorError(f"malformed h-vector {text!r}")


# --------------------------------------------------------------------------- #
# h <-> f TRANSFORM
# --------------------------------------------------------------------------- #

def h_from_f(f: Sequence[int]) -> HVector:
    """f = (f_{-1}, f_0, ..., f_{d-1}) to h = (h_0, ..., h_d).

    Uses sum f_{i-1} (t-1)^{d-i} = sum h_i t^{d-i}, the convention under which the
    Boolean algebra has h = (1, 0, ..., 0).
    """
    d = len(f) - 1
    return HVector(
        tuple(
            sum((-1) ** (k - i) * comb(d - i, k - i) * f[i] for i in range(k + 1))
            for k in range(d + 1)
        )
    )


def f_from_h(h: HVector) -> Tuple[int, ...]:
    d = h.d
    return tuple(sum(comb(d - i, j - i) * h[i] for i in range(j + 1)) for j in range(d + 1))


def shelling_h(d: int, ks: Sequence[int]) -> HVector:
    """h-vector of a rank-d poset from the k-values of a shelling.

    h_0 counts the first facet; h_i counts the later facets meeting their
    predecessors in a copy of Delta_d(i).
    """
    values = [0] * (d + 1)
    values[0] = 1
    for k in ks:
        if not 1 <= k <= d:
            raise HVectorError(f"shelling value {k} outside [1, {d}]")
        values[k] += 1
    return HVector(tuple(values))


def boundary_h(h: HVector) -> HVector:
    """The boundary operator: h-vector of the boundary sphere of a ball with h-vector h."""
    d = h.d
    if d < 1:
        raise HVectorError("the boundary operator needs d >= 1")
    prefix = _prefix_sums(h.entries)
    suffix = _suffix_sums(h.entries)
    return HVector(tuple(prefix[i] - suffix[d - i] for i in range(d)))


def _prefix_sums(values: Sequence[int]) -> List[int]:
    out: List[int] = []
    running = 0
    for v in values:
        running += v
        out.append(running)
    return out


def _suffix_sums(values: Sequence[int]) -> List[int]:
    # out[t] = values[t] + ... + values[-1]; out[len] = 0
    out = [0] * (len(values) + 1)
    for t in range(len(values) - 1, -1, -1):
        out[t] = out[t + 1] + values[t]
    return out


# --------------------------------------------------------------------------- #
# CONDITION REPORTS
# --------------------------------------------------------------------------- #

class Target(str, enum.Enum):
    SPHERE = "sphere"
    BALL = "ball"
    KOLINS = "kolins"


CONDITION_ORDER = ("(1)", "(2)", "(3)", "(4)", "(5)", "(6)", "(7)")


@dataclass(frozen=True)
class ConditionFailure:
    condition: str
    witness: Tuple[Tuple[str, int], ...]
    message: str

    def describe(self) -> str:
        where = ", ".join(f"{name}={value}" for name, value in self.witness)
        return f"{self.condition} {self.message}" + (f" [{where}]" if where else "")


@dataclass(frozen=True)
class ConditionReport:
    target: Target
    h: HVector
    failures: Tuple[ConditionFailure, ...] = field(default=())

    @property
    def admissible(self) -> bool:
        return not self.failures

    @property
    def verdict(self) -> str:
        return "admissible" if self.admissible else "inadmissible"

    def failing_conditions(self) -> Tuple[str, ...]:
        seen = {failure.condition for failure in self.failures}
        return tuple(label for label in CONDITION_ORDER if label in seen)

    def first_failure(self) -> Optional[ConditionFailure]:
        labels = self.failing_conditions()
        if not labels:
            return None
        return next(f for f in self.failures if f.condition == labels[0])

    def render(self) -> List[str]:
        lines = [f"{self.target.value} check for h = ({self.h}): {self.verdict}"]
        first = self.first_failure()
        if first is not None:
            lines.append(f"first failing condition: {first.condition}")
            for failure in self.failures:
                lines.append(f"  {failure.describe()}")
        return lines


def _failure(condition: str, message: str, **witness: int) -> ConditionFailure:
    return ConditionFailure(condition, tuple(witness.items()), message)


def check_sphere(h: HVector) -> ConditionReport:
    """Conditions (1)-(3) for h-vectors of simplicial cell spheres."""
    d = h.d
    failures: List[ConditionFailure] = []

    if h[0] != 1 or h[d] != 1:
        failures.append(_failure("(1)", "h_0 = h_d = 1 fails", d=d))
    for i in range(1, d):
        if h[i] != h[d - i]:
            failures.append(_failure("(1)", "h_i = h_{d-i} fails", i=i))
            break

    for i in range(d + 1):
        if h[i] < 0:
            failures.append(_failure("(2)", "h_i >= 0 fails", i=i))

    if h.total() % 2:
        for n in range(1, d):
            if h[n] == 0:
                failures.append(_failure("(3)", "h_n = 0 but the sum is odd", n=n))
                break

    return ConditionReport(Target.SPHERE, h, tuple(failures))


def check_ball(h: HVector) -> ConditionReport:
    """All seven ball conditions, evaluated literally and without short-circuit."""
    d = h.d
    failures: List[ConditionFailure] = []
    odd = h.total() % 2 == 1

    if h[0] != 1:
        failures.append(_failure("(1)", "h_0 = 1 fails"))
    if h[d] != 0 or d == 0:
        failures.append(_failure("(1)", "h_d = 0 fails", d=d))
    for k in range(1, d):
        if h[k] < 0:
            failures.append(_failure("(1)", "h_k >= 0 fails", k=k))
    if d == 0:
        return ConditionReport(Target.BALL, h, tuple(failures))

    dh = boundary_h(h)
    for k in range(d):
        if dh[k] < 0:
            failures.append(_failure("(2)", "boundary entry is negative", k=k))

    zeros = [n for n in range(1, d - 1) if dh[n] == 0]

    if d % 2 == 1 and odd:
        for n in zeros:
            failures.append(_failure("(3)", "d odd, boundary zero, odd sum", n=n))

    for n in zeros:
        for k in range(n, d):
            window = sum(h[t] for t in range(k - n + 1, k + 1))
            if window < dh[k]:
                failures.append(_failure("(4)", "window sum below boundary entry", n=n, k=k))
                break

    # (5)-(7) follow from the others when d is odd.
    even_d = d % 2 == 0

    if odd and even_d:
        for i in range(1, d):
            if dh[i] != 0:
                continue
            for j in range(1, d - i + 1):
                if h[j] == 0:
                    failures.append(_failure("(5)", "boundary zero and h zero with i + j <= d, odd sum", i=i, j=j))

    if odd and even_d:
        for n in range(1, d):
            if 2 * n >= d or dh[n] != 0:
                continue
            for ell in range(n, d - n + 1):
                window = sum(h[t] for t in range(ell - n + 1, ell + 1))
                if window - dh[ell] < n:
                    failures.append(_failure("(6)", "short window with odd sum", n=n, l=ell))
                    break

    if odd and even_d:
        for i in range(1, d):
            if 2 * i >= d or dh[i] != 0:
                continue
            for j in range(d - i + 1, d):
                if h[j] != 0:
                    continue
                for ell in range(0, d - j + 1):
                    if dh[ell] <= ell:
                        failures.append(_failure("(7)", "small boundary entry with odd sum", i=i, j=j, l=ell))
                        break

    report = ConditionReport(Target.BALL, h, tuple(failures))
    log.debug("check_ball %s -> %s %s", h, report.verdict, report.failing_conditions())
    return report


def check_kolins(h: HVector) -> ConditionReport:
    """The older three-condition necessary test for balls.

    Written independently of check_ball so the two can be compared; condition (3)
    uses the parity of the sum of h.
    """
    d = h.d
    failures: List[ConditionFailure] = []
    values = h.entries
    if d == 0 or values[0] != 1 or values[-1] != 0 or min(values[1:-1], default=0) < 0:
        failures.append(_failure("(1)", "ends or signs wrong"))
    if d == 0:
        return ConditionReport(Target.KOLINS, h, tuple(failures))

    low, high = 0, 0
    dh: List[int] = []
    for i in range(d):
        low += values[i]
        high += values[d - i]
        dh.append(low - high)
    if min(dh) < 0:
        failures.append(_failure("(2)", "boundary vector has a negative entry", k=dh.index(min(dh))))
    if d % 2 == 1 and 0 in dh[1:d - 1] and sum(values) % 2 == 1:
        failures.append(_failure("(3)", "odd d with an interior boundary zero and odd sum", n=dh.index(0, 1)))
    return ConditionReport(Target.KOLINS, h, tuple(failures))


# --------------------------------------------------------------------------- #
# PAIR DECOMPOSITION, INIT, WIDTH
# --------------------------------------------------------------------------- #

def _sorted_indices(h: HVector) -> List[int]:
    if not h.is_nonnegative():
        raise HVectorError(f"pair decomposition needs a nonnegative vector, got ({h})")
    if h.total() % 2:
        raise HVectorError(f"pair decomposition needs an even sum, got ({h})")
    indices: List[int] = []
    for i, count in enumerate(h.entries):
        indices.extend([i] * count)
    return indices


def pairing_decomposition(h: HVector) -> List[Tuple[int, int]]:
    """Outer-to-inner pairs of the sorted index expansion of h."""
    indices = _sorted_indices(h)
    a = len(indices)
    return [(indices[k], indices[a - 1 - k]) for k in range(a // 2)]


def init_number(h: HVector) -> int:
    indices = _sorted_indices(h)
    if not indices:
        return 0
    return indices[len(indices) // 2 - 1]


def width(h: HVector) -> int:
    pairs = pairing_decomposition(h)
    if not pairs:
        return h.d
    return min(p + q for p, q in pairs)


def width_formula(h: HVector) -> int:
    """Largest l with h_0 + ... + h_k <= h_d + ... + h_{l-k} for all k."""
    _sorted_indices(h)
    d = h.d
    if h.is_zero():
        return d
    prefix = _prefix_sums(h.entries)
    suffix = _suffix_sums(h.entries)
    total = suffix[0]

    def tail(t: int) -> int:
        if t <= 0:
            return total
        if t > d:
            return 0
        return suffix[t]

    best = 0
    for ell in range(0, 2 * d + 1):
        if all(prefix[k] <= tail(ell - k) for k in range(d + 1)):
            best = ell
        else:
            break
    return best


def nonnegative_even_vectors(d: int, entry_max: int) -> Iterable[HVector]:
    """Every nonnegative even-sum vector of length d+1 with entries <= entry_max."""
    def extend(prefix: Tuple[int, ...]) -> Iterable[Tuple[int, ...]]:
        if len(prefix) == d + 1:
            yield prefix
            return
        for v in range(entry_max + 1):
            yield from extend(prefix + (v,))

    for values in extend(()):
        if sum(values) % 2 == 0:
            yield HVector(values)


def ball_candidates(d: int, facet_max: int, top_max: int = 0) -> Iterable[HVector]:
    """Vectors with h_0 = 1, 0 <= h_d <= top_max, nonnegative entries and sum <= facet_max.

    top_max = 0 gives exactly the vectors a ball could have; top_max = 1 adds the
    near misses that only condition (1) rejects.
    """
    def fill(prefix: Tuple[int, ...], slots: int, budget: int) -> Iterable[Tuple[int, ...]]:
        if len(prefix) == slots:
            yield prefix
            return
        for v in range(budget + 1):
            yield from fill(prefix + (v,), slots, budget - v)

    for top in range(top_max + 1):
        budget = facet_max - 1 - top
        if budget < 0:
            break
        for middle in fill((), d - 1, budget):
            yield HVector((1,) + middle + (top,))


def width_agreement(d_max: int, entry_max: int) -> Tuple[int, List[HVector]]:
    """Compare width with width_formula on every small vector; return (count, mismatches)."""
    checked = 0
    mismatches: List[HVector] = []
    for d in range(1, d_max + 1):
        for h in nonnegative_even_vectors(d, entry_max):
            checked += 1
            if width(h) != width_formula(h):
                mismatches.append(h)
    if mismatches:
        log.warning("width disagrees with width_formula on %d vectors", len(mismatches))
    return checked, mismatches
