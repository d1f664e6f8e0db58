"""Constructive realization of ball h-vectors by gluing Boolean blocks.

Every construction carries explicit subset labels for the Delta-shaped ideal
it promises to leave in the boundary (a window), and records each generator and
gluing in a ConstructionTrace so the result can be replayed independently.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from hcalc import (
    ConditionReport,
    HVector,
    boundary_h,
    check_ball,
    init_number,
    pairing_decomposition,
    shelling_h,
    width,
)
from poset_core import (
    GlueMap,
    PosetError,
    SimplicialPoset,
    boolean,
    boundary,
    delta,
    delta_members,
    h_vector,
    nonempty_subsets,
    pushout,
    subset_complex,
    verify_shelling,
)

log = logging.getLogger(__name__)


class RealizationError(ValueError):
    """A construction step contradicted one of its own guarantees."""

    def __init__(self, claim: str, message: str) -> None:
        super().__init__(f"{claim}: {message}")
        self.claim = claim


class InadmissibleError(ValueError):
    def __init__(self, report: ConditionReport) -> None:
        first = report.first_failure()
        super().__init__(f"h = ({report.h}) is not a ball h-vector: {first.describe() if first else ''}")
        self.report = report


def _require(ok: bool, claim: str, message: str) -> None:
    if not ok:
        raise RealizationError(claim, message)


# --------------------------------------------------------------------------- #
# TRACES
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class TraceStep:
    op: str
    # (d,) for boolean, (d, k) for delta, (left step, right step) for glue
    params: Tuple[int, ...]
    pairs: Tuple[Tuple[int, int], ...] = ()
    # facet order of the glued ideal, in ids of the right operand
    shelling: Tuple[int, ...] = ()

    def shifted(self, offset: int) -> "TraceStep":
        if self.op != "glue":
            return self
        left, right = self.params
        return TraceStep(self.op, (left + offset, right + offset), self.pairs, self.shelling)


@dataclass(frozen=True)
class ConstructionTrace:
    steps: Tuple[TraceStep, ...]
    result: int

    @classmethod
    def generator(cls, op: str, *params: int) -> "ConstructionTrace":
        return cls((TraceStep(op, tuple(params)),), 0)

    def glue(
        self,
        other: "ConstructionTrace",
        pairs: Iterable[Tuple[int, int]],
        shelling: Sequence[int] = (),
    ) -> "ConstructionTrace":
        """Append other's steps and one glue of self's result (left) with other's (right)."""
        offset = len(self.steps)
        step = TraceStep(
            "glue",
            (self.result, other.result + offset),
            tuple(pairs),
            tuple(shelling),
        )
        steps = self.steps + tuple(s.shifted(offset) for s in other.steps) + (step,)
        return ConstructionTrace(steps, len(steps) - 1)

    def glue_count(self) -> int:
        return sum(1 for s in self.steps if s.op == "glue")


# --------------------------------------------------------------------------- #
# WINDOWS
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Window:
    d: int
    k: int
    label: Dict[FrozenSet[int], int] = field(compare=False)

    def ids(self) -> FrozenSet[int]:
        return frozenset(self.label.values())

    def facet_ids(self) -> FrozenSet[int]:
        return frozenset(v for F, v in self.label.items() if len(F) == self.d - 1)

    def restrict(self, k: int) -> "Window":
        """The sub-window Delta_d(k) for k <= self.k."""
        if not 1 <= k <= self.k:
            raise RealizationError("window", f"cannot shrink a Delta_{self.d}({self.k}) window to k={k}")
        return Window(self.d, k, {F: self.label[F] for F in delta_members(self.d, k)})


def check_window(P: SimplicialPoset, window: Window) -> None:
    """Assert the labels embed Delta_d(k) as an order ideal of P's boundary."""
    expected = set(delta_members(window.d, window.k))
    _require(set(window.label) == expected, "window", f"labels do not cover Delta_{window.d}({window.k})")
    image = window.ids()
    _require(len(image) == len(window.label), "window", "labels are not injective")
    for F, x in window.label.items():
        _require(x in P.by_id, "window", f"label of {sorted(F)} is not an element")
        _require(P.rank_of(x) == len(F), "window", f"label of {sorted(F)} has rank {P.rank_of(x)}")
        below = sorted(window.label[F - {v}] for v in F) if len(F) > 1 else []
        _require(sorted(P.covers_of(x)) == below, "window", f"label of {sorted(F)} breaks the face order")
    members = boundary(P).members
    outside = sorted(image - members)
    _require(not outside, "window in boundary", f"elements {outside[:5]} are interior")


@dataclass(frozen=True)
class WindowedBall:
    poset: SimplicialPoset
    window: Window
    trace: ConstructionTrace

    @property
    def d(self) -> int:
        return self.poset.d


@dataclass(frozen=True)
class TwoWindowBall:
    poset: SimplicialPoset
    window1: Window
    window2: Window
    trace: ConstructionTrace


def seed_ball(d: int) -> WindowedBall:
    if d < 1:
        raise RealizationError("seed", f"needs d >= 1, got {d}")
    A = boolean(d)
    label = {F: A.labels[F] for F in delta_members(d, d)}
    return WindowedBall(A, Window(d, d, label), ConstructionTrace.generator("boolean", d))


def _glue_boolean(
    poset: SimplicialPoset,
    trace: ConstructionTrace,
    shared: Iterable[FrozenSet[int]],
    host_label: Dict[FrozenSet[int], int],
) -> Tuple[SimplicialPoset, ConstructionTrace, Dict[FrozenSet[int], int]]:
    """Glue a fresh Boolean algebra along {host_label[F] : F in shared}.

    Returns the new poset, its trace, and the Boolean's subset labels as ids
    of the new poset.
    """
    d = poset.d
    A = boolean(d)
    pairs = [(host_label[F], A.labels[F]) for F in shared]
    glued = pushout(poset, A, GlueMap.of(pairs))
    trace = trace.glue(ConstructionTrace.generator("boolean", d), pairs)
    return glued.poset, trace, {F: glued.right_ids[i] for F, i in A.labels.items()}


def glue_step(W: WindowedBall, i: int, j: int) -> WindowedBall:
    """Add e_i + e_j to the h-vector with two Boolean gluings.

    The window shrinks from Delta_d(m) to Delta_d(min(m, i + j)).
    """
    d, m = W.d, W.window.k
    if not (1 <= i <= m <= d and 1 <= j <= d - i):
        raise RealizationError("glue step", f"need 1 <= i <= m <= d and 1 <= j <= d - i, got i={i}, j={j}, m={m}, d={d}")

    before = h_vector(W.poset)
    head = frozenset(range(1, i + 1))
    block = frozenset(range(i + 1, i + j + 1))
    subsets = list(nonempty_subsets(range(1, d + 1)))

    poset, trace, a_label = _glue_boolean(W.poset, W.trace, (F for F in subsets if not head <= F), W.window.label)
    poset, trace, b_label = _glue_boolean(poset, trace, (F for F in subsets if not block <= F), a_label)

    ell = min(m, i + j)
    label = {F: (b_label[F] if not head <= F else W.window.label[F]) for F in delta_members(d, ell)}
    out = WindowedBall(poset, Window(d, ell, label), trace)
    check_window(poset, out.window)

    after = h_vector(poset)
    _require(after == before + HVector.unit(d, i) + HVector.unit(d, j), "h additivity", f"({before}) -> ({after}) with i={i}, j={j}")
    log.debug("glue_step i=%d j=%d: window %d -> %d, %d elements", i, j, m, ell, len(poset.elements))
    return out


def realize_even(W: WindowedBall, h: HVector) -> WindowedBall:
    """Add an even-sum vector h with h_0 = 0 to W's h-vector, one glue_step per pair."""
    d = W.d
    if h.d != d:
        raise RealizationError("even realization", f"length of ({h}) does not match d={d}")
    if not h.is_nonnegative():
        raise RealizationError("even realization", f"({h}) has a negative entry")
    if h[0] != 0:
        raise RealizationError("even realization", f"({h}) needs h_0 = 0")
    if h.total() % 2:
        raise RealizationError("even realization", f"({h}) has an odd sum")
    if not boundary_h(h).is_nonnegative():
        raise RealizationError("even realization", f"boundary of ({h}) has a negative entry")
    if not h.is_zero() and W.window.k < init_number(h):
        raise RealizationError("even realization", f"window k={W.window.k} is below init number {init_number(h)}")

    start = h_vector(W.poset)
    current = W
    for i, j in pairing_decomposition(h):
        current = glue_step(current, i, j)

    expected_k = min(W.window.k, width(h))
    _require(current.window.k == expected_k, "even realization", f"window k={current.window.k}, expected {expected_k}")
    _require(h_vector(current.poset) == start + h, "even realization", f"h-vector is not ({start + h})")
    return current


def cap(W: WindowedBall, k: int) -> Tuple[SimplicialPoset, ConstructionTrace]:
    """Glue one Boolean algebra along the Delta_d(k) part of the window; adds e_k."""
    if not 1 <= k <= W.window.k:
        raise RealizationError("cap", f"window Delta_{W.d}({W.window.k}) has no Delta_{W.d}({k})")
    before = h_vector(W.poset)
    poset, trace, _ = _glue_boolean(W.poset, W.trace, delta_members(W.d, k), W.window.label)
    _require(h_vector(poset) == before + HVector.unit(W.d, k), "cap", f"h-vector is not ({before.plus_unit(k)})")
    return poset, trace


# --------------------------------------------------------------------------- #
# THE SPECIAL TWO-WINDOW BALL
# --------------------------------------------------------------------------- #

def _check_special_hypotheses(d: int, n: int, m: int, h: HVector) -> None:
    claim = "special-ball hypotheses"
    _require(h.d == d, claim, f"({h}) has the wrong length for d={d}")
    _require(1 <= n and 2 * n <= d, claim, f"need 1 <= n <= d/2, got n={n}, d={d}")
    _require(d - n <= m < d, claim, f"need d - n <= m < d, got m={m}")
    _require(h.total() == d, claim, f"sum of ({h}) is not {d}")
    _require(all(h[i] == 1 for i in range(d - n)), claim, f"({h}) is not 1 below index {d - n}")
    _require(all(h[i] > 0 for i in range(d - n, m + 1)), claim, f"({h}) has a zero in [{d - n}, {m}]")
    _require(all(h[i] == 0 for i in range(m + 1, d + 1)), claim, f"({h}) is nonzero above {m}")


def _alphas(d: int, n: int, h: HVector) -> List[int]:
    # alphas[l - 1] = h_{d-n+l-1} + ... + h_d for l = 1..n+1
    return [sum(h[t] for t in range(d - n + ell - 1, d + 1)) for ell in range(1, n + 2)]


def build_D(d: int, n: int, m: int, h: HVector) -> List[Tuple[int, int]]:
    """Pairs {p, q} with p in [n], q in {n+1..d} whose complements shell the gluing ball."""
    _check_special_hypotheses(d, n, m, h)
    alpha = _alphas(d, n, h)
    _require(alpha[0] == n, "special-ball hypotheses", f"alpha_1 = {alpha[0]}, expected {n}")
    for ell, a in enumerate(alpha, start=1):
        _require(a <= n - (ell - 1), "special-ball hypotheses", f"alpha_{ell} = {a} is too large")

    D = {(p, q) for p in range(1, n + 1) for q in range(n + 1, d + 1) if p + q <= d}
    for ell in range(1, m - (d - n) + 2):
        for p in range(ell, ell + alpha[ell - 1]):
            D.add((p, d + ell - p))
    return sorted(D)


@dataclass(frozen=True)
class OmegaShelling:
    complex: SimplicialPoset
    facets: Tuple[FrozenSet[int], ...]
    h: HVector


def build_omega(d: int, n: int, m: int, h: HVector) -> OmegaShelling:
    D = build_D(d, n, m, h)
    ground = frozenset(range(1, d + 2))
    facets = tuple(ground - {p, q} for p, q in D)
    faces = {frozenset(s) for F in facets for s in nonempty_subsets(sorted(F))}
    omega = subset_complex(d - 1, faces)

    try:
        ks = verify_shelling(omega, [omega.labels[F] for F in facets])
    except PosetError as exc:
        raise RealizationError("omega shelling", str(exc))
    for (p, q), k in zip(D[1:], ks):
        _require(k == p + q - n - 2, "omega shelling", f"facet {{{p},{q}}} meets its predecessors in Delta({k})")

    h_omega = shelling_h(d - 1, ks)
    alpha = _alphas(d, n, h)
    for i in range(d):
        if i <= n - 1:
            closed = i + 1
        elif i <= d - n - 1:
            closed = n
        else:
            closed = alpha[i - (d - n) + 1]
        _require(h_omega[i] == closed, "omega h-vector", f"h_{i} = {h_omega[i]}, closed form gives {closed}")

    g = [h[i] - (1 if i < n else 0) - (1 if i < d - n else 0) for i in range(d + 1)]
    padded = (0,) + tuple(h_omega) + (0,)
    for i in range(d + 1):
        _require(padded[i] - padded[i + 1] == g[i], "omega g-identity", f"fails at i={i}")
    return OmegaShelling(omega, facets, h_omega)


def _swap_blocks(d: int, n: int) -> Dict[int, int]:
    # {n+1..d} -> [d-n], [n] -> {d-n+1..d}, d+1 fixed
    perm = {x: x - n for x in range(n + 1, d + 1)}
    perm.update({x: x + (d - n) for x in range(1, n + 1)})
    perm[d + 1] = d + 1
    return perm


def special_ball(d: int, n: int, h: HVector) -> TwoWindowBall:
    """A ball with h-vector h whose boundary holds facet-disjoint Delta_d(n) and Delta_d(d-n)."""
    zeros = [i for i in range(d + 1) if h[i] == 0] if h.d == d else []
    m = (zeros[0] if zeros else d + 1) - 1
    omega = build_omega(d, n, m, h)

    A = delta(d + 1, n)
    B = delta(d + 1, d - n)
    _require(h_vector(A) == HVector.of(1 if i < n else 0 for i in range(d + 1)), "special ball", "h(A) is wrong")
    perm = _swap_blocks(d, n)

    def b_id(F: FrozenSet[int]) -> int:
        return B.labels[frozenset(perm[x] for x in F)]

    faces = sorted(omega.complex.labels, key=lambda F: (len(F), sorted(F)))
    pairs = [(A.labels[F], b_id(F)) for F in faces]
    shelling = [b_id(F) for F in omega.facets]
    glued = pushout(A, B, GlueMap.of(pairs))
    poset = glued.poset
    trace = ConstructionTrace.generator("delta", d + 1, n).glue(
        ConstructionTrace.generator("delta", d + 1, d - n), pairs, shelling
    )
    _require(h_vector(poset) == h, "special ball", f"h-vector is ({h_vector(poset)}), expected ({h})")

    window1 = Window(d, n, {G: A.labels[G] for G in delta_members(d, n)})
    # B's labels restricted to [d] already read G through the block swap
    window2 = Window(d, d - n, {G: glued.right_ids[B.labels[G]] for G in delta_members(d, d - n)})
    check_window(poset, window1)
    check_window(poset, window2)
    common = window1.facet_ids() & window2.facet_ids()
    _require(not common, "special ball", f"windows share facets {sorted(common)}")
    log.debug("special_ball d=%d n=%d h=(%s): %d elements", d, n, h, len(poset.elements))
    return TwoWindowBall(poset, window1, window2, trace)


def s_sequence(dh: Sequence[int], d: int, m: int, n: int) -> Tuple[int, ...]:
    """Indices j in [d-m, n] where dh_j drops strictly below every earlier value (starting from d-m)."""
    if not (0 <= d - m <= n < len(dh)) or dh[n] != 0:
        raise RealizationError("s-sequence", f"needs d - m <= n and a boundary zero at n={n}")
    if d - m - 1 >= 0 and dh[d - m - 1] < d - m:
        raise RealizationError("s-sequence", f"boundary entry {d - m - 1} is below {d - m}")
    threshold = d - m
    out: List[int] = []
    for j in range(d - m, n + 1):
        if dh[j] < threshold:
            out.append(j)
            threshold = dh[j]
    _require(bool(out) and out[-1] == n, "s-sequence", f"scan ended at {out[-1:]} instead of {n}")
    return tuple(out)


# --------------------------------------------------------------------------- #
# TOP LEVEL
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class Realization:
    poset: SimplicialPoset
    trace: ConstructionTrace
    case: int
    n: Optional[int] = None
    m: Optional[int] = None
    s: Tuple[int, ...] = ()
    gamma: Optional[HVector] = None
    delta: Optional[HVector] = None
    delta_bar: Optional[HVector] = None
    h_prime: Optional[HVector] = None
    h_double_prime: Optional[HVector] = None
    middle: Optional[int] = None


def _case_one(h: HVector) -> Realization:
    d = h.d
    rest = h - HVector.unit(d, 0)
    if h.total() % 2:
        W = realize_even(seed_ball(d), rest)
        return Realization(W.poset, W.trace, case=1, h_prime=rest)
    indices = [i for i, count in enumerate(rest) for _ in range(count)]
    middle = indices[(len(indices) + 1) // 2 - 1]
    h_prime = rest - HVector.unit(d, middle)
    W = realize_even(seed_ball(d), h_prime)
    poset, trace = cap(W, middle)
    return Realization(poset, trace, case=1, h_prime=h_prime, middle=middle)


def _case_two(h: HVector, dh: HVector) -> Realization:
    d = h.d
    n = next(k for k in range(d) if dh[k] == 0)
    h_prime = h - HVector.unit(d, 0) - HVector.unit(d, d - n)
    _require(h_prime.is_nonnegative(), "case 2", f"h' = ({h_prime}) has a negative entry")
    _require(width(h_prime) >= d - n, "case 2 width", f"width({h_prime}) < {d - n}")
    W = realize_even(seed_ball(d), h_prime)
    poset, trace = cap(W, d - n)
    return Realization(poset, trace, case=2, n=n, h_prime=h_prime)


def _case_three(h: HVector, dh: HVector) -> Realization:
    d = h.d
    n = next(k for k in range(d) if dh[k] == 0)
    m = next(k for k in range(d + 1) if h[k] == 0) - 1
    s = s_sequence(dh.entries, d, m, n)

    gamma_values = [0] * (d + 1)
    gamma_values[d - s[0]] += d - m - dh[s[0]]
    for previous, current in zip(s, s[1:]):
        gamma_values[d - current] += dh[previous] - dh[current]
    gamma = HVector(tuple(gamma_values))
    delta_vec = HVector.of(1 if i <= m else 0 for i in range(d + 1)) + gamma
    _require(delta_vec.total() == d + 1, "delta sum", f"sum of ({delta_vec}) is not {d + 1}")
    _require(delta_vec[d - n] >= 2, "delta entry", f"delta_{d - n} = {delta_vec[d - n]} is below 2")
    delta_bar = delta_vec - HVector.unit(d, d - n)

    h_prime = HVector.of(h[k] - 1 if n + 1 <= k <= d - n - 1 else 0 for k in range(d + 1))

    def second(k: int) -> int:
        if k <= n or d - n <= k <= m:
            return h[k] - 1
        if k <= d - n - 1:
            return 0
        return h[k]

    h_second = HVector.of(second(k) for k in range(d + 1)) - gamma

    _require(h == h_prime + h_second + delta_bar + HVector.unit(d, d - n), "split sums to h", f"({h_prime}) + ({h_second}) + ({delta_bar}) + e_{d - n}")
    _require(h_prime.is_nonnegative() and h_second.is_nonnegative(), "split nonnegative", f"h' = ({h_prime}), h'' = ({h_second})")
    _require(h_prime.total() % 2 == 0 and h_second.total() % 2 == 0, "split even", f"h' = ({h_prime}), h'' = ({h_second})")
    dh_prime, dh_second = boundary_h(h_prime), boundary_h(h_second)
    _require(
        dh_prime.is_nonnegative() and dh_second.is_nonnegative() and dh_second[n] == 0,
        "split boundaries",
        f"boundary of h' = ({dh_prime}), of h'' = ({dh_second})",
    )
    _require(width(h_prime) >= d - n, "split width", f"width({h_prime}) < {d - n}")

    P = special_ball(d, n, delta_bar)
    Q = realize_even(seed_ball(d), h_prime)
    shared = Q.window.restrict(d - n)
    pairs = [(shared.label[G], P.window2.label[G]) for G in delta_members(d, d - n)]
    glued = pushout(Q.poset, P.poset, GlueMap.of(pairs))
    window1 = Window(d, n, {G: glued.right_ids[x] for G, x in P.window1.label.items()})
    R = WindowedBall(glued.poset, window1, Q.trace.glue(P.trace, pairs))
    check_window(R.poset, window1)
    expected = h_prime + delta_bar + HVector.unit(d, d - n)
    _require(h_vector(R.poset) == expected, "joined ball", f"h-vector is ({h_vector(R.poset)}), expected ({expected})")

    final = realize_even(R, h_second)
    return Realization(
        final.poset,
        final.trace,
        case=3,
        n=n,
        m=m,
        s=s,
        gamma=gamma,
        delta=delta_vec,
        delta_bar=delta_bar,
        h_prime=h_prime,
        h_double_prime=h_second,
    )


def realize(h: HVector) -> Realization:
    """Build a simplicial cell ball with h-vector h, or refuse if h fails the ball conditions."""
    report = check_ball(h)
    if not report.admissible:
        raise InadmissibleError(report)

    dh = boundary_h(h)
    if all(v > 0 for v in dh):
        result = _case_one(h)
    elif h.total() % 2 == 0:
        result = _case_two(h, dh)
    else:
        result = _case_three(h, dh)

    got = h_vector(result.poset)
    _require(got == h, "realized h-vector", f"built ({got}) instead of ({h})")
    log.info("realized (%s) via case %d: %d elements", h, result.case, len(result.poset.elements))
    return result
