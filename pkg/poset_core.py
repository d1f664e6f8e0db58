"""Simplicial posets stored as Hasse diagrams.

Elements carry their rank and the ids they cover; the minimal element 0^ is
implicit. Distinct elements may share a vertex set (the doubled edge), which is
why atoms are derived from covers instead of being the representation.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from hcalc import HVector, h_from_f

log = logging.getLogger(__name__)

FORMAT_HEADER = "cellposet 1"


class PosetError(ValueError):
    pass


class PosetStructureError(PosetError):
    pass


class PosetFormatError(PosetError):
    pass


class PseudomanifoldError(PosetError):
    def __init__(self, message: str, witness: Optional[int] = None) -> None:
        super().__init__(message)
        self.witness = witness


class GlueError(PosetError):
    def __init__(self, message: str, witness: Optional[int] = None) -> None:
        super().__init__(message)
        self.witness = witness


class ShellingError(PosetError):
    def __init__(self, message: str, step: int) -> None:
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Element:
    id: int
    rank: int
    covers: Tuple[int, ...] = ()


@dataclass(frozen=True)
class SimplicialPoset:
    d: int
    elements: Tuple[Element, ...]
    # Subset labels of the canonical generators (boolean, delta); dropped by
    # every operation that builds a new poset.
    labels: Optional[Mapping[FrozenSet[int], int]] = field(default=None, compare=False, repr=False)

    @cached_property
    def by_id(self) -> Dict[int, Element]:
        return {e.id: e for e in self.elements}

    @cached_property
    def upper(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {e.id: [] for e in self.elements}
        for e in self.elements:
            for c in e.covers:
                if c in out:
                    out[c].append(e.id)
        return out

    @cached_property
    def atoms(self) -> Dict[int, FrozenSet[int]]:
        out: Dict[int, FrozenSet[int]] = {}
        for e in sorted(self.elements, key=lambda e: e.rank):
            if e.rank <= 1:
                out[e.id] = frozenset((e.id,))
            else:
                out[e.id] = frozenset().union(*(out.get(c, frozenset()) for c in e.covers))
        return out

    @cached_property
    def _downsets(self) -> Dict[int, FrozenSet[int]]:
        out: Dict[int, FrozenSet[int]] = {}
        for e in sorted(self.elements, key=lambda e: e.rank):
            out[e.id] = frozenset((e.id,)).union(*(out.get(c, frozenset()) for c in e.covers))
        return out

    @property
    def max_id(self) -> int:
        return max((e.id for e in self.elements), default=-1)

    def rank_of(self, element_id: int) -> int:
        return self.by_id[element_id].rank

    def covers_of(self, element_id: int) -> Tuple[int, ...]:
        return self.by_id[element_id].covers

    def downset(self, element_id: int) -> FrozenSet[int]:
        """Elements below or equal to element_id, 0^ excluded."""
        return self._downsets[element_id]

    def ids_of_rank(self, rank: int) -> List[int]:
        return [e.id for e in self.elements if e.rank == rank]

    def facets(self) -> List[int]:
        upper = self.upper
        return [e.id for e in self.elements if not upper[e.id]]

    def facet_count(self) -> int:
        return f_vector(self)[-1]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    invariant: Optional[str] = None
    witness: Optional[int] = None
    detail: str = ""

    def describe(self) -> str:
        if self.ok:
            return "valid simplicial poset"
        return f"{self.invariant} violated at element {self.witness}: {self.detail}"


def _fail(invariant: str, witness: int, detail: str) -> ValidationReport:
    return ValidationReport(False, invariant, witness, detail)


def check_structure(P: SimplicialPoset) -> None:
    """Raise PosetStructureError unless ids are unique and every cover resolves."""
    if P.d < 0:
        raise PosetStructureError(f"negative rank bound d={P.d}")
    seen: Set[int] = set()
    for e in P.elements:
        if e.id < 0:
            raise PosetStructureError(f"negative element id {e.id}")
        if e.id in seen:
            raise PosetStructureError(f"duplicate element id {e.id}")
        seen.add(e.id)
    for e in P.elements:
        for c in e.covers:
            if c not in seen:
                raise PosetStructureError(f"element {e.id} covers unknown id {c}")


def validate(P: SimplicialPoset) -> ValidationReport:
    check_structure(P)
    by_id = P.by_id

    for e in P.elements:
        if not 1 <= e.rank <= P.d:
            return _fail("graded", e.id, f"rank {e.rank} outside [1, {P.d}]")
        if e.rank == 1 and e.covers:
            return _fail("graded", e.id, "rank-1 element may only cover 0^")
        for c in e.covers:
            if by_id[c].rank != e.rank - 1:
                return _fail("graded", e.id, f"covers {c} of rank {by_id[c].rank}")

    atoms = P.atoms
    for e in sorted(P.elements, key=lambda e: (e.rank, e.id)):
        if len(atoms[e.id]) != e.rank:
            return _fail("boolean-interval", e.id, f"{len(atoms[e.id])} atoms below a rank-{e.rank} element")
        expected_covers = e.rank if e.rank > 1 else 0
        if len(e.covers) != expected_covers:
            return _fail("boolean-interval", e.id, f"covers {len(e.covers)} elements, expected {expected_covers}")
        down = P.downset(e.id)
        size = 2 ** e.rank - 1
        if len(down) != size:
            return _fail("boolean-interval", e.id, f"lower interval has {len(down)} elements, expected {size}")
        if len({atoms[t] for t in down}) != size:
            return _fail("boolean-interval", e.id, "two elements below share a vertex set")
    return ValidationReport(True)


# --------------------------------------------------------------------------- #
# FACE COUNTS
# --------------------------------------------------------------------------- #

def f_vector(P: SimplicialPoset) -> Tuple[int, ...]:
    counts = [0] * (P.d + 1)
    counts[0] = 1
    for e in P.elements:
        counts[e.rank] += 1
    return tuple(counts)


def h_vector(P: SimplicialPoset) -> HVector:
    return h_from_f(f_vector(P))


# --------------------------------------------------------------------------- #
# ORDER IDEALS AND BOUNDARY
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class OrderIdeal:
    parent: SimplicialPoset
    members: FrozenSet[int]
    # Whether 0^ belongs to the ideal. Only the empty ideal leaves it out.
    bottom: bool = True

    def is_empty(self) -> bool:
        return not self.bottom

    def maximal(self) -> List[int]:
        upper = self.parent.upper
        return sorted(m for m in self.members if not any(u in self.members for u in upper[m]))

    def as_poset(self, d: Optional[int] = None) -> SimplicialPoset:
        if not self.bottom:
            raise PosetError("the empty ideal has no poset view")
        elements = tuple(e for e in self.parent.elements if e.id in self.members)
        if d is None:
            d = max((e.rank for e in elements), default=0)
        return SimplicialPoset(d, elements)


def order_ideal(P: SimplicialPoset, generators: Iterable[int]) -> OrderIdeal:
    generators = list(generators)
    by_id = P.by_id
    members: Set[int] = set()
    stack = []
    for g in generators:
        if g not in by_id:
            raise PosetStructureError(f"unknown generator id {g}")
        stack.append(g)
    while stack:
        x = stack.pop()
        if x in members:
            continue
        members.add(x)
        stack.extend(by_id[x].covers)
    return OrderIdeal(P, frozenset(members), bottom=bool(generators))


def pseudomanifold_violations(P: SimplicialPoset) -> List[int]:
    """Rank d-1 elements covered by three or more elements.

    For d = 1 the rank-0 element is 0^; three or more points are reported by
    their own ids.
    """
    if P.d == 1:
        points = P.ids_of_rank(1)
        return sorted(points) if len(points) > 2 else []
    upper = P.upper
    return sorted(x for x in P.ids_of_rank(P.d - 1) if len(upper[x]) > 2)


def boundary(P: SimplicialPoset) -> OrderIdeal:
    """The ideal generated by rank d-1 elements with exactly one cover."""
    if P.d == 0:
        return OrderIdeal(P, frozenset(), bottom=False)
    if P.d == 1:
        points = P.ids_of_rank(1)
        if len(points) > 2:
            raise PseudomanifoldError(f"0^ is covered by {len(points)} points", witness=points[0])
        return OrderIdeal(P, frozenset(), bottom=len(points) == 1)

    upper = P.upper
    generators = []
    for x in P.ids_of_rank(P.d - 1):
        count = len(upper[x])
        if count > 2:
            raise PseudomanifoldError(f"element {x} is covered by {count} elements", witness=x)
        if count == 1:
            generators.append(x)
    return order_ideal(P, generators)


def boundary_poset(P: SimplicialPoset) -> SimplicialPoset:
    return boundary(P).as_poset(P.d - 1)


def is_pure(P: SimplicialPoset) -> bool:
    return all(P.rank_of(x) == P.d for x in P.facets())


def facet_graph(P: SimplicialPoset) -> nx.Graph:
    """Facets as nodes, joined when they share a rank d-1 element."""
    graph = nx.Graph()
    graph.add_nodes_from(P.facets())
    if P.d < 2:
        return graph
    upper = P.upper
    for ridge in P.ids_of_rank(P.d - 1):
        above = upper[ridge]
        graph.add_edges_from(zip(above, above[1:]), ridge=ridge)
    return graph


def strongly_connected(P: SimplicialPoset) -> bool:
    """Facets linked through shared rank d-1 elements form one class."""
    if not P.facets() or not is_pure(P):
        return False
    if P.d == 1:
        return True
    return nx.is_connected(facet_graph(P))


def boundary_is_pseudosphere(P: SimplicialPoset) -> bool:
    """The boundary is a closed, strongly connected pseudomanifold.

    Rank 1 boundaries must be exactly two points; the boundary of a single point
    is {0^}.
    """
    try:
        B = boundary(P)
    except PseudomanifoldError:
        return False
    if P.d == 1:
        return B.bottom
    if B.is_empty():
        return False
    Q = B.as_poset(P.d - 1)
    if Q.d == 1:
        return len(Q.ids_of_rank(1)) == 2
    upper = Q.upper
    if any(len(upper[x]) != 2 for x in Q.ids_of_rank(Q.d - 1)):
        return False
    return strongly_connected(Q)


# --------------------------------------------------------------------------- #
# CONES AND THE SPHERE CLOSURE
# --------------------------------------------------------------------------- #

def _cone_elements(P: SimplicialPoset, base: Iterable[int], first_id: int) -> List[Element]:
    """Elements (x, 2) for x in base, plus the apex (0^, 2).

    (x, 1) is x itself, so (x, 2) covers x and the lifts of x's covers; lifted
    points cover the apex.
    """
    apex = first_id
    out = [Element(apex, 1, ())]
    lifted: Dict[int, int] = {}
    next_id = apex + 1
    for x in sorted(base, key=lambda x: (P.rank_of(x), x)):
        e = P.by_id[x]
        below = tuple(lifted[c] for c in e.covers) if e.rank > 1 else (apex,)
        lifted[x] = next_id
        out.append(Element(next_id, e.rank + 1, tuple(sorted((x,) + below))))
        next_id += 1
    return out


def cone(P: SimplicialPoset) -> SimplicialPoset:
    extra = _cone_elements(P, (e.id for e in P.elements), P.max_id + 1)
    return SimplicialPoset(P.d + 1, P.elements + tuple(extra))


def sp_closure(P: SimplicialPoset) -> SimplicialPoset:
    """Glue the cone over the boundary back onto P along the boundary."""
    B = boundary(P)
    if B.is_empty():
        raise PseudomanifoldError("sphere closure needs a nonempty boundary")
    extra = _cone_elements(P, B.members, P.max_id + 1)
    return SimplicialPoset(P.d, P.elements + tuple(extra))


# --------------------------------------------------------------------------- #
# GLUING
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class GlueMap:
    pairs: Tuple[Tuple[int, int], ...]

    @classmethod
    def of(cls, pairs: Iterable[Tuple[int, int]]) -> "GlueMap":
        return cls(tuple((int(a), int(b)) for a, b in pairs))


@dataclass(frozen=True)
class Gluing:
    poset: SimplicialPoset
    # ids of the right operand inside the result; left ids are kept as they are
    right_ids: Dict[int, int]


def verify_glue_map(P: SimplicialPoset, Q: SimplicialPoset, f: GlueMap) -> None:
    """Raise GlueError unless f is an isomorphism between order ideals of P and Q."""
    forward: Dict[int, int] = {}
    backward: Dict[int, int] = {}
    for p, q in f.pairs:
        if p not in P.by_id:
            raise GlueError(f"left id {p} does not exist", witness=p)
        if q not in Q.by_id:
            raise GlueError(f"right id {q} does not exist", witness=q)
        if p in forward or q in backward:
            raise GlueError(f"pair {p}:{q} repeats an id", witness=p)
        forward[p] = q
        backward[q] = p
    for p, q in f.pairs:
        if P.rank_of(p) != Q.rank_of(q):
            raise GlueError(f"pair {p}:{q} changes rank", witness=p)
        left_covers = P.covers_of(p)
        if any(c not in forward for c in left_covers):
            raise GlueError(f"left side is not an order ideal below {p}", witness=p)
        right_covers = Q.covers_of(q)
        if any(c not in backward for c in right_covers):
            raise GlueError(f"right side is not an order ideal below {q}", witness=p)
        if sorted(forward[c] for c in left_covers) != sorted(right_covers):
            raise GlueError(f"pair {p}:{q} does not preserve covers", witness=p)


def pushout(P: SimplicialPoset, Q: SimplicialPoset, f: GlueMap) -> Gluing:
    """P and Q glued along the ideal isomorphism f; Q's unmatched elements get fresh ids."""
    verify_glue_map(P, Q, f)
    backward = {q: p for p, q in f.pairs}
    right_ids: Dict[int, int] = {}
    added: List[Element] = []
    next_id = P.max_id + 1
    for e in sorted(Q.elements, key=lambda e: (e.rank, e.id)):
        if e.id in backward:
            right_ids[e.id] = backward[e.id]
            continue
        right_ids[e.id] = next_id
        added.append(Element(next_id, e.rank, tuple(sorted(right_ids[c] for c in e.covers))))
        next_id += 1

    result = SimplicialPoset(max(P.d, Q.d), P.elements + tuple(added))
    report = validate(result)
    if not report.ok:
        raise GlueError(f"glued poset is invalid: {report.describe()}", witness=report.witness)
    log.debug("glued %d + %d elements along %d pairs", len(P.elements), len(Q.elements), len(f.pairs))
    return Gluing(result, right_ids)


def glue(P: SimplicialPoset, Q: SimplicialPoset, f: GlueMap) -> SimplicialPoset:
    return pushout(P, Q, f).poset


# --------------------------------------------------------------------------- #
# GENERATORS
# --------------------------------------------------------------------------- #

def _subset_key(F: FrozenSet[int]) -> Tuple[int, Tuple[int, ...]]:
    return len(F), tuple(sorted(F))


def subset_complex(d: int, subsets: Iterable[FrozenSet[int]]) -> SimplicialPoset:
    """Face poset of a simplicial complex given by all its nonempty faces."""
    label: Dict[FrozenSet[int], int] = {}
    elements: List[Element] = []
    for F in sorted(subsets, key=_subset_key):
        label[F] = len(elements)
        covers = tuple(sorted(label[F - {x}] for x in F)) if len(F) > 1 else ()
        elements.append(Element(label[F], len(F), covers))
    return SimplicialPoset(d, tuple(elements), labels=label)


def nonempty_subsets(ground: Sequence[int]) -> Iterable[FrozenSet[int]]:
    for size in range(1, len(ground) + 1):
        for combo in itertools.combinations(ground, size):
            yield frozenset(combo)


def boolean(d: int) -> SimplicialPoset:
    """The subset lattice of [d] without 0^; labels map subsets to ids."""
    if d < 1:
        raise PosetError(f"boolean needs d >= 1, got {d}")
    return subset_complex(d, nonempty_subsets(range(1, d + 1)))


def delta_members(d: int, k: int) -> List[FrozenSet[int]]:
    """Nonempty F in [d] with F not containing [k]."""
    head = frozenset(range(1, k + 1))
    return [F for F in nonempty_subsets(range(1, d + 1)) if not head <= F]


def delta(d: int, k: int) -> SimplicialPoset:
    """Subsets of [d] not containing [k]: the complex generated by [d] minus i for i <= k."""
    if not 1 <= k <= d:
        raise PosetError(f"delta needs 1 <= k <= d, got d={d}, k={k}")
    return subset_complex(d - 1, delta_members(d, k))


# --------------------------------------------------------------------------- #
# SHELLINGS
# --------------------------------------------------------------------------- #

def verify_shelling(P: SimplicialPoset, facet_order: Sequence[int]) -> Tuple[int, ...]:
    """k-values of a shelling, one per facet after the first.

    Each facet must meet the ideal of its predecessors in k codimension-one faces
    of itself, i.e. in a copy of Delta_d(k).
    """
    d = P.d
    facets = P.facets()
    if not is_pure(P):
        raise ShellingError("poset is not pure", step=0)
    if sorted(facet_order) != sorted(facets):
        raise ShellingError("order is not a permutation of the facets", step=0)

    upper = P.upper
    seen: Set[int] = set()
    ks: List[int] = []
    for step, facet in enumerate(facet_order, start=1):
        down = P.downset(facet)
        if step > 1:
            common = down & seen
            if d == 1:
                k = 1
            else:
                tops = [x for x in common if not any(u in common for u in upper[x])]
                if not tops or any(P.rank_of(x) != d - 1 for x in tops):
                    raise ShellingError(f"facet {facet} meets its predecessors badly at step {step}", step=step)
                k = len(tops)
            ks.append(k)
        seen |= down
    return tuple(ks)


# --------------------------------------------------------------------------- #
# CANONICAL FORM AND TEXT FORMAT
# --------------------------------------------------------------------------- #

def canonical(P: SimplicialPoset) -> SimplicialPoset:
    """Renumber ids consecutively in (rank, sorted atoms, id) order."""
    atoms = P.atoms
    order = sorted(P.elements, key=lambda e: (e.rank, tuple(sorted(atoms[e.id])), e.id))
    renumber = {e.id: i for i, e in enumerate(order)}
    return SimplicialPoset(
        P.d,
        tuple(
            Element(renumber[e.id], e.rank, tuple(sorted(renumber.get(c, c) for c in e.covers)))
            for e in order
        ),
    )


def dump_poset(P: SimplicialPoset) -> str:
    C = canonical(P)
    lines = [FORMAT_HEADER, f"d {C.d}", f"n {len(C.elements)}"]
    for e in C.elements:
        covers = ",".join(str(c) for c in e.covers) if e.covers else "-"
        lines.append(f"e {e.id} {e.rank} {covers}")
    return "\n".join(lines) + "\n"


def _header_int(line: str, key: str) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise PosetFormatError(f"expected '{key} <int>', got {line!r}")
    try:
        return int(parts[1])
    except ValueError:
        raise PosetFormatError(f"expected '{key} <int>', got {line!r}")


def load_poset(path: str) -> SimplicialPoset:
    with open(path, "r", encoding="utf-8") as f:
        try:
            text = f.read()
        except UnicodeDecodeError as exc:
            raise PosetFormatError(f"{path} is not UTF-8 text (byte {exc.start})") from exc
    return parse_poset(text)


def parse_poset(text: str) -> SimplicialPoset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise PosetFormatError("empty poset file")
    if lines[0] != FORMAT_HEADER:
        if lines[0].startswith("cellposet"):
            raise PosetFormatError(f"unsupported poset format version {lines[0]!r}")
        raise PosetFormatError(f"missing '{FORMAT_HEADER}' header")
    if len(lines) < 3:
        raise PosetFormatError("truncated poset header")
    d = _header_int(lines[1], "d")
    n = _header_int(lines[2], "n")
    body = lines[3:]
    if len(body) != n:
        raise PosetFormatError(f"expected {n} element lines, found {len(body)}")

    ranks: Dict[int, int] = {}
    elements: List[Element] = []
    last_rank = 0
    for number, line in enumerate(body, start=4):
        parts = line.split()
        if len(parts) != 4 or parts[0] != "e":
            raise PosetFormatError(f"line {number}: expected 'e <id> <rank> <covers>'")
        try:
            element_id, rank = int(parts[1]), int(parts[2])
            covers = () if parts[3] == "-" else tuple(int(c) for c in parts[3].split(","))
        except ValueError:
            raise PosetFormatError(f"line {number}: malformed element line {line!r}")
        if element_id in ranks:
            raise PosetFormatError(f"line {number}: duplicate id {element_id}")
        if rank < last_rank:
            raise PosetFormatError(f"line {number}: ranks must not decrease")
        if len(set(covers)) != len(covers):
            raise PosetFormatError(f"line {number}: duplicate cover in {parts[3]}")
        for c in covers:
            if c not in ranks or ranks[c] >= rank:
                raise PosetFormatError(f"line {number}: cover {c} is not an earlier lower-rank element")
        ranks[element_id] = rank
        last_rank = rank
        elements.append(Element(element_id, rank, covers))
    return SimplicialPoset(d, tuple(elements))
