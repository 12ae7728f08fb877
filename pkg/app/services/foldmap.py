"""
premcheck Fold Map Engine
Combinatorial models of generic fold maps with embedded fold spheres.

Features:
- Disk arrangements: fold-image circles with a nesting forest, the retraction rho,
  inner/outer flags and the sheets over every complementary region
- Crossing words (transverse loops) and their region walks
- Pullback 1-manifolds with arc signs, fold records, closed components and the
  marked component (networkx multigraph underneath)
- Monodromy permutations, basepoint transport and the alternation certificate
- The word invariants of the standard (d+1)-disk model: XX=X / XYX=X normal forms,
  triangle winding number and simplicial loop classes

Regions are named "ext" (the unbounded region) or by the id of the circle bounding them
from outside. A sheet is a local branch of the map over a region; crossing a fold-image
circle removes or adds exactly one pair of opposite-sign sheets.
"""

import logging
import string
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from app.services import PremError
from app.services.braid import Permutation
from app.services.freegroup import FreeWord, reduce


logger = logging.getLogger(__name__)

EXTERIOR = "ext"
INNER = "inner"
OUTER = "outer"
STANDARD = "STANDARD"
NESTED = "NESTED"
NEGATIVE_SHEET = "neg"

Node = Tuple[str, int]


class ArrangementError(PremError):
    """Raised for inconsistent arrangements and crossing words that do not fit them."""


# ============ Arrangements ============

@dataclass(frozen=True)
class Circle:
    """A fold-image circle bounding the disk D_id; parent None means a root of the nesting forest."""

    id: str
    parent: Optional[str]
    rho: str
    flag: str
    fold_position: Optional[int] = None

    @property
    def outside(self) -> str:
        return self.parent if self.parent is not None else EXTERIOR


@dataclass(frozen=True)
class Sheet:
    label: str
    sign: int
    balls: FrozenSet[str] = frozenset()


@dataclass(frozen=True)
class DiskArrangement:
    kind: str
    circles: Tuple[Circle, ...]
    fibers: Dict[str, FrozenSet[str]] = field(hash=False)
    sheets: Dict[str, Sheet] = field(hash=False)
    basepoint: str
    degree: int

    def circle(self, circle_id: str) -> Circle:
        for c in self.circles:
            if c.id == circle_id:
                return c
        raise ArrangementError(f"Unknown circle {circle_id!r}")

    @property
    def regions(self) -> List[str]:
        return [EXTERIOR] + [c.id for c in self.circles]

    def fiber(self, region: str) -> List[str]:
        """Sheets over a region in position order."""
        if region not in self.fibers:
            raise ArrangementError(f"Unknown region {region!r}")
        return sorted(self.fibers[region])

    def sign(self, label: str) -> int:
        return self.sheets[label].sign

    def nesting(self) -> nx.DiGraph:
        """Nesting forest with edges parent -> child."""
        forest = nx.DiGraph()
        forest.add_nodes_from(c.id for c in self.circles)
        forest.add_edges_from((c.parent, c.id) for c in self.circles if c.parent is not None)
        return forest

    def region_graph(self) -> nx.Graph:
        """Regions joined across each circle; a tree for a valid arrangement."""
        graph = nx.Graph()
        graph.add_nodes_from(self.regions)
        graph.add_edges_from((c.outside, c.id, {"circle": c.id}) for c in self.circles)
        return graph

    def to_json(self) -> Dict:
        return {
            "kind": self.kind,
            "circles": [
                {"id": c.id, "parent": c.parent, "rho": c.rho, "flag": c.flag}
                for c in self.circles
            ],
            "fibers": {r: self.fiber(r) for r in sorted(self.fibers)},
            "sheets": {
                s.label: {"sign": s.sign, "balls": sorted(s.balls)}
                for s in sorted(self.sheets.values(), key=lambda s: s.label)
            },
            "basepoint": self.basepoint,
            "degree": self.degree
        }

    @classmethod
    def from_json(cls, data: Dict) -> "DiskArrangement":
        """
        Build and validate an arrangement.

        {"kind": "STANDARD", "degree": d} yields the (d+1)-disk model. NESTED data lists
        circles, fibers (either a list of sheet labels or just a size per region), optional
        sheets with signs and source balls, the basepoint region and the degree.
        """
        try:
            kind = data.get("kind", NESTED)
            if kind == STANDARD:
                return standard_arrangement(int(data["degree"]), data.get("basepoint", "B"))
            if kind != NESTED:
                raise ArrangementError(f"Unknown arrangement kind {kind!r}")
            circles = tuple(
                Circle(
                    id=str(c["id"]),
                    parent=None if c.get("parent") is None else str(c["parent"]),
                    rho=str(c.get("rho", c["id"])),
                    flag=c["flag"],
                    fold_position=c.get("fold_position")
                )
                for c in data["circles"]
            )
            fibers_in = {str(k): v for k, v in data["fibers"].items()}
            basepoint = str(data["basepoint"])
            degree = int(data["degree"])
        except (KeyError, TypeError, AttributeError) as e:
            raise ArrangementError(f"Malformed arrangement: missing or invalid field {e}") from e

        if all(isinstance(v, int) for v in fibers_in.values()):
            fibers, sheets = _label_stack_fibers(circles, fibers_in, basepoint, degree)
        else:
            fibers = {r: frozenset(str(x) for x in v) for r, v in fibers_in.items()}
            sheets_in = data.get("sheets") or {}
            sheets = {}
            for label in set().union(*fibers.values()) if fibers else set():
                entry = sheets_in.get(label)
                if not isinstance(entry, dict) or "sign" not in entry:
                    raise ArrangementError(f"Sheet {label!r} has no sign")
                sheets[label] = Sheet(label, int(entry["sign"]), frozenset(str(b) for b in entry.get("balls", [])))
        return validate(cls(NESTED, circles, fibers, sheets, basepoint, degree))


def _label_stack_fibers(circles: Sequence[Circle], sizes: Dict[str, int], basepoint: str,
                        degree: int) -> Tuple[Dict[str, FrozenSet[str]], Dict[str, Sheet]]:
    """
    Turn fiber sizes into labelled sheets by propagating a sheet stack from the basepoint.

    The base fiber lists positive sheets first. Crossings that add a pair push (+, -) on top;
    crossings that remove a pair fold the top two sheets unless the circle names a
    fold_position (index of the lower sheet of the pair).
    """
    if basepoint not in sizes:
        raise ArrangementError(f"Basepoint region {basepoint!r} has no fiber size")
    size = sizes[basepoint]
    if size < abs(degree) or (size - degree) % 2:
        raise ArrangementError(f"Base fiber size {size} is incompatible with degree {degree}")
    positives = (size + degree) // 2
    sheets: Dict[str, Sheet] = {}
    stack: List[str] = []
    for k in range(size):
        label = f"s{k:02d}"
        sheets[label] = Sheet(label, 1 if k < positives else -1)
        stack.append(label)

    by_id = {c.id: c for c in circles}
    for c in circles:
        if c.parent is not None and c.parent not in by_id:
            raise ArrangementError(f"Circle {c.id!r} has unknown parent {c.parent!r}")
    regions = nx.Graph()
    regions.add_nodes_from([EXTERIOR] + list(by_id))
    regions.add_edges_from((c.outside, c.id) for c in circles)
    if not nx.is_tree(regions):
        raise ArrangementError("Circles do not form a nesting forest")

    stacks = {basepoint: stack}
    for here, there in nx.bfs_edges(regions, basepoint):
        circle = by_id[there] if there in by_id and by_id[there].outside == here else by_id[here]
        entering = circle.id == there
        grows = (circle.flag == OUTER) == entering
        current = list(stacks[here])
        if grows:
            pair = [f"{circle.id}+", f"{circle.id}-"]
            sheets[pair[0]] = Sheet(pair[0], 1)
            sheets[pair[1]] = Sheet(pair[1], -1)
            current.extend(pair)
        else:
            k = len(current) - 2 if circle.fold_position is None else circle.fold_position
            if k < 0 or k + 1 >= len(current):
                raise ArrangementError(f"No pair of sheets to fold at circle {circle.id!r}")
            a, b = current[k], current[k + 1]
            if sheets[a].sign == sheets[b].sign:
                raise ArrangementError(
                    f"Sheets folding at circle {circle.id!r} have equal signs; give a fold_position"
                )
            del current[k:k + 2]
        stacks[there] = current

    fibers = {}
    for region, labels in stacks.items():
        if region not in sizes:
            raise ArrangementError(f"Region {region!r} has no fiber size")
        if sizes[region] != len(labels):
            raise ArrangementError(
                f"Fiber size {sizes[region]} over region {region!r} disagrees with the propagated size {len(labels)}"
            )
        fibers[region] = frozenset(labels)
    return fibers, sheets


def validate(arr: DiskArrangement) -> DiskArrangement:
    """
    Check every arrangement invariant and return the arrangement.

    Raises ArrangementError listing all violations found.
    """
    problems: List[str] = []
    ids = [c.id for c in arr.circles]
    if len(set(ids)) != len(ids):
        problems.append("circle ids are not unique")
    if EXTERIOR in ids:
        problems.append(f"{EXTERIOR!r} is reserved for the unbounded region")
    by_id = {c.id: c for c in arr.circles}

    forest = nx.DiGraph()
    forest.add_nodes_from(ids)
    for c in arr.circles:
        if c.parent is not None:
            if c.parent not in by_id:
                problems.append(f"circle {c.id!r} has unknown parent {c.parent!r}")
            else:
                forest.add_edge(c.parent, c.id)
    if ids and not nx.is_branching(forest):
        problems.append("nesting relation is not a forest")

    for c in arr.circles:
        if c.flag not in (INNER, OUTER):
            problems.append(f"circle {c.id!r} has flag {c.flag!r}; expected inner or outer")
        if c.rho not in by_id:
            problems.append(f"rho({c.id}) = {c.rho!r} is not a circle")
            continue
        if by_id[c.rho].rho != c.rho:
            problems.append(f"rho is not idempotent at {c.id!r}: rho(rho({c.id})) = {by_id[c.rho].rho!r}")
        if not problems and c.rho != c.id and c.rho not in nx.ancestors(forest, c.id):
            problems.append(f"D_{c.id} is not contained in D_rho = D_{c.rho}")

    if arr.basepoint not in arr.regions:
        problems.append(f"basepoint {arr.basepoint!r} is not a region")
    for region in arr.regions:
        if region not in arr.fibers:
            problems.append(f"region {region!r} has no fiber")
            continue
        unknown = [s for s in arr.fibers[region] if s not in arr.sheets]
        if unknown:
            problems.append(f"region {region!r} uses sheets without signs: {sorted(unknown)}")
            continue
        total = sum(arr.sheets[s].sign for s in arr.fibers[region])
        if total != arr.degree:
            problems.append(f"fiber over {region!r} has signed size {total}, degree is {arr.degree}")
    for s in arr.sheets.values():
        if s.sign not in (1, -1):
            problems.append(f"sheet {s.label!r} has sign {s.sign}")

    if not problems:
        for c in arr.circles:
            outside, inside = arr.fibers[c.outside], arr.fibers[c.id]
            changed = outside ^ inside
            if len(changed) != 2 or sum(arr.sheets[s].sign for s in changed) != 0:
                problems.append(f"crossing circle {c.id!r} must add or remove one opposite-sign pair of sheets")
            elif (c.flag == INNER) != (len(inside) < len(outside)):
                problems.append(f"fiber across circle {c.id!r} changes against its {c.flag} flag")

    if problems:
        raise ArrangementError("Invalid arrangement: " + "; ".join(problems))
    return arr


def standard_arrangement(d: int, basepoint: str = "B") -> DiskArrangement:
    """
    The degree-d model: d+1 disjoint disks A, B, C, ..., each source disk mapped onto the
    exterior of its own image disk, the rest of the source folding back with sign -1.
    """
    if d < 1 or d + 1 > 25:
        raise ArrangementError(f"Standard model needs 1 <= d <= 24, got {d}")
    letters = string.ascii_uppercase[:d + 1]
    circles = tuple(Circle(x, None, x, INNER) for x in letters)
    sheets = {x: Sheet(x, 1, frozenset({x})) for x in letters}
    sheets[NEGATIVE_SHEET] = Sheet(NEGATIVE_SHEET, -1)
    fibers = {x: frozenset(letters) - {x} for x in letters}
    fibers[EXTERIOR] = frozenset(letters) | {NEGATIVE_SHEET}
    return validate(DiskArrangement(STANDARD, circles, fibers, sheets, basepoint, d))


def three_component_arrangement() -> DiskArrangement:
    """
    D_1, D_2 disjoint inside D_3 inside D_4; rho(1) = 3, rho(2) = 4.

    Sheet O covers everything, the pair U_i, V_i is born at the outer circle rho(i) and
    U_i folds against O at the inner circle i.
    """
    circles = (
        Circle("1", "3", "3", INNER),
        Circle("2", "3", "4", INNER),
        Circle("3", "4", "3", OUTER),
        Circle("4", None, "4", OUTER),
    )
    sheets = {
        "O": Sheet("O", 1),
        "U1": Sheet("U1", -1, frozenset({"1"})),
        "V1": Sheet("V1", 1, frozenset({"1", "3"})),
        "U2": Sheet("U2", -1, frozenset({"2"})),
        "V2": Sheet("V2", 1, frozenset({"2", "4"})),
    }
    fibers = {
        EXTERIOR: frozenset({"O"}),
        "4": frozenset({"O", "U2", "V2"}),
        "3": frozenset({"O", "U1", "V1", "U2", "V2"}),
        "1": frozenset({"V1", "U2", "V2"}),
        "2": frozenset({"U1", "V1", "V2"}),
    }
    return validate(DiskArrangement(NESTED, circles, fibers, sheets, EXTERIOR, 1))


def two_component_arrangement() -> DiskArrangement:
    """
    Three inner circles 1, 2, 3 inside D_4 subset D_5 subset D_6 with rho(i) = i + 3.

    Over D_4 the fiber carries O and one pair U_i, V_i per inner circle.
    """
    circles = (
        Circle("1", "4", "4", INNER),
        Circle("2", "4", "5", INNER),
        Circle("3", "4", "6", INNER),
        Circle("4", "5", "4", OUTER),
        Circle("5", "6", "5", OUTER),
        Circle("6", None, "6", OUTER),
    )
    sheets = {"O": Sheet("O", 1)}
    for i, outer in (("1", "4"), ("2", "5"), ("3", "6")):
        sheets[f"U{i}"] = Sheet(f"U{i}", -1, frozenset({i}))
        sheets[f"V{i}"] = Sheet(f"V{i}", 1, frozenset({i, outer}))
    fibers = {EXTERIOR: frozenset({"O"})}
    fibers["6"] = fibers[EXTERIOR] | {"U3", "V3"}
    fibers["5"] = fibers["6"] | {"U2", "V2"}
    fibers["4"] = fibers["5"] | {"U1", "V1"}
    for i in ("1", "2", "3"):
        fibers[i] = fibers["4"] - {"O", f"U{i}"}
    return validate(DiskArrangement(NESTED, circles, fibers, sheets, EXTERIOR, 1))


# ============ Crossing words ============

IN = "in"
OUT = "out"


@dataclass(frozen=True)
class CrossingWord:
    """A transverse path from the base region: each crossing names a circle and a direction."""

    base: str
    crossings: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        for position, (circle, direction) in enumerate(self.crossings):
            if direction not in (IN, OUT):
                raise ArrangementError(f"Crossing {position} has direction {direction!r}; expected in or out")

    @classmethod
    def from_json(cls, data: Dict) -> "CrossingWord":
        if "regions" in data:
            return loop_from_regions(data["regions"])
        try:
            return cls(str(data["base"]), tuple((str(c["circle"]), c["direction"]) for c in data["crossings"]))
        except (KeyError, TypeError) as e:
            raise ArrangementError(f"Malformed crossing word: missing or invalid field {e}") from e

    def to_json(self) -> Dict:
        return {"base": self.base, "crossings": [{"circle": c, "direction": d} for c, d in self.crossings]}

    def __len__(self) -> int:
        return len(self.crossings)

    def walk(self, arr: DiskArrangement) -> List[str]:
        """Regions visited, one more than the number of crossings."""
        if self.base not in arr.fibers:
            raise ArrangementError(f"Base region {self.base!r} is not a region of the arrangement")
        regions = [self.base]
        for position, (circle_id, direction) in enumerate(self.crossings):
            circle = arr.circle(circle_id)
            current = regions[-1]
            if direction == IN:
                if current != circle.outside:
                    raise ArrangementError(
                        f"Crossing {position} enters D_{circle_id} from region {current!r}, "
                        f"but D_{circle_id} lies in region {circle.outside!r}"
                    )
                regions.append(circle.id)
            else:
                if current != circle.id:
                    raise ArrangementError(
                        f"Crossing {position} leaves D_{circle_id} from region {current!r}"
                    )
                regions.append(circle.outside)
        return regions

    def end_region(self, arr: DiskArrangement) -> str:
        return self.walk(arr)[-1]

    def is_closed(self, arr: DiskArrangement) -> bool:
        return self.end_region(arr) == self.base

    def __add__(self, other: "CrossingWord") -> "CrossingWord":
        """Concatenation; the walk check happens when the result meets an arrangement."""
        return CrossingWord(self.base, self.crossings + other.crossings)

    def reverse(self, arr: DiskArrangement) -> "CrossingWord":
        flipped = tuple((c, OUT if d == IN else IN) for c, d in reversed(self.crossings))
        return CrossingWord(self.end_region(arr), flipped)


def loop_from_regions(word: str) -> CrossingWord:
    """
    Crossing word of a region word in a standard model, e.g. "BCAB".

    Each letter change X -> Y leaves D_X and enters D_Y; a repeated letter leaves and re-enters.
    """
    if not word:
        raise ArrangementError("Region word is empty")
    crossings: List[Tuple[str, str]] = []
    for x, y in zip(word, word[1:]):
        crossings.append((x, OUT))
        crossings.append((y, IN))
    return CrossingWord(word[0], tuple(crossings))


def _visit(*disks: str) -> Tuple[Tuple[str, str], ...]:
    return tuple(step for disk in disks for step in ((disk, IN), (disk, OUT)))


def three_component_loop() -> CrossingWord:
    """Into D_4 and D_3 and straight back out, avoiding D_1 and D_2."""
    return CrossingWord(EXTERIOR, (("4", IN), ("3", IN), ("3", OUT), ("4", OUT)))


def three_component_separated_loop() -> CrossingWord:
    """Visits D_1 twice, then D_2 twice."""
    return CrossingWord(
        EXTERIOR,
        (("4", IN), ("3", IN)) + _visit("1", "1", "2", "2") + (("3", OUT), ("4", OUT))
    )


def two_component_loop() -> CrossingWord:
    """Down to D_4, then D_1, D_2, D_3, D_1, D_2, D_3 in turn, then back out."""
    return CrossingWord(
        EXTERIOR,
        (("6", IN), ("5", IN), ("4", IN))
        + _visit("1", "2", "3", "1", "2", "3")
        + (("4", OUT), ("5", OUT), ("6", OUT))
    )


# ============ Pullbacks ============

class ArcKind(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    RETURNING = "returning"
    CIRCLE = "circle"


@dataclass(frozen=True)
class FoldRecord:
    """A fold point of the pullback: crossing index, death or birth, and the two sheets joined."""

    crossing: int
    kind: str
    sheets: Tuple[str, str]
    interval: int

    def to_json(self) -> Dict:
        return {"crossing": self.crossing, "kind": self.kind, "sheets": list(self.sheets), "interval": self.interval}


@dataclass(frozen=True)
class PullbackComponent:
    kind: ArcKind
    start: Tuple[int, ...]
    end: Tuple[int, ...]
    sheets: FrozenSet[str]
    folds: Tuple[int, ...]
    balls: FrozenSet[str]

    def to_json(self) -> Dict:
        return {
            "kind": self.kind.value,
            "start": list(self.start),
            "end": list(self.end),
            "sheets": sorted(self.sheets),
            "folds": list(self.folds),
            "balls": sorted(self.balls)
        }


@dataclass(frozen=True)
class PullbackGraph:
    """
    Pullback of a transverse path: sheet segments per interval between crossings joined by
    continuation and fold edges, plus terminals ("start", k) and ("end", k) at the fiber
    positions over the two ends.
    """

    word: CrossingWord
    closed: bool
    degree: int
    components: Tuple[PullbackComponent, ...]
    closed_components: Tuple[PullbackComponent, ...]
    marked: Optional[int]
    folds: Tuple[FoldRecord, ...]
    graph: nx.MultiGraph = field(compare=False, repr=False, hash=False)

    def count(self, kind: ArcKind) -> int:
        return sum(1 for c in self.components if c.kind == kind)

    @property
    def positive_arcs(self) -> int:
        return self.count(ArcKind.POSITIVE)

    @property
    def negative_arcs(self) -> int:
        return self.count(ArcKind.NEGATIVE)

    def fold_component(self, fold: FoldRecord) -> Optional[int]:
        """Index of the closed component through a fold point."""
        for k, component in enumerate(self.closed_components):
            if fold.crossing in component.folds and fold.sheets[0] in component.sheets:
                return k
        return None

    def to_json(self) -> Dict:
        return {
            "closed": self.closed,
            "positive_arcs": self.positive_arcs,
            "negative_arcs": self.negative_arcs,
            "degree": self.degree,
            "components": [c.to_json() for c in self.components],
            "closed_components": [c.to_json() for c in self.closed_components],
            "marked": self.marked,
            "folds": [f.to_json() for f in self.folds]
        }

    def to_dot(self) -> str:
        """Graphviz description; fold edges dashed."""
        names = {node: f"n{k}" for k, node in enumerate(sorted(self.graph.nodes))}
        lines = ["graph pullback {"]
        for node, name in names.items():
            shape = "box" if node[0] in ("start", "end") else "ellipse"
            lines.append(f'  {name} [label="{node[0]}:{node[1]}", shape={shape}];')
        for u, v, data in sorted(self.graph.edges(data=True), key=lambda e: (names[e[0]], names[e[1]])):
            style = ' [style=dashed]' if data.get("kind") == "fold" else ""
            lines.append(f"  {names[u]} -- {names[v]}{style};")
        lines.append("}")
        return "\n".join(lines)


def _component(arr: DiskArrangement, graph: nx.MultiGraph, nodes: Iterable[Node],
               start_fiber: List[str], glued: bool = False) -> PullbackComponent:
    nodes = set(nodes)
    starts = tuple(sorted(k for (tag, k) in nodes if tag == "start"))
    ends = tuple(sorted(k for (tag, k) in nodes if tag == "end"))
    sheets = frozenset(label for (label, _) in nodes if label not in ("start", "end"))
    folds = tuple(sorted({
        data["crossing"] for u, v, data in graph.subgraph(nodes).edges(data=True) if data["kind"] == "fold"
    }))
    ball_sets = [arr.sheets[s].balls for s in sheets if arr.sheets[s].balls]
    balls = frozenset.intersection(*ball_sets) if ball_sets and len(ball_sets) == len(sheets) else frozenset()
    if glued:
        kind = ArcKind.CIRCLE
    elif len(starts) == 1 and len(ends) == 1:
        kind = ArcKind.POSITIVE if arr.sign(start_fiber[starts[0]]) > 0 else ArcKind.NEGATIVE
    elif starts or ends:
        kind = ArcKind.RETURNING
    else:
        kind = ArcKind.CIRCLE
    return PullbackComponent(kind, starts, ends, sheets, folds, balls)


def pullback(arr: DiskArrangement, l: CrossingWord) -> PullbackGraph:
    """
    Trace every sheet along l.

    Sheets over both sides of a crossing continue; the pair that disappears is joined by a
    fold point (death) and the pair that appears starts at one (birth).
    """
    regions = l.walk(arr)
    n = len(l.crossings)
    graph = nx.MultiGraph()
    for k, region in enumerate(regions):
        graph.add_nodes_from((label, k) for label in arr.fibers[region])
    folds: List[FoldRecord] = []
    for k, (circle_id, _) in enumerate(l.crossings):
        before, after = arr.fibers[regions[k]], arr.fibers[regions[k + 1]]
        for label in sorted(before & after):
            graph.add_edge((label, k), (label, k + 1), kind="sheet")
        dying, born = sorted(before - after), sorted(after - before)
        if dying:
            graph.add_edge((dying[0], k), (dying[1], k), kind="fold", crossing=k)
            folds.append(FoldRecord(k, "death", (dying[0], dying[1]), k))
        if born:
            graph.add_edge((born[0], k + 1), (born[1], k + 1), kind="fold", crossing=k)
            folds.append(FoldRecord(k, "birth", (born[0], born[1]), k + 1))

    start_fiber, end_fiber = arr.fiber(regions[0]), arr.fiber(regions[-1])
    for position, label in enumerate(start_fiber):
        graph.add_edge(("start", position), (label, 0), kind="terminal")
    for position, label in enumerate(end_fiber):
        graph.add_edge(("end", position), (label, n), kind="terminal")

    components = tuple(sorted(
        (_component(arr, graph, nodes, start_fiber) for nodes in nx.connected_components(graph)),
        key=lambda c: (c.start or (float("inf"),), c.end or (float("inf"),), sorted(c.sheets), c.folds)
    ))

    closed = regions[-1] == regions[0]
    closed_components: Tuple[PullbackComponent, ...] = ()
    marked = None
    if closed:
        glued = nx.MultiGraph(graph)
        glued.add_edges_from((("start", p), ("end", p), {"kind": "glue"}) for p in range(len(start_fiber)))
        closed_components = tuple(sorted(
            (_component(arr, glued, nodes, start_fiber, glued=True) for nodes in nx.connected_components(glued)),
            key=lambda c: (c.start or (float("inf"),), sorted(c.sheets), c.folds)
        ))
        if len(start_fiber) == 1:
            marked = next(k for k, c in enumerate(closed_components) if 0 in c.start)

    result = PullbackGraph(l, closed, arr.degree, components, closed_components, marked, tuple(folds), graph)
    logger.debug("Pullback of %d crossings: %d components, %d folds", n, len(components), len(folds))
    return result


# ============ Monodromy ============

@dataclass(frozen=True)
class BasepointFrame:
    """Bijection D from {0..d-1} onto the sheet positions over the base region."""

    positions: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.positions) != list(range(len(self.positions))):
            raise ArrangementError(f"Frame {list(self.positions)} is not a bijection onto the fiber")

    @classmethod
    def standard(cls, d: int) -> "BasepointFrame":
        return cls(tuple(range(d)))

    @classmethod
    def relabeled(cls, tau: Permutation) -> "BasepointFrame":
        """The frame i -> tau(i)."""
        return cls(tau.images)

    @classmethod
    def cyclic(cls, arr: "DiskArrangement", region: str) -> "BasepointFrame":
        """
        STANDARD models only: the sheets over disk region X in letter order starting just after X
        and wrapping around, so that every disk region sees its neighbours in the same rotation.
        """
        if arr.kind != STANDARD or region == EXTERIOR:
            raise ArrangementError("Cyclic frames exist only over the disk regions of a STANDARD model")
        letters = string.ascii_uppercase[:arr.degree + 1]
        fiber = arr.fiber(region)
        order = sorted(fiber, key=lambda x: (letters.index(x) - letters.index(region)) % len(letters))
        return cls(tuple(fiber.index(x) for x in order))

    def index_of(self, position: int) -> int:
        return self.positions.index(position)


def _full_fiber(arr: DiskArrangement, region: str) -> List[str]:
    fiber = arr.fiber(region)
    if len(fiber) != abs(arr.degree) or arr.degree == 0:
        raise ArrangementError(
            f"Region {region!r} carries {len(fiber)} sheets; frames need exactly |deg| = {abs(arr.degree)}"
        )
    return fiber


def _arc_matching(pb: PullbackGraph) -> Dict[int, int]:
    return {c.start[0]: c.end[0] for c in pb.components if c.kind in (ArcKind.POSITIVE, ArcKind.NEGATIVE)}


def monodromy(arr: DiskArrangement, l: CrossingWord, frame: Optional[BasepointFrame] = None) -> Permutation:
    """Permutation of the frame indices given by following arcs from start to end."""
    d = len(_full_fiber(arr, l.base))
    if not l.is_closed(arr):
        raise ArrangementError(f"Loop based at {l.base!r} ends in region {l.end_region(arr)!r}")
    frame = frame or BasepointFrame.standard(d)
    if len(frame.positions) != d:
        raise ArrangementError(f"Frame of size {len(frame.positions)} for a fiber of {d} sheets")
    matching = _arc_matching(pullback(arr, l))
    return Permutation(tuple(frame.index_of(matching[frame.positions[i]]) for i in range(d)))


def basepoint_transport(arr: DiskArrangement, p: CrossingWord, frame_start: Optional[BasepointFrame] = None,
                        frame_end: Optional[BasepointFrame] = None) -> Permutation:
    """
    The bijection carried by a path p from b' to b, written in frames D' (at b') and D (at b).

    Monodromies satisfy monodromy(p l p^-1, D') * h = h * monodromy(l, D).

    The result depends on the frames, not only on p. With the default frames (sheets in
    label order) the diameter path B -> C of STANDARD(2) carries the identity; with
    BasepointFrame.cyclic at both ends it carries the transposition.
    """
    d = len(_full_fiber(arr, p.base))
    _full_fiber(arr, p.end_region(arr))
    frame_start = frame_start or BasepointFrame.standard(d)
    frame_end = frame_end or BasepointFrame.standard(d)
    matching = _arc_matching(pullback(arr, p))
    if len(matching) != d:
        raise ArrangementError("Path pullback does not match the two fibers")
    return Permutation(tuple(frame_end.index_of(matching[frame_start.positions[i]]) for i in range(d)))


# ============ Word invariants of the standard model ============

TRIANGLE = "ABC"


def _check_word(word: str, alphabet: str, base: str = "B") -> None:
    for position, letter in enumerate(word):
        if letter not in alphabet:
            raise ArrangementError(f"Letter {letter!r} at position {position} is outside {alphabet}")
    if not word or word[0] != base or word[-1] != base:
        raise ArrangementError(f"Loop word {word!r} must start and end at {base}")


def normal_form(word: str) -> str:
    """Reduce with XX -> X and XYX -> X until neither applies."""
    stack: List[str] = []
    for letter in word:
        if stack and stack[-1] == letter:
            continue
        if len(stack) >= 2 and stack[-2] == letter:
            stack.pop()
            continue
        stack.append(letter)
    return "".join(stack)


def winding_invariant(word: str) -> int:
    """
    Winding number of a closed region word on the triangle A, B, C.

    A->B, B->C, C->A count +1, the reverse steps -1, repeated letters 0; the total is 3 times
    the winding number.
    """
    _check_word(word, TRIANGLE)
    total = 0
    for x, y in zip(word, word[1:]):
        if x == y:
            continue
        total += 1 if (TRIANGLE.index(y) - TRIANGLE.index(x)) % 3 == 1 else -1
    return total // 3


def simplicial_class(word: str, d: int, base: str = "B") -> FreeWord:
    """
    Class of a closed walk on the complete graph over the d+1 disk labels in its free
    fundamental group of rank d(d-1)/2.

    The spanning tree is the star at the base vertex; the non-tree edge {u, v} with u < v is
    generator k in lexicographic order, read positively from v to u.
    """
    if d < 2:
        raise ArrangementError(f"Simplicial classes need d >= 2, got {d}")
    alphabet = string.ascii_uppercase[:d + 1]
    _check_word(word, alphabet, base)
    others = [x for x in alphabet if x != base]
    generator = {pair: k for k, pair in enumerate(combinations(others, 2), start=1)}
    letters: List[int] = []
    for x, y in zip(word, word[1:]):
        if x == y or base in (x, y):
            continue
        u, v = min(x, y), max(x, y)
        letters.append(generator[(u, v)] if x == v else -generator[(u, v)])
    return reduce(letters, d * (d - 1) // 2)


# ============ Alternation ============

class AlternationVerdict(str, Enum):
    OBSTRUCTED = "OBSTRUCTED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class AlternationCertificate:
    verdict: AlternationVerdict
    disks: Tuple[str, ...]
    interleaved: Tuple[Tuple[str, str], ...]
    separated: Tuple[Tuple[str, str], ...]
    visits: Tuple[Dict, ...]
    reason: str

    def to_json(self) -> Dict:
        return {
            "verdict": self.verdict.value,
            "disks": list(self.disks),
            "interleaved": [list(p) for p in self.interleaved],
            "separated": [list(p) for p in self.separated],
            "visits": list(self.visits),
            "reason": self.reason
        }


def _visits(arr: DiskArrangement, l: CrossingWord, disk: str) -> List[Tuple[int, int]]:
    """(entry crossing, exit crossing) for each time l is inside D_disk."""
    out, entry = [], None
    for k, (circle, direction) in enumerate(l.crossings):
        if circle != disk:
            continue
        if direction == IN:
            entry = k
        elif entry is not None:
            out.append((entry, k))
            entry = None
    return out


def alternation_certificate(arr: DiskArrangement, l: CrossingWord) -> AlternationCertificate:
    """
    Obstruction from interleaving visits to inner disks.

    The designated disks are the inner circles l enters. OBSTRUCTED when every pair of them is
    visited in alternating order around the loop and every visit has its entry fold and its
    exit fold on different closed components, one of them the marked component.
    """
    regions = l.walk(arr)
    if regions[-1] != regions[0]:
        raise ArrangementError("Alternation needs a closed loop")
    disks: List[str] = []
    for circle, direction in l.crossings:
        if direction == IN and arr.circle(circle).flag == INNER and circle not in disks:
            disks.append(circle)
    if len(disks) < 2:
        return AlternationCertificate(AlternationVerdict.INCONCLUSIVE, tuple(disks), (), (), (),
                                      "fewer than two inner disks are met")

    forest = arr.nesting()
    for disk in disks:
        if l.base == disk or l.base in nx.descendants(forest, disk):
            raise ArrangementError(f"Base region {l.base!r} lies inside designated disk D_{disk}")
    visits = {disk: _visits(arr, l, disk) for disk in disks}
    for disk, spans in visits.items():
        if len(spans) != 2:
            raise ArrangementError(f"Loop meets D_{disk} in {len(spans)} arcs; alternation needs exactly 2")

    pb = pullback(arr, l)
    if pb.marked is None:
        raise ArrangementError("Alternation needs a single sheet over the base (a marked component)")
    if len(pb.closed_components) < 2:
        raise ArrangementError("Pullback is connected; nothing to alternate against")

    interleaved, separated = [], []
    for i, j in combinations(disks, 2):
        (a1, a2), (b1, b2) = sorted(s[0] for s in visits[i]), sorted(s[0] for s in visits[j])
        if (a1 < b1 < a2) != (a1 < b2 < a2):
            interleaved.append((i, j))
        else:
            separated.append((i, j))

    by_crossing = {(f.crossing, f.kind): f for f in pb.folds}
    visit_records = []
    split = True
    for disk in disks:
        for entry, exit_ in visits[disk]:
            first = pb.fold_component(by_crossing[(entry, "death")])
            last = pb.fold_component(by_crossing[(exit_, "birth")])
            ok = first != last and pb.marked in (first, last)
            split = split and ok
            visit_records.append({"disk": disk, "entry": entry, "exit": exit_,
                                  "entry_component": first, "exit_component": last})

    obstructed = not separated and split
    reason = ("every pair of visits alternates and folds split between the marked and unmarked components"
              if obstructed else
              "separated visits: " + ", ".join(f"{i}/{j}" for i, j in separated) if separated else
              "some visit keeps both folds on one side")
    verdict = AlternationVerdict.OBSTRUCTED if obstructed else AlternationVerdict.INCONCLUSIVE
    return AlternationCertificate(verdict, tuple(disks), tuple(interleaved), tuple(separated),
                                  tuple(visit_records), reason)


class FoldMapService:
    """Service facade over the fold map engine."""

    @staticmethod
    def validate(arr: DiskArrangement) -> DiskArrangement:
        return validate(arr)

    @staticmethod
    def pullback(arr: DiskArrangement, l: CrossingWord) -> PullbackGraph:
        return pullback(arr, l)

    @staticmethod
    def monodromy(arr: DiskArrangement, l: CrossingWord,
                  frame: Optional[BasepointFrame] = None) -> Permutation:
        return monodromy(arr, l, frame)

    @staticmethod
    def basepoint_transport(arr: DiskArrangement, p: CrossingWord,
                            frame_start: Optional[BasepointFrame] = None,
                            frame_end: Optional[BasepointFrame] = None) -> Permutation:
        return basepoint_transport(arr, p, frame_start, frame_end)

    @staticmethod
    def winding_invariant(word: str) -> int:
        return winding_invariant(word)

    @staticmethod
    def simplicial_class(word: str, d: int) -> FreeWord:
        return simplicial_class(word, d)

    @staticmethod
    def alternation_certificate(arr: DiskArrangement, l: CrossingWord) -> AlternationCertificate:
        return alternation_certificate(arr, l)


# Global fold map service instance
foldmap_service = FoldMapService()
