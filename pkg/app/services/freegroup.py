"""
premcheck Free Group Engine
Exact arithmetic in finitely generated free groups F_d.

Implements:
- Free reduction of signed-integer words ([1,-2,1] = x1 x2^-1 x1)
- Magnus expansion x_i -> 1 + X_i truncated by degree (lower central series tests)
- Stallings foldings for subgroup membership
- Double coset equality H g H = H g' H via folded automata
"""

import json
import math
import logging
from collections import defaultdict
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
from networkx.utils import UnionFind

from app.services import PremError


logger = logging.getLogger(__name__)

Monomial = Tuple[int, ...]


class FreeGroupError(PremError):
    """Raised for malformed words, rank mismatches and bad truncation caps."""


# ============ Words ============

def reduce(letters: Iterable[int], rank: int) -> "FreeWord":
    """
    Freely reduce a raw letter sequence.

    Args:
        letters: Signed generator indices, i for x_i and -i for x_i^-1
        rank: Rank d of the ambient free group

    Returns:
        The freely reduced FreeWord equal to the input in F_d
    """
    if rank < 1:
        raise FreeGroupError(f"Rank must be positive, got {rank}")
    stack: List[int] = []
    for position, letter in enumerate(letters):
        if not isinstance(letter, int) or isinstance(letter, bool) or letter == 0 or abs(letter) > rank:
            raise FreeGroupError(f"Letter {letter!r} at position {position} is not a generator of F_{rank}")
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return FreeWord(rank, tuple(stack))


def letter_key(letter: int) -> Tuple[int, int]:
    """Shortlex order on letters: x1 < x1^-1 < x2 < x2^-1 < ..."""
    return (abs(letter), 1 if letter < 0 else 0)


@dataclass(frozen=True)
class FreeWord:
    """A freely reduced word in the generators x_1..x_d of F_d."""

    rank: int
    letters: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.rank < 1:
            raise FreeGroupError(f"Rank must be positive, got {self.rank}")
        for position, letter in enumerate(self.letters):
            if letter == 0 or abs(letter) > self.rank:
                raise FreeGroupError(f"Letter {letter} at position {position} exceeds rank {self.rank}")
            if position and self.letters[position - 1] == -letter:
                raise FreeGroupError(f"Word is not freely reduced at position {position}")

    @classmethod
    def identity(cls, rank: int) -> "FreeWord":
        return cls(rank, ())

    @classmethod
    def generator(cls, index: int, rank: int) -> "FreeWord":
        return reduce([index], rank)

    @classmethod
    def from_json(cls, data: Sequence[int], rank: int) -> "FreeWord":
        """Build from the signed integer list serialization (reduced on the way in)."""
        return reduce(list(data), rank)

    def to_json(self) -> List[int]:
        return list(self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        self._check_rank(other)
        return reduce(self.letters + other.letters, self.rank)

    def inverse(self) -> "FreeWord":
        return FreeWord(self.rank, tuple(-letter for letter in reversed(self.letters)))

    def __pow__(self, n: int) -> "FreeWord":
        base = self if n >= 0 else self.inverse()
        return reduce(base.letters * abs(n), self.rank)

    def commutator(self, other: "FreeWord") -> "FreeWord":
        """[u, v] = u v u^-1 v^-1."""
        return self * other * self.inverse() * other.inverse()

    def conjugate(self, by: "FreeWord") -> "FreeWord":
        """by * self * by^-1."""
        return by * self * by.inverse()

    def is_identity(self) -> bool:
        return not self.letters

    def exponent_sum(self, index: int) -> int:
        return sum((1 if letter > 0 else -1) for letter in self.letters if abs(letter) == index)

    def substitute(self, images: Sequence["FreeWord"]) -> "FreeWord":
        """Apply the endomorphism x_i -> images[i-1]."""
        if not images:
            raise FreeGroupError("Substitution needs one image per generator")
        target_rank = images[0].rank
        out: List[int] = []
        for letter in self.letters:
            image = images[abs(letter) - 1]
            out.extend(image.letters if letter > 0 else image.inverse().letters)
        return reduce(out, target_rank)

    def shortlex_key(self) -> Tuple[int, Tuple[Tuple[int, int], ...]]:
        return (len(self.letters), tuple(letter_key(letter) for letter in self.letters))

    def _check_rank(self, other: "FreeWord") -> None:
        if other.rank != self.rank:
            raise FreeGroupError(f"Rank mismatch: F_{self.rank} vs F_{other.rank}")

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(f"x{letter}" if letter > 0 else f"x{-letter}^-1" for letter in self.letters)


def parse_signed_list(text: str) -> List[int]:
    """
    Parse the inline serialization "[1,-2,1]".

    Errors carry the character position of the problem.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FreeGroupError(f"Cannot parse word at position {e.pos}: {e.msg}") from e
    if not isinstance(data, list):
        raise FreeGroupError("Expected a JSON list of signed integers at position 0")
    for position, item in enumerate(data):
        if not isinstance(item, int) or isinstance(item, bool) or item == 0:
            raise FreeGroupError(f"Entry {item!r} at index {position} is not a nonzero integer")
    return data


# ============ Truncated Magnus series ============

class TruncatedSeries:
    """
    Integer noncommutative polynomial in X_1..X_d modulo monomials of degree >= cap.

    Monomials are index tuples; zero coefficients are never stored.
    """

    __slots__ = ("rank", "cap", "_coeffs")

    def __init__(self, rank: int, cap: int, coeffs: Optional[Dict[Monomial, int]] = None):
        if cap < 1:
            raise FreeGroupError(f"Truncation cap must be >= 1, got {cap}")
        self.rank = rank
        self.cap = cap
        self._coeffs: Dict[Monomial, int] = {}
        for monomial, c in (coeffs or {}).items():
            if len(monomial) >= cap or c == 0:
                continue
            if any(i < 1 or i > rank for i in monomial):
                raise FreeGroupError(f"Monomial {monomial} uses a variable outside X_1..X_{rank}")
            self._coeffs[tuple(monomial)] = c

    @classmethod
    def one(cls, rank: int, cap: int) -> "TruncatedSeries":
        return cls(rank, cap, {(): 1})

    @property
    def coeffs(self) -> Dict[Monomial, int]:
        return dict(self._coeffs)

    def coefficient(self, monomial: Sequence[int]) -> int:
        return self._coeffs.get(tuple(monomial), 0)

    def _check(self, other: "TruncatedSeries") -> None:
        if (self.rank, self.cap) != (other.rank, other.cap):
            raise FreeGroupError(
                f"Series live in different rings: (d={self.rank}, cap={self.cap}) vs (d={other.rank}, cap={other.cap})"
            )

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        out = dict(self._coeffs)
        for m, c in other._coeffs.items():
            out[m] = out.get(m, 0) + c
        return TruncatedSeries(self.rank, self.cap, out)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        out = dict(self._coeffs)
        for m, c in other._coeffs.items():
            out[m] = out.get(m, 0) - c
        return TruncatedSeries(self.rank, self.cap, out)

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        out: Dict[Monomial, int] = {}
        for m1, c1 in self._coeffs.items():
            room = self.cap - len(m1)
            for m2, c2 in other._coeffs.items():
                if len(m2) < room:
                    key = m1 + m2
                    out[key] = out.get(key, 0) + c1 * c2
        return TruncatedSeries(self.rank, self.cap, out)

    def times_letter(self, letter: int) -> "TruncatedSeries":
        """Right multiplication by the expansion of x_i^{+-1}."""
        i = abs(letter)
        out = dict(self._coeffs)
        if letter > 0:
            for m, c in self._coeffs.items():
                if len(m) + 1 < self.cap:
                    key = m + (i,)
                    out[key] = out.get(key, 0) + c
        else:
            # (1 + X)^-1 = 1 - X + X^2 - ...
            for m, c in self._coeffs.items():
                for k in range(1, self.cap - len(m)):
                    key = m + (i,) * k
                    out[key] = out.get(key, 0) + (-1) ** k * c
        return TruncatedSeries(self.rank, self.cap, out)

    def truncate(self, cap: int) -> "TruncatedSeries":
        if cap > self.cap:
            raise FreeGroupError(f"Cannot raise truncation from {self.cap} to {cap}")
        return TruncatedSeries(self.rank, cap, self._coeffs)

    def substitute(self, images: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        """
        Substitute X_k -> images[k-1] - 1 and re-truncate.

        Every image must have constant term 1 so the substitution is well defined modulo the cap.
        """
        if len(images) != self.rank:
            raise FreeGroupError(f"Expected {self.rank} images, got {len(images)}")
        one = TruncatedSeries.one(images[0].rank, self.cap)
        shifted = []
        for image in images:
            if image.coefficient(()) != 1:
                raise FreeGroupError("Substituted series must have constant term 1")
            shifted.append(image.truncate(self.cap) - one)
        total = TruncatedSeries(images[0].rank, self.cap)
        for monomial, c in self._coeffs.items():
            term = TruncatedSeries(images[0].rank, self.cap, {(): c})
            for i in monomial:
                term = term * shifted[i - 1]
            total = total + term
        return total

    def lowest_degree(self) -> Optional[int]:
        """Least positive degree with a nonzero coefficient, or None."""
        degrees = [len(m) for m in self._coeffs if m]
        return min(degrees) if degrees else None

    def degree_part(self, k: int) -> Dict[Monomial, int]:
        return {m: c for m, c in self._coeffs.items() if len(m) == k}

    def to_json(self) -> List[List]:
        return [[list(m), c] for m, c in sorted(self._coeffs.items(), key=lambda item: (len(item[0]), item[0]))]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.rank, self.cap, self._coeffs) == (other.rank, other.cap, other._coeffs)

    def __hash__(self) -> int:
        return hash((self.rank, self.cap, frozenset(self._coeffs.items())))

    def __repr__(self) -> str:
        terms = []
        for m, c in sorted(self._coeffs.items(), key=lambda item: (len(item[0]), item[0])):
            name = "".join(f"X{i}" for i in m) or "1"
            terms.append(f"{c:+d}*{name}")
        return f"TruncatedSeries(d={self.rank}, cap={self.cap}: {' '.join(terms) or '0'})"


def magnus_expand(w: FreeWord, cap: int) -> TruncatedSeries:
    """Magnus expansion of w, truncated at degree cap."""
    if cap < 1:
        raise FreeGroupError(f"Truncation cap must be >= 1, got {cap}")
    series = TruncatedSeries.one(w.rank, cap)
    for letter in w.letters:
        series = series.times_letter(letter)
    return series


def lcs_depth(w: FreeWord, cap: int) -> Union[int, float, None]:
    """
    Lower central series depth of w seen through a degree-cap Magnus truncation.

    Returns:
        k when w lies in gamma_k but not gamma_{k+1} (k < cap),
        None when every term of degree < cap vanishes (w lies in gamma_cap),
        math.inf for the identity element
    """
    if cap < 2:
        raise FreeGroupError(f"lcs_depth needs cap >= 2, got {cap}")
    if w.is_identity():
        return math.inf
    return magnus_expand(w, cap).lowest_degree()


# ============ Stallings graphs ============

Edge = Tuple[int, int, int]  # (source, generator index > 0, target)


def _spell(edges: List[Edge], start: int, end: int, word: FreeWord, next_vertex: int) -> int:
    """Append a path from start to end reading word; returns the next free vertex id."""
    if word.is_identity():
        if start != end:
            raise FreeGroupError("Cannot spell the empty word between distinct vertices")
        return next_vertex
    current = start
    for position, letter in enumerate(word.letters):
        if position == len(word.letters) - 1:
            target = end
        else:
            target = next_vertex
            next_vertex += 1
        if letter > 0:
            edges.append((current, letter, target))
        else:
            edges.append((target, -letter, current))
        current = target
    return next_vertex


def _labelled_graph(edges: Iterable[Edge], nodes: Iterable[int] = ()) -> nx.MultiDiGraph:
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(nodes)
    for (u, i, v) in edges:
        graph.add_edge(u, v, label=i)
    return graph


def _edges_of(graph: nx.MultiDiGraph) -> FrozenSet[Edge]:
    return frozenset((u, i, v) for u, v, i in graph.edges(data="label"))


def _fold(graph: nx.MultiDiGraph) -> Tuple[nx.MultiDiGraph, UnionFind]:
    """Stallings-fold until no vertex has two equally labelled edges in one direction."""
    uf = UnionFind(graph.nodes)
    while True:
        merged = False
        for v in graph.nodes:
            for incident, far_end in ((graph.out_edges, 1), (graph.in_edges, 0)):
                ends: Dict[int, set] = defaultdict(set)
                for edge in incident(v, data="label"):
                    ends[edge[2]].add(uf[edge[far_end]])
                for group in ends.values():
                    if len(group) > 1:
                        uf.union(*group)
                        merged = True
        if not merged:
            return graph, uf
        graph = _labelled_graph({(uf[u], i, uf[v]) for u, v, i in graph.edges(data="label")},
                                {uf[v] for v in graph.nodes})


def _transitions(edges: Iterable[Edge]) -> Dict[Tuple[int, int], int]:
    table: Dict[Tuple[int, int], int] = {}
    for (u, i, v) in edges:
        table[(u, i)] = v
        table[(v, -i)] = u
    return table


def _trace(table: Dict[Tuple[int, int], int], start: int, word: FreeWord) -> Optional[int]:
    current = start
    for letter in word.letters:
        nxt = table.get((current, letter))
        if nxt is None:
            return None
        current = nxt
    return current


def _prune_to_core(graph: nx.MultiDiGraph, base: int) -> nx.MultiDiGraph:
    """Strip hanging trees: repeatedly drop non-base vertices of degree at most one."""
    core = graph.copy()
    while True:
        leaves = [v for v, k in core.degree() if k <= 1 and v != base]
        if not leaves:
            return core
        core.remove_nodes_from(leaves)


def _relabel(graph: nx.MultiDiGraph, base: int) -> nx.MultiDiGraph:
    """Renumber vertices 0..n-1 in breadth-first shortlex order from the base."""
    table = _transitions(_edges_of(graph))
    letters = sorted({letter for (_, letter) in table}, key=letter_key)

    def successors(v: int):
        return iter([table[(v, letter)] for letter in letters if (v, letter) in table])

    order = {base: 0}
    for _, w in nx.generic_bfs_edges(graph, base, neighbors=successors):
        order[w] = len(order)
    return nx.relabel_nodes(graph, order)


@dataclass(frozen=True)
class SubgroupGraph:
    """
    Folded core Stallings graph of H = <generators> in F_d, based at vertex 0.

    Recognizes exactly the reduced words of H as closed paths at the base.
    """

    rank: int
    generators: Tuple[FreeWord, ...]
    edges: FrozenSet[Edge]
    vertex_count: int
    base: int = 0
    folded: bool = True
    _table: Dict[Tuple[int, int], int] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_table", _transitions(self.edges))

    def transitions(self) -> Dict[Tuple[int, int], int]:
        return dict(self._table)

    def to_networkx(self) -> nx.MultiDiGraph:
        """The graph with one directed edge per positive letter, labelled by generator index."""
        return _labelled_graph(self.edges, range(self.vertex_count))

    def is_finite_index(self) -> bool:
        """A folded core graph is a finite cover of the rose iff every vertex has all 2d directions."""
        return all(k == 2 * self.rank for _, k in self.to_networkx().degree())

    def to_json(self) -> Dict:
        return {
            "rank": self.rank,
            "generators": [g.to_json() for g in self.generators],
            "vertices": self.vertex_count,
            "edges": sorted([list(e) for e in self.edges])
        }


def fold(generators: Sequence[FreeWord], rank: Optional[int] = None) -> SubgroupGraph:
    """
    Build the folded core graph of the subgroup generated by the given words.

    Args:
        generators: Words of one common rank (may be empty, giving the trivial subgroup)
        rank: Required when generators is empty
    """
    ranks = {g.rank for g in generators}
    if len(ranks) > 1:
        raise FreeGroupError(f"Generators of mixed ranks: {sorted(ranks)}")
    if ranks:
        if rank is not None and rank not in ranks:
            raise FreeGroupError(f"Generators have rank {ranks.pop()}, expected {rank}")
        rank = ranks.pop()
    if rank is None:
        raise FreeGroupError("The rank of a trivial subgroup must be given explicitly")

    edges: List[Edge] = []
    next_vertex = 1
    for g in generators:
        if not g.is_identity():
            next_vertex = _spell(edges, 0, 0, g, next_vertex)
    folded, uf = _fold(_labelled_graph(edges, [0]))
    base = uf[0]
    core = _relabel(_prune_to_core(folded, base), base)
    logger.debug("Folded %d generators into a graph with %d vertices", len(generators), core.number_of_nodes())
    return SubgroupGraph(rank=rank, generators=tuple(generators), edges=_edges_of(core),
                         vertex_count=core.number_of_nodes())


def subgroup_contains(H: SubgroupGraph, w: FreeWord) -> bool:
    """True iff w lies in H, decided by tracing w from the base vertex."""
    if H.rank != w.rank:
        raise FreeGroupError(f"Rank mismatch: subgroup of F_{H.rank}, word in F_{w.rank}")
    return _trace(H._table, H.base, w) == H.base


@lru_cache(maxsize=4096)
def _double_coset_automaton(H: SubgroupGraph, g: FreeWord) -> Tuple[Dict[Tuple[int, int], int], int, int]:
    """Two copies of H joined by a path spelling g, folded. Returns (transitions, start, end)."""
    if H.rank != g.rank:
        raise FreeGroupError(f"Rank mismatch: subgroup of F_{H.rank}, word in F_{g.rank}")
    if g.is_identity():
        return dict(H._table), H.base, H.base
    offset = H.vertex_count
    edges: List[Edge] = list(H.edges)
    edges.extend((u + offset, i, v + offset) for (u, i, v) in H.edges)
    start, end = H.base, H.base + offset
    _spell(edges, start, end, g, 2 * offset)
    folded, uf = _fold(_labelled_graph(edges, [start, end]))
    return _transitions(_edges_of(folded)), uf[start], uf[end]


def double_coset_equal(H: SubgroupGraph, g: FreeWord, g_prime: FreeWord) -> bool:
    """True iff g' lies in the double coset H g H."""
    if g_prime.rank != H.rank:
        raise FreeGroupError(f"Rank mismatch: subgroup of F_{H.rank}, word in F_{g_prime.rank}")
    table, start, end = _double_coset_automaton(H, g)
    return _trace(table, start, g_prime) == end


def shortlex_representative(H: SubgroupGraph, g: FreeWord) -> FreeWord:
    """
    The shortlex-least element of H g H.

    Shortest paths in the folded automaton never backtrack, so the greedy shortlex walk along a
    breadth-first distance field reads a reduced word.
    """
    table, start, end = _double_coset_automaton(H, g)
    adjacency = nx.Graph([(u, w) for (u, _), w in table.items()])
    adjacency.add_node(end)
    distance = nx.single_source_shortest_path_length(adjacency, end)
    letters = sorted({letter for (_, letter) in table}, key=letter_key)
    word: List[int] = []
    current = start
    while current != end:
        for letter in letters:
            nxt = table.get((current, letter))
            if nxt is not None and distance.get(nxt) == distance[current] - 1:
                word.append(letter)
                current = nxt
                break
    return FreeWord(H.rank, tuple(word))


class FreeGroupService:
    """Service facade over the free group engine."""

    @staticmethod
    def reduce(letters: Iterable[int], rank: int) -> FreeWord:
        return reduce(letters, rank)

    @staticmethod
    def magnus_expand(w: FreeWord, cap: int) -> TruncatedSeries:
        return magnus_expand(w, cap)

    @staticmethod
    def lcs_depth(w: FreeWord, cap: int) -> Union[int, float, None]:
        return lcs_depth(w, cap)

    @staticmethod
    def fold(generators: Sequence[FreeWord], rank: Optional[int] = None) -> SubgroupGraph:
        return fold(generators, rank)

    @staticmethod
    def subgroup_contains(H: SubgroupGraph, w: FreeWord) -> bool:
        return subgroup_contains(H, w)

    @staticmethod
    def double_coset_equal(H: SubgroupGraph, g: FreeWord, g_prime: FreeWord) -> bool:
        return double_coset_equal(H, g, g_prime)

    @staticmethod
    def shortlex_representative(H: SubgroupGraph, g: FreeWord) -> FreeWord:
        return shortlex_representative(H, g)


# Global free group service instance
freegroup_service = FreeGroupService()
