"""
premcheck Double Point Obstruction
Signed sums of double cosets H g H in a free group G, reduced by the two moves that
leave the obstruction unchanged:

- cancel two points of opposite sign in the same double coset
- remove a single point whose double coset is H itself (not allowed for coverings)

A sum is zero when nothing survives; survivors are an n-prem obstruction witness.
"""

import logging
import random
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from app.services import PremError
from app.services.freegroup import (
    FreeGroupError,
    FreeWord,
    SubgroupGraph,
    double_coset_equal,
    fold,
    shortlex_representative,
    subgroup_contains,
)


logger = logging.getLogger(__name__)

Entry = Tuple[int, FreeWord]


class ThetaError(PremError):
    """Raised for malformed double coset sums."""


@dataclass(frozen=True)
class DoubleCosetSum:
    rank: int
    H: SubgroupGraph
    entries: Tuple[Entry, ...]
    covering: bool = False

    def __post_init__(self):
        if self.H.rank != self.rank:
            raise ThetaError(f"Subgroup lives in F_{self.H.rank}, sum in F_{self.rank}")
        for position, (sign, g) in enumerate(self.entries):
            if sign not in (1, -1):
                raise ThetaError(f"Entry {position} has sign {sign}; expected +1 or -1")
            if g.rank != self.rank:
                raise ThetaError(f"Entry {position} is a word of F_{g.rank}")

    @classmethod
    def from_json(cls, data: Dict) -> "DoubleCosetSum":
        """{rank, H: [[...], ...], covering, points: [{sign, word}]}"""
        try:
            rank = int(data["rank"])
            H = fold([FreeWord.from_json(w, rank) for w in data.get("H", [])], rank)
            entries = tuple(
                (int(p["sign"]), FreeWord.from_json(p["word"], rank)) for p in data.get("points", [])
            )
            covering = bool(data.get("covering", False))
        except (KeyError, TypeError) as e:
            raise ThetaError(f"Malformed double coset sum: missing or invalid field {e}") from e
        except FreeGroupError as e:
            raise ThetaError(str(e)) from e
        return cls(rank, H, entries, covering)

    def with_entries(self, entries: Sequence[Entry]) -> "DoubleCosetSum":
        return DoubleCosetSum(self.rank, self.H, tuple(entries), self.covering)

    def negated(self) -> "DoubleCosetSum":
        return self.with_entries([(-sign, g) for sign, g in self.entries])

    def to_json(self) -> Dict:
        return {
            "rank": self.rank,
            "H": [g.to_json() for g in self.H.generators],
            "covering": self.covering,
            "points": [{"sign": sign, "word": g.to_json()} for sign, g in self.entries]
        }


def _classes(s: DoubleCosetSum) -> Counter:
    """Net multiplicity per double coset, keyed by its shortlex representative."""
    net: Counter = Counter()
    for sign, g in s.entries:
        net[shortlex_representative(s.H, g)] += sign
    return net


def canonicalize(s: DoubleCosetSum) -> DoubleCosetSum:
    """
    Apply both moves until neither applies.

    Survivors are listed as shortlex-least representatives, one entry per unit of net
    multiplicity, in shortlex order.
    """
    net = _classes(s)
    if not s.covering:
        net.pop(FreeWord.identity(s.rank), None)
    entries: List[Entry] = []
    for rep in sorted(net, key=lambda w: w.shortlex_key()):
        count = net[rep]
        entries.extend([(1 if count > 0 else -1, rep)] * abs(count))
    return s.with_entries(entries)


def is_zero(s: DoubleCosetSum) -> bool:
    return not canonicalize(s).entries


Chooser = Callable[[List[Tuple]], Tuple]


def reduce_by_moves(s: DoubleCosetSum, chooser: Optional[Chooser] = None) -> DoubleCosetSum:
    """
    Apply the two moves one at a time in the order picked by chooser.

    chooser receives the list of applicable moves, ("cancel", i, j) or ("remove", i), and
    returns one; the default takes the first. Equality of double cosets is decided pairwise
    by the folded automaton, independently of canonicalize.
    """
    chooser = chooser or (lambda moves: moves[0])
    entries = list(s.entries)
    n = len(entries)
    same = [[double_coset_equal(s.H, entries[i][1], entries[j][1]) for j in range(n)] for i in range(n)]
    in_h = [subgroup_contains(s.H, g) for _, g in entries]
    alive = list(range(n))
    while True:
        moves: List[Tuple] = []
        for a, i in enumerate(alive):
            if in_h[i] and not s.covering:
                moves.append(("remove", i))
            for j in alive[a + 1:]:
                if entries[i][0] == -entries[j][0] and same[i][j]:
                    moves.append(("cancel", i, j))
        if not moves:
            break
        move = chooser(moves)
        for index in move[1:]:
            alive.remove(index)
    return s.with_entries([entries[i] for i in alive])


def random_chooser(rng: random.Random) -> Chooser:
    return lambda moves: rng.choice(moves)


def same_classes(a: DoubleCosetSum, b: DoubleCosetSum) -> bool:
    """Whether two sums list the same multiset of signed double cosets."""
    if a.H != b.H:
        raise ThetaError("Sums over different subgroups")

    def multiset(s: DoubleCosetSum) -> Counter:
        return Counter((sign, shortlex_representative(s.H, g)) for sign, g in s.entries)

    return multiset(a) == multiset(b)


def _random_element(H: SubgroupGraph, rng: random.Random, length: int) -> FreeWord:
    element = FreeWord.identity(H.rank)
    for _ in range(length):
        if not H.generators:
            break
        element = element * (rng.choice(H.generators) ** rng.choice((1, -1)))
    return element


def paired(rank: int, H: Sequence[FreeWord], words: Sequence[FreeWord], rng: random.Random,
           covering: bool = False, extra_h: int = 2) -> DoubleCosetSum:
    """
    A sum built to vanish: every word g appears once as +g and once as -h g h' with h, h' in H,
    and (non-covering only) extra points lying in H itself.
    """
    graph = fold(list(H), rank)
    entries: List[Entry] = []
    for g in words:
        sign = rng.choice((1, -1))
        moved = _random_element(graph, rng, 2) * g * _random_element(graph, rng, 2)
        entries.extend([(sign, g), (-sign, moved)])
    if not covering:
        for _ in range(extra_h):
            entries.append((rng.choice((1, -1)), _random_element(graph, rng, 3)))
    rng.shuffle(entries)
    return DoubleCosetSum(rank, graph, tuple(entries), covering)


class ThetaService:
    """Service facade over the double point obstruction."""

    @staticmethod
    def canonicalize(s: DoubleCosetSum) -> DoubleCosetSum:
        return canonicalize(s)

    @staticmethod
    def is_zero(s: DoubleCosetSum) -> bool:
        return is_zero(s)

    @staticmethod
    def reduce_by_moves(s: DoubleCosetSum, chooser: Optional[Chooser] = None) -> DoubleCosetSum:
        return reduce_by_moves(s, chooser)


# Global theta service instance
theta_service = ThetaService()
