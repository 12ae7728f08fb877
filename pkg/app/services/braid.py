"""
premcheck Braid Engine
Braid words, underlying permutations, the Artin representation and the
triviality tests built on it.

Conventions (fixed once, asserted by tests):
- Braid words act left to right: the Artin action of b1*b2 applies b1 first.
- sigma_i acts by x_i -> x_i x_{i+1} x_i^-1, x_{i+1} -> x_i and is the positive
  half-twist, contributing +1 to the crossing count of the strands it swaps.
- Permutations compose left to right as well: (p * q)(i) = q(p(i)).
"""

import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from functools import reduce as fold_left
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from app.services import PremError
from app.services.freegroup import FreeWord, reduce
from app.services.linkhomotopy import rf_equal


logger = logging.getLogger(__name__)

HUMPHRIES_PRIMES = (2, 3, 5)


class BraidError(PremError):
    """Raised for malformed braid words, strand mismatches and impure input."""


# ============ Permutations ============

@dataclass(frozen=True)
class Permutation:
    """Bijection of {0..d-1}; printed and serialized 1-based."""

    images: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise BraidError(f"Not a permutation: {[i + 1 for i in self.images]}")

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(tuple(range(d)))

    @classmethod
    def transposition(cls, i: int, j: int, d: int) -> "Permutation":
        images = list(range(d))
        images[i], images[j] = images[j], images[i]
        return cls(tuple(images))

    @classmethod
    def from_json(cls, data: Sequence[int]) -> "Permutation":
        """From a 1-based image list, e.g. [2, 1, 3]."""
        return cls(tuple(int(i) - 1 for i in data))

    @classmethod
    def from_cycles(cls, text: str, d: int) -> "Permutation":
        """From 1-based cycle notation such as "(1 2)(3 4 5)"; "()" is the identity."""
        images = list(range(d))
        for cycle in re.findall(r"\(([^()]*)\)", text):
            points = [int(p) - 1 for p in re.split(r"[\s,]+", cycle.strip()) if p]
            if any(p < 0 or p >= d for p in points):
                raise BraidError(f"Cycle ({cycle}) leaves 1..{d}")
            for a, b in zip(points, points[1:] + points[:1]):
                images[a] = b
        return cls(tuple(images))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if other.degree != self.degree:
            raise BraidError(f"Cannot compose permutations of {self.degree} and {other.degree} points")
        return Permutation(tuple(other.images[i] for i in self.images))

    def inverse(self) -> "Permutation":
        out = [0] * self.degree
        for i, j in enumerate(self.images):
            out[j] = i
        return Permutation(tuple(out))

    def conjugate(self, by: "Permutation") -> "Permutation":
        """by^-1 * self * by."""
        return by.inverse() * self * by

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def cycles(self) -> List[Tuple[int, ...]]:
        seen = set()
        out = []
        for start in range(self.degree):
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            nxt = self.images[start]
            while nxt != start:
                cycle.append(nxt)
                seen.add(nxt)
                nxt = self.images[nxt]
            out.append(tuple(cycle))
        return out

    def order(self) -> int:
        return fold_left(lambda a, b: a * b // math.gcd(a, b), (len(c) for c in self.cycles()), 1)

    def cycle_string(self) -> str:
        parts = ["(" + " ".join(str(p + 1) for p in c) + ")" for c in self.cycles() if len(c) > 1]
        return "".join(parts) or "()"

    def to_json(self) -> List[int]:
        return [i + 1 for i in self.images]

    def __str__(self) -> str:
        return self.cycle_string()


def generated_orbits(generators: Sequence[Permutation], d: int) -> List[set]:
    """Orbits of the subgroup of S_d generated by the given permutations."""
    graph = nx.Graph()
    graph.add_nodes_from(range(d))
    graph.add_edges_from((i, j) for p in generators for i, j in enumerate(p.images))
    return sorted(nx.connected_components(graph), key=min)


# ============ Braid words ============

@dataclass(frozen=True)
class BraidWord:
    """A word in sigma_1..sigma_{d-1}; letter i is sigma_i, -i is its inverse."""

    strands: int
    letters: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.strands < 1:
            raise BraidError(f"A braid needs at least one strand, got {self.strands}")
        for position, letter in enumerate(self.letters):
            if not isinstance(letter, int) or letter == 0 or abs(letter) >= self.strands:
                raise BraidError(
                    f"Letter {letter!r} at position {position} is not a generator of B_{self.strands}"
                )

    @classmethod
    def from_json(cls, data: Sequence[int], strands: Optional[int] = None) -> "BraidWord":
        """Signed integer list ([1,-2] = sigma_1 sigma_2^-1); strands default to max index + 1."""
        letters = tuple(int(x) for x in data)
        if strands is None:
            strands = max((abs(x) for x in letters), default=0) + 1
        return cls(strands, letters)

    def to_json(self) -> List[int]:
        return list(self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def _check(self, other: "BraidWord") -> None:
        if other.strands != self.strands:
            raise BraidError(f"Strand mismatch: B_{self.strands} vs B_{other.strands}")

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        self._check(other)
        return BraidWord(self.strands, self.letters + other.letters)

    def inverse(self) -> "BraidWord":
        return BraidWord(self.strands, tuple(-x for x in reversed(self.letters)))

    def __pow__(self, n: int) -> "BraidWord":
        base = self if n >= 0 else self.inverse()
        return BraidWord(self.strands, base.letters * abs(n))

    def commutator(self, other: "BraidWord") -> "BraidWord":
        return self * other * self.inverse() * other.inverse()

    def purify(self) -> "BraidWord":
        """b followed by its letters in reverse order: always a pure braid."""
        return BraidWord(self.strands, self.letters + tuple(reversed(self.letters)))

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(f"s{x}" if x > 0 else f"s{-x}^-1" for x in self.letters)


def sigma(i: int, strands: int, power: int = 1) -> BraidWord:
    return BraidWord(strands, ((i if power > 0 else -i),) * abs(power))


def pure_braid_generator(i: int, j: int, strands: int) -> BraidWord:
    """A_ij = s_{j-1} ... s_{i+1} s_i^2 s_{i+1}^-1 ... s_{j-1}^-1 for 1 <= i < j <= d."""
    if not 1 <= i < j <= strands:
        raise BraidError(f"A_{i}{j} needs 1 <= i < j <= {strands}")
    down = tuple(range(j - 1, i, -1))
    return BraidWord(strands, down + (i, i) + tuple(-k for k in reversed(down)))


def full_twist(strands: int) -> BraidWord:
    """(s_1 ... s_{d-1})^d."""
    return BraidWord(strands, tuple(range(1, strands)) * strands)


# ============ Conjugacy automorphisms ============

def _strip_conjugator(w: FreeWord, j: int) -> FreeWord:
    # w x_j w^-1 does not change when w absorbs powers of x_j on the right
    letters = list(w.letters)
    while letters and abs(letters[-1]) == j:
        letters.pop()
    return FreeWord(w.rank, tuple(letters))


@dataclass(frozen=True)
class ConjugacyAutomorphism:
    """
    Endomorphism x_i -> w_i x_{pi(i)} w_i^-1 of F_d fixing x_1...x_d.

    Conjugators are normalized so that w_i never ends in x_{pi(i)}^{+-1}; with that
    normalization two automorphisms are equal iff their fields are equal.
    """

    rank: int
    permutation: Permutation
    conjugators: Tuple[FreeWord, ...]

    def __post_init__(self):
        if self.permutation.degree != self.rank or len(self.conjugators) != self.rank:
            raise BraidError("Permutation and conjugators must both have one entry per generator")
        normalized = tuple(
            _strip_conjugator(w, self.permutation(i) + 1) for i, w in enumerate(self.conjugators)
        )
        object.__setattr__(self, "conjugators", normalized)
        product = FreeWord(self.rank, tuple(range(1, self.rank + 1)))
        if product.substitute(self.images()) != product:
            raise BraidError("Automorphism does not fix the product x_1...x_d")

    @classmethod
    def identity(cls, rank: int) -> "ConjugacyAutomorphism":
        return cls(rank, Permutation.identity(rank), tuple(FreeWord.identity(rank) for _ in range(rank)))

    @classmethod
    def from_images(cls, images: Sequence[FreeWord]) -> "ConjugacyAutomorphism":
        """Read each image as w x_j w^-1; rejects images that are not conjugates of generators."""
        rank = images[0].rank
        targets, conjugators = [], []
        for i, image in enumerate(images):
            letters = image.letters
            half = len(letters) // 2
            if len(letters) % 2 == 0 or letters[half] < 0:
                raise BraidError(f"Image of x{i + 1} is not a conjugate of a generator: {image}")
            prefix = FreeWord(rank, letters[:half])
            if prefix.inverse().letters != letters[half + 1:]:
                raise BraidError(f"Image of x{i + 1} is not a conjugate of a generator: {image}")
            targets.append(letters[half] - 1)
            conjugators.append(prefix)
        return cls(rank, Permutation(tuple(targets)), tuple(conjugators))

    def image(self, i: int) -> FreeWord:
        """Image of x_{i+1} (0-based index)."""
        w = self.conjugators[i]
        generator = FreeWord.generator(self.permutation(i) + 1, self.rank)
        return generator.conjugate(w)

    def images(self) -> Tuple[FreeWord, ...]:
        return tuple(self.image(i) for i in range(self.rank))

    def apply(self, w: FreeWord) -> FreeWord:
        return w.substitute(self.images())

    def compose(self, other: "ConjugacyAutomorphism") -> "ConjugacyAutomorphism":
        """self first, then other."""
        if other.rank != self.rank:
            raise BraidError(f"Rank mismatch: {self.rank} vs {other.rank}")
        conjugators = tuple(
            other.apply(w) * other.conjugators[self.permutation(i)]
            for i, w in enumerate(self.conjugators)
        )
        return ConjugacyAutomorphism(self.rank, self.permutation * other.permutation, conjugators)

    def is_identity(self) -> bool:
        return self.permutation.is_identity() and all(w.is_identity() for w in self.conjugators)

    def to_json(self) -> Dict:
        return {
            "rank": self.rank,
            "permutation": self.permutation.to_json(),
            "conjugators": [w.to_json() for w in self.conjugators]
        }


def _generator_step(letters: List[int], i: int, positive: bool, rank: int) -> FreeWord:
    """Apply the Artin automorphism of sigma_i^{+-1} to a word."""
    out: List[int] = []
    for letter in letters:
        a = abs(letter)
        if a == i:
            piece = [i, i + 1, -i] if positive else [i + 1]
        elif a == i + 1:
            piece = [i] if positive else [-(i + 1), i, i + 1]
        else:
            piece = [a]
        if letter < 0:
            piece = [-x for x in reversed(piece)]
        out.extend(piece)
    return reduce(out, rank)


def artin_action(b: BraidWord) -> ConjugacyAutomorphism:
    """Artin image of b in Aut(F_d), left factor applied first."""
    d = b.strands
    words = [FreeWord.generator(i, d) for i in range(1, d + 1)]
    for letter in b.letters:
        words = [_generator_step(list(w.letters), abs(letter), letter > 0, d) for w in words]
    return ConjugacyAutomorphism.from_images(words)


def permutation_of(b: BraidWord) -> Permutation:
    """Underlying permutation; sigma_i maps to the transposition (i i+1)."""
    p = Permutation.identity(b.strands)
    for letter in b.letters:
        p = p * Permutation.transposition(abs(letter) - 1, abs(letter), b.strands)
    return p


def is_trivial_braid(b: BraidWord) -> bool:
    """Exact word problem in B_d through the faithful Artin representation."""
    return artin_action(b).is_identity()


def linking_matrix(b: BraidWord) -> np.ndarray:
    """
    Pairwise linking numbers of a pure braid by a position-tracking sweep.

    Entry (i, j) is half the signed number of crossings between strands i and j.
    """
    if not permutation_of(b).is_identity():
        raise BraidError(f"Linking numbers need a pure braid; {b} permutes strands as {permutation_of(b)}")
    d = b.strands
    crossings = np.zeros((d, d), dtype=int)
    strand_at = list(range(d))
    for letter in b.letters:
        i = abs(letter) - 1
        s, t = strand_at[i], strand_at[i + 1]
        sign = 1 if letter > 0 else -1
        crossings[s, t] += sign
        crossings[t, s] += sign
        strand_at[i], strand_at[i + 1] = t, s
    return crossings // 2


def longitude_linking(b: BraidWord) -> np.ndarray:
    """Linking numbers read off the abelianized Artin conjugators (test oracle for the sweep)."""
    automorphism = artin_action(b)
    if not automorphism.permutation.is_identity():
        raise BraidError("Longitudes are only defined for pure braids")
    d = b.strands
    out = np.zeros((d, d), dtype=int)
    for i, w in enumerate(automorphism.conjugators):
        for j in range(d):
            if j != i:
                out[i, j] = w.exponent_sum(j + 1)
    return out


def hb_is_trivial(b: BraidWord) -> bool:
    """Triviality in HB_d: the Artin image read in Aut(F_d / mu_0) is the identity."""
    automorphism = artin_action(b)
    if not automorphism.permutation.is_identity():
        return False
    return all(
        rf_equal(image, FreeWord.generator(i + 1, b.strands))
        for i, image in enumerate(automorphism.images())
    )


class HumphriesVerdict(str, Enum):
    INFINITE_ORDER = "INFINITE_ORDER"
    NO_CONCLUSION = "NO_CONCLUSION"


@dataclass(frozen=True)
class HumphriesCertificate:
    verdict: HumphriesVerdict
    permutation: Permutation
    permutation_order: int
    divisor_witness: Optional[int]

    def to_json(self) -> Dict:
        return {
            "verdict": self.verdict.value,
            "permutation": self.permutation.cycle_string(),
            "permutation_order": self.permutation_order,
            "divisor_witness": self.divisor_witness
        }


def divisor_witness(order: int) -> Optional[int]:
    """Least prime among 2, 3, 5 dividing order, if any."""
    return next((p for p in HUMPHRIES_PRIMES if order % p == 0), None)


def humphries_certificate(b: BraidWord) -> HumphriesCertificate:
    """INFINITE_ORDER in HB_d whenever the permutation order is divisible by 2, 3 or 5."""
    p = permutation_of(b)
    order = p.order()
    witness = divisor_witness(order)
    verdict = HumphriesVerdict.INFINITE_ORDER if witness else HumphriesVerdict.NO_CONCLUSION
    return HumphriesCertificate(verdict, p, order, witness)


def covering_lift_check(genus: int, images: Sequence[BraidWord]) -> bool:
    """
    Whether braids for the free generators x_1, y_1, ..., x_g, y_g of the punctured
    genus-g surface extend to pi_1 of the closed surface, i.e. [b1,b2]...[b_{2g-1},b_{2g}] = 1.
    """
    if genus < 0:
        raise BraidError(f"Genus must be non-negative, got {genus}")
    if len(images) != 2 * genus:
        raise BraidError(f"Genus {genus} needs {2 * genus} braids, got {len(images)}")
    if genus == 0:
        return True
    strands = {b.strands for b in images}
    if len(strands) != 1:
        raise BraidError(f"Braids on different numbers of strands: {sorted(strands)}")
    d = strands.pop()
    relator = BraidWord(d)
    for k in range(genus):
        relator = relator * images[2 * k].commutator(images[2 * k + 1])
    trivial = is_trivial_braid(relator)
    logger.debug("Surface relator of length %d is %s", len(relator), "trivial" if trivial else "nontrivial")
    return trivial


class BraidService:
    """Service facade over the braid engine."""

    @staticmethod
    def permutation_of(b: BraidWord) -> Permutation:
        return permutation_of(b)

    @staticmethod
    def artin_action(b: BraidWord) -> ConjugacyAutomorphism:
        return artin_action(b)

    @staticmethod
    def is_trivial_braid(b: BraidWord) -> bool:
        return is_trivial_braid(b)

    @staticmethod
    def linking_matrix(b: BraidWord) -> np.ndarray:
        return linking_matrix(b)

    @staticmethod
    def hb_is_trivial(b: BraidWord) -> bool:
        return hb_is_trivial(b)

    @staticmethod
    def humphries_certificate(b: BraidWord) -> HumphriesCertificate:
        return humphries_certificate(b)

    @staticmethod
    def covering_lift_check(genus: int, images: Sequence[BraidWord]) -> bool:
        return covering_lift_check(genus, images)


# Global braid service instance
braid_service = BraidService()
