"""
premcheck Automorphism Tower Engine
Finite levels of the nilpotent tower Aut(F_d / gamma_n) seen through truncated Magnus series,
plus the 2-prem verdict for torsion elements of the transverse fundamental group.

A level-n image keeps every monomial of degree < n, which is exactly the information that
survives in F_d / gamma_n.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

from app.services import PremError
from app.services.braid import (
    BraidWord,
    ConjugacyAutomorphism,
    Permutation,
    artin_action,
    divisor_witness,
)
from app.services.freegroup import FreeWord, TruncatedSeries, magnus_expand


logger = logging.getLogger(__name__)

TORSION_CRITERION = "torsion-monodromy: order of the monodromy permutation divisible by 2, 3 or 5"
TORSION_REF = "Corollary 2.10"


class TowerError(PremError):
    """Raised for level mismatches, bad levels and malformed tower elements."""


@dataclass(frozen=True)
class LevelImage:
    """Images of x_1..x_d in F_d / gamma_n, each a Magnus series truncated at cap n."""

    rank: int
    level: int
    images: Tuple[TruncatedSeries, ...]

    def __post_init__(self):
        if self.level < 2:
            raise TowerError(f"Tower levels start at 2, got {self.level}")
        if len(self.images) != self.rank:
            raise TowerError(f"Expected {self.rank} images, got {len(self.images)}")
        targets = []
        for i, image in enumerate(self.images):
            if (image.rank, image.cap) != (self.rank, self.level):
                raise TowerError(f"Image of x{i + 1} lives at the wrong level")
            linear = image.degree_part(1)
            if image.coefficient(()) != 1 or len(linear) != 1 or list(linear.values()) != [1]:
                raise TowerError(f"Image of x{i + 1} is not the expansion of a conjugate of a generator")
            targets.append(next(iter(linear))[0] - 1)
        if sorted(targets) != list(range(self.rank)):
            raise TowerError("Generator images do not permute the generators")
        product = TruncatedSeries.one(self.rank, self.level)
        for image in self.images:
            product = product * image
        if product != magnus_expand(FreeWord(self.rank, tuple(range(1, self.rank + 1))), self.level):
            raise TowerError("Level image does not fix the product x_1...x_d")
        object.__setattr__(self, "_targets", tuple(targets))

    @classmethod
    def identity(cls, rank: int, level: int) -> "LevelImage":
        return cls(rank, level, tuple(magnus_expand(FreeWord.generator(i, rank), level)
                                      for i in range(1, rank + 1)))

    @property
    def permutation(self) -> Permutation:
        """The level-2 shadow: x_i goes to a conjugate of x_{pi(i)}."""
        return Permutation(self._targets)

    def is_identity(self) -> bool:
        return self == LevelImage.identity(self.rank, self.level)

    def to_json(self) -> Dict:
        return {
            "rank": self.rank,
            "level": self.level,
            "images": [image.to_json() for image in self.images]
        }


def level_image(a: ConjugacyAutomorphism, n: int) -> LevelImage:
    """Truncate the Magnus expansions of the generator images at degree n."""
    if n < 2:
        raise TowerError(f"Tower levels start at 2, got {n}")
    return LevelImage(a.rank, n, tuple(magnus_expand(image, n) for image in a.images()))


def _check_same_level(p: LevelImage, q: LevelImage) -> None:
    if (p.rank, p.level) != (q.rank, q.level):
        raise TowerError(
            f"Level mismatch: (d={p.rank}, n={p.level}) vs (d={q.rank}, n={q.level})"
        )


def tower_equal(p: LevelImage, q: LevelImage) -> bool:
    _check_same_level(p, q)
    return p.images == q.images


def compose_levels(p: LevelImage, q: LevelImage) -> LevelImage:
    """p first, then q: x_i -> p_i with X_k replaced by q_k - 1."""
    _check_same_level(p, q)
    return LevelImage(p.rank, p.level, tuple(image.substitute(q.images) for image in p.images))


def truncate_level(p: LevelImage, n: int) -> LevelImage:
    """Forget down to level n."""
    if n < 2 or n > p.level:
        raise TowerError(f"Cannot truncate a level-{p.level} image to level {n}")
    return LevelImage(p.rank, n, tuple(image.truncate(n) for image in p.images))


def kernel_degree(a: ConjugacyAutomorphism, cap: int) -> Optional[int]:
    """
    Least level m in 2..cap at which a acts nontrivially.

    Returns:
        m, or None when a is invisible at every level up to cap
    """
    if cap < 2:
        raise TowerError(f"kernel_degree needs cap >= 2, got {cap}")
    top = level_image(a, cap)
    for m in range(2, cap + 1):
        if not truncate_level(top, m).is_identity():
            return m
    return None


def tower_profile(a: ConjugacyAutomorphism, cap: int) -> List[Dict]:
    """Per level 2..cap: whether a is visible, and its permutation shadow."""
    top = level_image(a, cap)
    profile = []
    for m in range(2, cap + 1):
        image = truncate_level(top, m)
        profile.append({
            "level": m,
            "trivial": image.is_identity(),
            "permutation": image.permutation.cycle_string()
        })
    return profile


def normality_check(a: BraidWord, b: BraidWord, n: int) -> bool:
    """
    Level-n triviality of a is preserved by conjugation with b.

    Returns True when Artin(a) and Artin(b^-1 a b) are either both trivial or both
    nontrivial at level n.
    """
    if a.strands != b.strands:
        raise TowerError(f"Strand mismatch: B_{a.strands} vs B_{b.strands}")
    before = level_image(artin_action(a), n).is_identity()
    after = level_image(artin_action(b.inverse() * a * b), n).is_identity()
    return before == after


class PremVerdict(str, Enum):
    NOT_2PREM = "NOT_2PREM"
    NO_CONCLUSION = "NO_CONCLUSION"


@dataclass(frozen=True)
class VerdictReport:
    verdict: PremVerdict
    torsion_order: int
    permutation: Permutation
    permutation_order: int
    divisor_witness: Optional[int]

    def to_json(self) -> Dict:
        return {
            "verdict": self.verdict.value,
            "torsion_order": self.torsion_order,
            "permutation": self.permutation.cycle_string(),
            "permutation_order": self.permutation_order,
            "divisor_witness": self.divisor_witness,
            "criterion": TORSION_CRITERION,
            "paper_ref": TORSION_REF
        }


def prem_verdict(torsion_order: int, monodromy: Permutation) -> VerdictReport:
    """
    Verdict for an element of finite order m >= 2 with monodromy permutation p.

    A generic map is not a 2-prem when such an element has monodromy of order divisible
    by 2, 3 or 5.
    """
    if torsion_order < 2:
        raise TowerError(f"Torsion order must be at least 2, got {torsion_order}")
    order = monodromy.order()
    witness = divisor_witness(order)
    verdict = PremVerdict.NOT_2PREM if witness else PremVerdict.NO_CONCLUSION
    logger.debug("Verdict %s for torsion %d, monodromy %s", verdict.value, torsion_order, monodromy)
    return VerdictReport(verdict, torsion_order, monodromy, order, witness)


class TowerService:
    """Service facade over the automorphism tower engine."""

    @staticmethod
    def level_image(a: ConjugacyAutomorphism, n: int) -> LevelImage:
        return level_image(a, n)

    @staticmethod
    def tower_equal(p: LevelImage, q: LevelImage) -> bool:
        return tower_equal(p, q)

    @staticmethod
    def kernel_degree(a: ConjugacyAutomorphism, cap: int) -> Optional[int]:
        return kernel_degree(a, cap)

    @staticmethod
    def tower_profile(a: ConjugacyAutomorphism, cap: int) -> List[Dict]:
        return tower_profile(a, cap)

    @staticmethod
    def prem_verdict(torsion_order: int, monodromy: Permutation) -> VerdictReport:
        return prem_verdict(torsion_order, monodromy)


# Global tower service instance
tower_service = TowerService()
