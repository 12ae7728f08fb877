"""
premcheck Link Homotopy Engine
Reduced Magnus calculus for the reduced free group F_d / mu_0.

The reduced ring is Z<X_1..X_d> modulo every monomial with a repeated variable.
Equality in F_d / mu_0 is decided by equality of reduced expansions; the "only if"
half of that (expansion 1 implies membership in mu_0) is the classical faithfulness
theorem for the reduced free group, imported rather than proved here.
Reports that depend on it carry FAITHFULNESS_NOTE.
"""

import itertools
import logging
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple


from app.config import config
from app.services import PremError
from app.services.freegroup import FreeWord


logger = logging.getLogger(__name__)

Monomial = Tuple[int, ...]

FAITHFULNESS_NOTE = (
    "assumes faithfulness of the reduced Magnus expansion on F_d/mu_0 "
    "(imported theorem; underlies injectivity of HB_d -> Aut(F_d/mu_0))"
)


class LinkHomotopyError(PremError):
    """Raised for repeated Milnor indices and rank mismatches."""


def basis_size(d: int) -> int:
    """Number of repetition-free monomials in d variables (constant included)."""
    return sum(factorial(d) // factorial(d - k) for k in range(d + 1))


def basis(d: int) -> List[Monomial]:
    """All repetition-free monomials, ordered by degree then lexicographically."""
    if not config.is_dense_rank(d):
        raise LinkHomotopyError(
            f"Dense basis is only materialized for d <= {config.DENSE_BASIS_MAX_RANK}, got {d}"
        )
    out: List[Monomial] = []
    for k in range(d + 1):
        out.extend(itertools.permutations(range(1, d + 1), k))
    return out


class ReducedTensor:
    """Sparse element of the reduced tensor ring; zero coefficients are never stored."""

    __slots__ = ("rank", "_coeffs")

    def __init__(self, rank: int, coeffs: Optional[Dict[Monomial, int]] = None):
        self.rank = rank
        self._coeffs: Dict[Monomial, int] = {}
        for monomial, c in (coeffs or {}).items():
            monomial = tuple(monomial)
            if c == 0 or len(set(monomial)) != len(monomial):
                continue
            if any(i < 1 or i > rank for i in monomial):
                raise LinkHomotopyError(f"Monomial {monomial} uses a variable outside X_1..X_{rank}")
            self._coeffs[monomial] = c

    @classmethod
    def one(cls, rank: int) -> "ReducedTensor":
        return cls(rank, {(): 1})

    def coefficient(self, monomial: Sequence[int]) -> int:
        return self._coeffs.get(tuple(monomial), 0)

    def items(self):
        return self._coeffs.items()

    def __mul__(self, other: "ReducedTensor") -> "ReducedTensor":
        if other.rank != self.rank:
            raise LinkHomotopyError(f"Rank mismatch: {self.rank} vs {other.rank}")
        out: Dict[Monomial, int] = {}
        for m1, c1 in self._coeffs.items():
            used = set(m1)
            for m2, c2 in other._coeffs.items():
                if used.isdisjoint(m2):
                    key = m1 + m2
                    out[key] = out.get(key, 0) + c1 * c2
        return ReducedTensor(self.rank, out)

    def times_letter(self, letter: int) -> "ReducedTensor":
        # X_i^2 = 0, so (1 + X_i)^-1 = 1 - X_i
        i = abs(letter)
        sign = 1 if letter > 0 else -1
        out = dict(self._coeffs)
        for m, c in self._coeffs.items():
            if i not in m:
                key = m + (i,)
                out[key] = out.get(key, 0) + sign * c
        return ReducedTensor(self.rank, out)

    def is_one(self) -> bool:
        return self._coeffs == {(): 1}

    def to_json(self) -> List[List]:
        """Sorted (monomial, coefficient) pairs; bit-exact across runs."""
        return [[list(m), c] for m, c in sorted(self._coeffs.items())]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReducedTensor):
            return NotImplemented
        return self.rank == other.rank and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self.rank, frozenset(self._coeffs.items())))

    def __repr__(self) -> str:
        terms = " ".join(f"{c:+d}*{''.join(f'X{i}' for i in m) or '1'}" for m, c in sorted(self._coeffs.items()))
        return f"ReducedTensor(d={self.rank}: {terms or '0'})"


def reduced_expand(w: FreeWord, rank: Optional[int] = None) -> ReducedTensor:
    """Reduced Magnus expansion of w; multiplicative, constant term 1."""
    if rank is not None and rank != w.rank:
        raise LinkHomotopyError(f"Word of rank {w.rank} expanded into a ring of rank {rank}")
    tensor = ReducedTensor.one(w.rank)
    for letter in w.letters:
        tensor = tensor.times_letter(letter)
    return tensor


def rf_equal(u: FreeWord, v: FreeWord) -> bool:
    """Equality in F_d / mu_0 (see FAITHFULNESS_NOTE)."""
    if u.rank != v.rank:
        raise LinkHomotopyError(f"Rank mismatch: {u.rank} vs {v.rank}")
    return reduced_expand(u) == reduced_expand(v)


def milnor_mu(w: FreeWord, index: Sequence[int]) -> int:
    """
    Coefficient of X_{i1}...X_{ik} in the reduced expansion of a longitude word.

    Args:
        w: Longitude representative in F_d
        index: Pairwise distinct variable indices in 1..d
    """
    index = tuple(index)
    if len(set(index)) != len(index):
        raise LinkHomotopyError(f"Milnor index {index} repeats a variable")
    if any(i < 1 or i > w.rank for i in index):
        raise LinkHomotopyError(f"Milnor index {index} leaves 1..{w.rank}")
    return reduced_expand(w).coefficient(index)


class LinkHomotopyService:
    """Service facade over the reduced Magnus calculus."""

    @staticmethod
    def reduced_expand(w: FreeWord) -> ReducedTensor:
        return reduced_expand(w)

    @staticmethod
    def rf_equal(u: FreeWord, v: FreeWord) -> bool:
        return rf_equal(u, v)

    @staticmethod
    def milnor_mu(w: FreeWord, index: Sequence[int]) -> int:
        return milnor_mu(w, index)


# Global link homotopy service instance
linkhomotopy_service = LinkHomotopyService()
