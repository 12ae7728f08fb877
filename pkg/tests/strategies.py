"""Seeded random inputs shared by the test modules."""

import random
from typing import List

from app.services.braid import BraidWord
from app.services.freegroup import FreeWord, reduce


def random_letters(rng: random.Random, rank: int, max_len: int) -> List[int]:
    return [rng.choice((1, -1)) * rng.randint(1, rank) for _ in range(rng.randint(0, max_len))]


def random_word(rng: random.Random, rank: int, max_len: int) -> FreeWord:
    return reduce(random_letters(rng, rank, max_len), rank)


def random_nontrivial_word(rng: random.Random, rank: int, max_len: int) -> FreeWord:
    while True:
        w = random_word(rng, rank, max_len)
        if not w.is_identity():
            return w


def random_braid(rng: random.Random, strands: int, max_len: int) -> BraidWord:
    length = rng.randint(0, max_len)
    return BraidWord(strands, tuple(rng.choice((1, -1)) * rng.randint(1, strands - 1) for _ in range(length)))


def all_reduced_words(rank: int, max_len: int) -> List[FreeWord]:
    words = [()]
    frontier = [()]
    letters = [s * i for i in range(1, rank + 1) for s in (1, -1)]
    for _ in range(max_len):
        frontier = [w + (x,) for w in frontier for x in letters if not w or w[-1] != -x]
        words.extend(frontier)
    return [FreeWord(rank, w) for w in words]
