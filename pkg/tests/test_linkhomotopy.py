import pytest

from app.services.braid import artin_action, linking_matrix, pure_braid_generator
from app.services.freegroup import FreeWord, reduce
from app.services.linkhomotopy import (
    LinkHomotopyError,
    ReducedTensor,
    basis,
    basis_size,
    milnor_mu,
    reduced_expand,
    rf_equal,
)
from strategies import random_word


def W(*letters, rank=3):
    return reduce(letters, rank)


def test_basis_counts_repetition_free_monomials():
    assert basis_size(1) == 2
    assert basis_size(3) == 16
    assert len(basis(3)) == 16
    assert basis(2) == [(), (1,), (2,), (1, 2), (2, 1)]


def test_dense_basis_is_bounded():
    with pytest.raises(LinkHomotopyError, match="Dense basis"):
        basis(9)


def test_repeated_variables_vanish():
    assert reduced_expand(W(1, 1)) == ReducedTensor(3, {(): 1, (1,): 2})
    assert ReducedTensor(2, {(1, 1): 5}) == ReducedTensor(2)


def test_inverse_generator_is_one_minus_x():
    assert reduced_expand(W(-2)) == ReducedTensor(3, {(): 1, (2,): -1})


def test_reduced_expansion_is_multiplicative(rng):
    for _ in range(500):
        u, v = random_word(rng, 3, 7), random_word(rng, 3, 7)
        assert reduced_expand(u * v) == reduced_expand(u) * reduced_expand(v)


def test_generator_commutes_with_its_conjugates():
    x1, x2 = W(1), W(2)
    assert rf_equal(x1.commutator(x1.conjugate(x2)), FreeWord.identity(3))
    assert rf_equal(x1 * x1.conjugate(W(2, 3)), x1.conjugate(W(2, 3)) * x1)


def test_conjugates_of_one_generator_commute(rng):
    for _ in range(200):
        rank = rng.randint(2, 4)
        x = FreeWord.generator(rng.randint(1, rank), rank)
        u, v = random_word(rng, rank, 6), random_word(rng, rank, 6)
        assert reduced_expand(x.conjugate(u).commutator(x.conjugate(v))).is_one()


def test_distinct_generators_do_not_commute():
    assert not rf_equal(W(1, 2), W(2, 1))


def test_rank_mismatch():
    with pytest.raises(LinkHomotopyError):
        rf_equal(W(1, rank=2), W(1, rank=3))
    with pytest.raises(LinkHomotopyError):
        reduced_expand(W(1, rank=2), rank=3)


def test_milnor_mu_rejects_repeats():
    with pytest.raises(LinkHomotopyError, match="repeats"):
        milnor_mu(W(1, 2), (1, 1))
    with pytest.raises(LinkHomotopyError):
        milnor_mu(W(1, 2), (4,))


def test_linking_numbers_are_length_one_invariants():
    b = pure_braid_generator(1, 2, 3)
    w1 = artin_action(b).conjugators[0]
    assert milnor_mu(w1, (2,)) == linking_matrix(b)[0, 1] == 1
    assert milnor_mu(w1, (3,)) == 0


def test_borromean_triple_invariant():
    a12, a23 = pure_braid_generator(1, 2, 3), pure_braid_generator(2, 3, 3)
    b = a12.commutator(a23)
    assert not linking_matrix(b).any()
    w3 = artin_action(b).conjugators[2]
    assert milnor_mu(w3, (1,)) == milnor_mu(w3, (2,)) == 0
    assert abs(milnor_mu(w3, (1, 2))) == 1
    assert milnor_mu(w3, (1, 2)) == -milnor_mu(w3, (2, 1))


def test_expansions_are_serialized_sorted():
    t = reduced_expand(W(2, 1))
    assert t.to_json() == [[[], 1], [[1], 1], [[2], 1], [[2, 1], 1]]


def test_rf_equal_is_a_congruence(rng):
    x1, x2 = W(1), W(2)
    for _ in range(30):
        w = random_word(rng, 3, 5)
        u, v = x1 * x2.conjugate(w).commutator(x2), x1
        assert rf_equal(u, v)
        assert rf_equal(w * u, w * v)
        assert rf_equal(u * w, v * w)


def test_reduced_inverse(rng):
    for _ in range(30):
        u = random_word(rng, 4, 8)
        assert (reduced_expand(u.inverse()) * reduced_expand(u)).is_one()
