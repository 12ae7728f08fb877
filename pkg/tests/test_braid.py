import numpy as np
import pytest

from app.services.braid import (
    BraidError,
    BraidWord,
    ConjugacyAutomorphism,
    HumphriesVerdict,
    Permutation,
    artin_action,
    covering_lift_check,
    divisor_witness,
    full_twist,
    generated_orbits,
    hb_is_trivial,
    humphries_certificate,
    is_trivial_braid,
    linking_matrix,
    longitude_linking,
    permutation_of,
    pure_braid_generator,
    sigma,
)
from app.services.freegroup import FreeWord, reduce
from strategies import random_braid


def test_permutation_from_cycles():
    p = Permutation.from_cycles("(1 2)(3 4 5)", 5)
    assert p.to_json() == [2, 1, 4, 5, 3]
    assert p.cycle_string() == "(1 2)(3 4 5)"
    assert p.order() == 6
    assert Permutation.from_cycles("()", 3).is_identity()


def test_permutation_composes_left_to_right():
    p = Permutation.transposition(0, 1, 3)
    q = Permutation.transposition(1, 2, 3)
    assert (p * q)(0) == 2
    assert (p * q).to_json() == [3, 1, 2]
    assert (p * p.inverse()).is_identity()


def test_permutation_rejects_non_bijections():
    with pytest.raises(BraidError):
        Permutation.from_json([1, 1, 2])
    with pytest.raises(BraidError, match="leaves"):
        Permutation.from_cycles("(1 4)", 3)


def test_generated_orbits():
    gens = [Permutation.transposition(0, 1, 4)]
    assert generated_orbits(gens, 4) == [{0, 1}, {2}, {3}]
    gens.append(Permutation.from_cycles("(2 3 4)", 4))
    assert generated_orbits(gens, 4) == [{0, 1, 2, 3}]


def test_braid_word_parsing():
    b = BraidWord.from_json([1, -2])
    assert b.strands == 3
    assert str(b) == "s1 s2^-1"
    with pytest.raises(BraidError, match="position 1"):
        BraidWord.from_json([1, 3], strands=3)
    with pytest.raises(BraidError, match="Strand mismatch"):
        sigma(1, 3) * sigma(1, 4)


def test_pure_braid_generator_letters():
    assert pure_braid_generator(1, 2, 3).letters == (1, 1)
    assert pure_braid_generator(1, 3, 3).letters == (2, 1, 1, -2)
    with pytest.raises(BraidError):
        pure_braid_generator(2, 2, 3)


def test_sigma_acts_as_documented():
    a = artin_action(sigma(1, 2))
    assert a.images() == (reduce([1, 2, -1], 2), reduce([1], 2))
    inverse = artin_action(sigma(1, 2, -1))
    assert inverse.images() == (reduce([2], 2), reduce([-2, 1, 2], 2))


@pytest.mark.parametrize("d", range(2, 7))
def test_braid_relations(d):
    for i in range(1, d):
        assert is_trivial_braid(BraidWord(d, (i, -i)))
        assert is_trivial_braid(BraidWord(d, (-i, i)))
    for i in range(1, d - 1):
        assert artin_action(BraidWord(d, (i, i + 1, i))) == artin_action(BraidWord(d, (i + 1, i, i + 1)))
    for i in range(1, d):
        for j in range(i + 2, d):
            assert artin_action(BraidWord(d, (i, j))) == artin_action(BraidWord(d, (j, i)))


def test_artin_action_is_a_homomorphism(rng):
    for _ in range(200):
        d = rng.randint(2, 5)
        b1, b2 = random_braid(rng, d, 6), random_braid(rng, d, 6)
        assert artin_action(b1 * b2) == artin_action(b1).compose(artin_action(b2))


def test_permutation_matches_artin_action(rng):
    for _ in range(200):
        b = random_braid(rng, rng.randint(2, 6), 30)
        assert permutation_of(b) == artin_action(b).permutation


def test_artin_action_fixes_the_product(rng):
    for _ in range(200):
        d = rng.randint(2, 6)
        product = reduce(range(1, d + 1), d)
        assert artin_action(random_braid(rng, d, 30)).apply(product) == product


def test_inverse_braid_is_inverse(rng):
    for _ in range(50):
        b = random_braid(rng, 4, 8)
        assert is_trivial_braid(b * b.inverse())
        assert artin_action(b).compose(artin_action(b.inverse())).is_identity()


def test_generators_are_nontrivial():
    assert not is_trivial_braid(sigma(1, 3))
    assert not is_trivial_braid(sigma(1, 3, 2))


def test_full_twist_is_pure_and_central():
    for d in range(2, 6):
        twist = full_twist(d)
        assert permutation_of(twist).is_identity()
        assert not is_trivial_braid(twist)
        for i in range(1, d):
            assert artin_action(twist * sigma(i, d)) == artin_action(sigma(i, d) * twist)


def test_conjugacy_automorphism_normalizes_conjugators():
    x1, x2 = FreeWord.generator(1, 2), FreeWord.generator(2, 2)
    a = ConjugacyAutomorphism(2, Permutation.identity(2), (x1 ** 3, x2 ** -2))
    assert a.conjugators == (FreeWord.identity(2), FreeWord.identity(2))
    assert a.is_identity()
    assert a == ConjugacyAutomorphism.identity(2)


def test_conjugacy_automorphism_must_fix_product():
    with pytest.raises(BraidError, match="product"):
        ConjugacyAutomorphism.from_images([reduce([2], 2), reduce([1], 2)])
    with pytest.raises(BraidError, match="conjugate"):
        ConjugacyAutomorphism.from_images([reduce([1, 2], 2), reduce([2], 2)])


def test_s3_commutator():
    c = sigma(1, 3).commutator(sigma(2, 3))
    p = permutation_of(c)
    assert p.order() == 3
    assert p.cycle_string() in ("(1 2 3)", "(1 3 2)")
    cert = humphries_certificate(c)
    assert cert.verdict == HumphriesVerdict.INFINITE_ORDER
    assert cert.divisor_witness == 3
    assert permutation_of(c ** 3).is_identity()
    assert not hb_is_trivial(c ** 3)


def test_linking_matrix_of_generators():
    assert linking_matrix(pure_braid_generator(1, 2, 3)).tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, 0]]
    twist = linking_matrix(full_twist(3))
    assert (twist == np.ones((3, 3), dtype=int) - np.eye(3, dtype=int)).all()


def test_linking_matrix_rejects_impure_braids():
    with pytest.raises(BraidError, match="pure braid"):
        linking_matrix(sigma(1, 3))


def test_linking_sweep_matches_longitudes(rng):
    for _ in range(200):
        b = random_braid(rng, rng.randint(2, 5), 6).purify()
        m = linking_matrix(b)
        assert (m == m.T).all()
        assert (m == longitude_linking(b)).all()


def test_homotopy_braid_triviality():
    a12, a23 = pure_braid_generator(1, 2, 3), pure_braid_generator(2, 3, 3)
    assert hb_is_trivial(BraidWord(3))
    assert not hb_is_trivial(a12)
    assert not hb_is_trivial(sigma(1, 3))
    assert not hb_is_trivial(a12.commutator(a23))
    # a pure generator commutes with its conjugates up to link homotopy
    self_clasp = a12.commutator(a23 * a12 * a23.inverse())
    assert not is_trivial_braid(self_clasp)
    assert hb_is_trivial(self_clasp)


def test_hb_triviality_follows_braid_triviality(rng):
    for _ in range(40):
        b = random_braid(rng, 4, 6)
        assert hb_is_trivial(b * b.inverse())


@pytest.mark.parametrize("order,witness", [(1, None), (2, 2), (7, None), (15, 3), (35, 5), (49, None), (30, 2)])
def test_divisor_witness(order, witness):
    assert divisor_witness(order) == witness


def test_humphries_verdicts():
    five_cycle = BraidWord(5, (1, 2, 3, 4))
    assert humphries_certificate(five_cycle).divisor_witness == 5
    seven_cycle = BraidWord(7, (1, 2, 3, 4, 5, 6))
    cert = humphries_certificate(seven_cycle)
    assert cert.verdict == HumphriesVerdict.NO_CONCLUSION
    assert cert.permutation_order == 7
    assert humphries_certificate(full_twist(4)).verdict == HumphriesVerdict.NO_CONCLUSION


def test_covering_lift_check():
    assert covering_lift_check(0, [])
    assert covering_lift_check(1, [sigma(1, 4), sigma(3, 4)])
    assert not covering_lift_check(1, [sigma(1, 3), sigma(2, 3)])
    assert covering_lift_check(2, [sigma(1, 4), sigma(1, 4, 2), full_twist(4), sigma(2, 4)])
    with pytest.raises(BraidError, match="needs 2"):
        covering_lift_check(1, [sigma(1, 3)])


def test_projection_chain(rng):
    for _ in range(100):
        b = random_braid(rng, rng.randint(2, 4), 8)
        if rng.random() < 0.3:
            b = b * b.inverse()
        if is_trivial_braid(b):
            assert hb_is_trivial(b)
        if hb_is_trivial(b):
            assert permutation_of(b).is_identity()


def test_hb_triviality_ignores_relation_insertions(rng):
    for _ in range(30):
        b = random_braid(rng, 4, 6).purify()
        cut = rng.randint(0, len(b))
        relator = BraidWord(4, (1, 2, 1, -2, -1, -2))
        padded = BraidWord(4, b.letters[:cut] + relator.letters + b.letters[cut:])
        assert hb_is_trivial(padded) == hb_is_trivial(b)
        assert (linking_matrix(padded) == linking_matrix(b)).all()
