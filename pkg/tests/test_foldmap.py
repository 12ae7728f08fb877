import copy
import json
import random
from itertools import product
from pathlib import Path

import networkx as nx
import pytest

from app.services.braid import Permutation, generated_orbits
from app.services.foldmap import (
    EXTERIOR,
    IN,
    INNER,
    NESTED,
    OUT,
    AlternationVerdict,
    ArcKind,
    ArrangementError,
    BasepointFrame,
    Circle,
    CrossingWord,
    DiskArrangement,
    Sheet,
    alternation_certificate,
    basepoint_transport,
    three_component_arrangement,
    three_component_loop,
    three_component_separated_loop,
    two_component_arrangement,
    two_component_loop,
    loop_from_regions,
    monodromy,
    normal_form,
    pullback,
    simplicial_class,
    standard_arrangement,
    validate,
    winding_invariant,
)
from app.services.freegroup import FreeWord, reduce


FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load(name):
    return json.loads((FIXTURES / name).read_text())


def random_arrangement(rng: random.Random, degree: int, n_circles: int) -> DiskArrangement:
    """Labelled nested arrangement; every sheet over the exterior is positive."""
    sheets = {f"p{k}": Sheet(f"p{k}", 1) for k in range(degree)}
    fibers = {EXTERIOR: frozenset(sheets)}
    circles = []
    for k in range(n_circles):
        cid = f"c{k}"
        parent = rng.choice([None] + [c.id for c in circles])
        outside = fibers[parent if parent is not None else EXTERIOR]
        positive = sorted(s for s in outside if sheets[s].sign > 0)
        negative = sorted(s for s in outside if sheets[s].sign < 0)
        if negative and rng.random() < 0.5:
            flag = INNER
            inside = outside - {rng.choice(positive), rng.choice(negative)}
        else:
            flag = "outer"
            sheets[f"{cid}u"] = Sheet(f"{cid}u", -1)
            sheets[f"{cid}v"] = Sheet(f"{cid}v", 1)
            inside = outside | {f"{cid}u", f"{cid}v"}
        circles.append(Circle(cid, parent, cid, flag))
        fibers[cid] = inside
    return validate(DiskArrangement(NESTED, tuple(circles), fibers, sheets, EXTERIOR, degree))


def random_loop(rng: random.Random, arr: DiskArrangement, steps: int) -> CrossingWord:
    children = {}
    for c in arr.circles:
        children.setdefault(c.outside, []).append(c.id)
    region, crossings = arr.basepoint, []
    for _ in range(steps):
        options = [(c, IN) for c in children.get(region, [])]
        if region != EXTERIOR:
            options.append((region, OUT))
        if not options:
            break
        circle, direction = rng.choice(options)
        crossings.append((circle, direction))
        region = circle if direction == IN else arr.circle(circle).outside
    while region != EXTERIOR:
        crossings.append((region, OUT))
        region = arr.circle(region).outside
    return CrossingWord(arr.basepoint, tuple(crossings))


# ============ arrangements ============

def test_standard_arrangement_fibers():
    arr = standard_arrangement(2)
    assert arr.regions == [EXTERIOR, "A", "B", "C"]
    assert arr.fiber("B") == ["A", "C"]
    assert arr.fiber(EXTERIOR) == ["A", "B", "C", "neg"]
    assert arr.degree == 2


def test_fixtures_match_builtin_arrangements():
    assert DiskArrangement.from_json(load("three_component.json")).fibers == three_component_arrangement().fibers
    assert DiskArrangement.from_json(load("two_component.json")).fibers == two_component_arrangement().fibers
    assert DiskArrangement.from_json(load("standard2.json")).fibers == standard_arrangement(2).fibers


def test_size_only_fibers_get_stack_labels():
    labelled = three_component_arrangement()
    sized = DiskArrangement.from_json(load("three_component_sizes.json"))
    assert {r: len(f) for r, f in sized.fibers.items()} == {r: len(f) for r, f in labelled.fibers.items()}
    assert sized.fiber(EXTERIOR) == ["s00"]
    assert sized.fiber("3") == ["3+", "3-", "4+", "4-", "s00"]
    for region, fiber in sized.fibers.items():
        assert sum(sized.sign(s) for s in fiber) == 1


def _sized(fold_position=None, inner_size=3):
    inner = {"id": "2", "parent": "1", "flag": "inner"}
    if fold_position is not None:
        inner["fold_position"] = fold_position
    return {
        "kind": "NESTED",
        "circles": [{"id": "1", "parent": None, "flag": "outer"}, inner],
        "fibers": {"ext": 3, "1": 5, "2": inner_size},
        "basepoint": "ext",
        "degree": 1,
    }


def test_fold_position_picks_the_folding_pair():
    assert set(DiskArrangement.from_json(_sized()).fibers["2"]) == {"s00", "s01", "s02"}
    assert set(DiskArrangement.from_json(_sized(fold_position=1)).fibers["2"]) == {"s00", "1+", "1-"}
    with pytest.raises(ArrangementError, match="equal signs"):
        DiskArrangement.from_json(_sized(fold_position=0))
    with pytest.raises(ArrangementError, match="disagrees"):
        DiskArrangement.from_json(_sized(inner_size=4))


@pytest.mark.parametrize("edit,message", [
    (lambda data: data["circles"][2].update(rho=1), "idempotent"),
    (lambda data: data["circles"][3].update(rho=3), "not contained"),
    (lambda data: data.update(degree=2), "signed size"),
    (lambda data: data["circles"][3].update(flag="inner"), "against its inner flag"),
    (lambda data: data["circles"][0].update(parent=7), "unknown parent"),
    (lambda data: data["sheets"].pop("U1"), "no sign"),
])
def test_invalid_arrangements(edit, message):
    data = copy.deepcopy(load("three_component.json"))
    edit(data)
    with pytest.raises(ArrangementError, match=message):
        DiskArrangement.from_json(data)


def test_region_graph_is_a_tree():
    assert nx.is_tree(two_component_arrangement().region_graph())


def test_crossing_word_walks_and_reverses():
    arr = three_component_arrangement()
    l = three_component_separated_loop()
    assert l.walk(arr)[:4] == [EXTERIOR, "4", "3", "1"]
    assert l.is_closed(arr)
    back = l.reverse(arr)
    assert back.reverse(arr) == l
    with pytest.raises(ArrangementError, match="enters"):
        CrossingWord(EXTERIOR, (("3", IN),)).walk(arr)


def test_loop_from_regions():
    l = loop_from_regions("BCAB")
    assert l.base == "B"
    assert l.crossings[:2] == (("B", OUT), ("C", IN))
    assert len(l) == 6


# ============ pullbacks ============

def test_three_component_pullback():
    pb = pullback(three_component_arrangement(), three_component_loop())
    assert pb.closed
    assert len(pb.closed_components) == 3
    marked = pb.closed_components[pb.marked]
    assert marked.sheets == {"O"}
    others = [c for k, c in enumerate(pb.closed_components) if k != pb.marked]
    assert sorted(sorted(c.balls) for c in others) == [["1"], ["2"]]
    assert all(c.kind == ArcKind.CIRCLE for c in pb.closed_components)


def test_two_component_pullback_has_two_components():
    pb = pullback(two_component_arrangement(), two_component_loop())
    assert len(pb.closed_components) == 2
    assert pb.marked is not None
    assert len(pb.folds) == 2 * 3 + 2 * 6
    for record in pb.folds:
        data = record.to_json()
        assert data["interval"] == data["crossing"] + (1 if record.kind == "birth" else 0)
        assert len(data["sheets"]) == 2


def test_standard_pullback_arcs():
    pb = pullback(standard_arrangement(2), loop_from_regions("BCAB"))
    assert pb.positive_arcs == 2
    assert pb.negative_arcs == 0
    assert pb.marked is None
    dot = pb.to_dot()
    assert dot.startswith("graph pullback {")
    assert "style=dashed" in dot


def test_degree_identity_on_random_arrangements(rng):
    for _ in range(40):
        degree = rng.randint(1, 3)
        arr = random_arrangement(rng, degree, rng.randint(1, 6))
        for _ in range(3):
            pb = pullback(arr, random_loop(rng, arr, rng.randint(0, 10)))
            assert pb.positive_arcs - pb.negative_arcs == degree
            starts = sorted(k for c in pb.components for k in c.start)
            assert starts == list(range(len(arr.fiber(arr.basepoint))))


def test_degree_identity_on_open_paths():
    arr = three_component_arrangement()
    path = CrossingWord(EXTERIOR, (("4", IN), ("3", IN), ("1", IN)))
    pb = pullback(arr, path)
    assert not pb.closed
    assert pb.positive_arcs - pb.negative_arcs == 1
    assert pb.count(ArcKind.RETURNING) == 1


# ============ monodromy ============

def test_standard_transposition():
    assert monodromy(standard_arrangement(2), loop_from_regions("BCAB")).cycle_string() == "(1 2)"
    assert monodromy(standard_arrangement(2), loop_from_regions("B")).is_identity()


def test_monodromy_needs_a_full_fiber_and_a_loop():
    arr = standard_arrangement(2)
    with pytest.raises(ArrangementError, match="ends in region"):
        monodromy(arr, CrossingWord("B", (("B", OUT),)))
    with pytest.raises(ArrangementError, match="frames need"):
        monodromy(arr, CrossingWord(EXTERIOR, ()))


def test_monodromy_is_functorial(rng):
    for _ in range(30):
        degree = rng.randint(1, 4)
        arr = random_arrangement(rng, degree, rng.randint(1, 6))
        l1, l2 = random_loop(rng, arr, 8), random_loop(rng, arr, 8)
        m1, m2 = monodromy(arr, l1), monodromy(arr, l2)
        assert monodromy(arr, l1 + l2) == m1 * m2
        assert monodromy(arr, l1.reverse(arr)) == m1.inverse()


def test_standard_monodromy_is_functorial(rng):
    arr = standard_arrangement(3)
    for _ in range(30):
        w1 = "B" + "".join(rng.choice("ABCD") for _ in range(rng.randint(0, 5))) + "B"
        w2 = "B" + "".join(rng.choice("ABCD") for _ in range(rng.randint(0, 5))) + "B"
        l1, l2 = loop_from_regions(w1), loop_from_regions(w2)
        assert monodromy(arr, l1 + l2) == monodromy(arr, l1) * monodromy(arr, l2)
        assert monodromy(arr, l1.reverse(arr)) == monodromy(arr, l1).inverse()


@pytest.mark.parametrize("d", [2, 3, 4])
def test_standard_monodromy_is_transitive(d):
    arr = standard_arrangement(d)
    letters = [x for x in "ABCDE"[:d + 1] if x != "B"]
    loops = [loop_from_regions("B" + x + y + "B") for x in letters for y in letters if x != y]
    group = [monodromy(arr, l) for l in loops]
    assert generated_orbits(group, d) == [set(range(d))]


def test_relabelled_frames_conjugate():
    arr = standard_arrangement(3)
    m = monodromy(arr, loop_from_regions("BCADB"))
    for images in ((1, 2, 0), (2, 1, 0), (0, 2, 1)):
        tau = Permutation(images)
        assert monodromy(arr, loop_from_regions("BCADB"), BasepointFrame.relabeled(tau)) == \
            m.conjugate(tau.inverse())


def _random_frame(rng, d):
    return BasepointFrame(tuple(rng.sample(range(d), d)))


def test_basepoint_transport_intertwines(rng):
    for _ in range(100):
        d = rng.choice((2, 3))
        arr = standard_arrangement(d)
        letters = "ABCDE"[:d + 1]
        path = "B" + "".join(rng.choice(letters) for _ in range(rng.randint(0, 4)))
        p = loop_from_regions(path)
        end = path[-1]
        l = loop_from_regions(end + "".join(rng.choice(letters) for _ in range(rng.randint(0, 6))) + end)
        frame_start, frame_end = _random_frame(rng, d), _random_frame(rng, d)
        h = basepoint_transport(arr, p, frame_start, frame_end)
        assert monodromy(arr, p + l + p.reverse(arr), frame_start) * h == h * monodromy(arr, l, frame_end)


def test_constant_path_transport():
    arr = standard_arrangement(3)
    stay = loop_from_regions("B")
    assert basepoint_transport(arr, stay).is_identity()
    tau = Permutation((2, 0, 1))
    assert basepoint_transport(arr, stay, BasepointFrame.relabeled(tau)) == tau


def test_diameter_path_transport_depends_on_frames():
    arr = standard_arrangement(2)
    p = loop_from_regions("BC")
    assert basepoint_transport(arr, p).is_identity()
    h = basepoint_transport(arr, p, BasepointFrame.cyclic(arr, "B"), BasepointFrame.cyclic(arr, "C"))
    assert h.cycle_string() == "(1 2)"
    assert BasepointFrame.cyclic(arr, "B").positions == (1, 0)
    with pytest.raises(ArrangementError, match="Cyclic"):
        BasepointFrame.cyclic(arr, EXTERIOR)


# ============ word invariants ============

def _closed_words(alphabet, max_len, base="B"):
    for n in range(0, max_len - 1):
        for middle in product(alphabet, repeat=n):
            yield base + "".join(middle) + base
    yield base


def test_normal_form_has_no_reducible_patterns():
    for word in _closed_words("ABC", 8):
        nf = normal_form(word)
        assert normal_form(nf) == nf
        assert all(nf[k] != nf[k + 1] for k in range(len(nf) - 1))
        assert all(nf[k] != nf[k + 2] for k in range(len(nf) - 2))
        assert nf[0] == nf[-1] == "B"


def test_winding_examples():
    assert winding_invariant("BCAB") == 1
    assert winding_invariant("BACB") == -1
    assert winding_invariant("B") == 0
    assert winding_invariant("BABCB") == 0
    assert winding_invariant("BCABCAB") == 2
    with pytest.raises(ArrangementError, match="outside"):
        winding_invariant("BDB")
    with pytest.raises(ArrangementError, match="start and end"):
        winding_invariant("AB")


def test_winding_and_simplicial_class_survive_reduction():
    x = FreeWord.generator(1, 1)
    for word in _closed_words("ABC", 8):
        n = winding_invariant(word)
        assert winding_invariant(normal_form(word)) == n
        assert simplicial_class(word, 2) == x ** n


def _one_step_rewrites(word):
    for k in range(len(word) - 1):
        if word[k] == word[k + 1]:
            yield word[:k] + word[k + 1:]
        if k + 2 < len(word) and word[k] == word[k + 2]:
            yield word[:k + 1] + word[k + 3:]


def test_winding_survives_every_single_rewrite():
    for word in _closed_words("ABC", 8):
        n = winding_invariant(word)
        assert all(winding_invariant(shorter) == n for shorter in _one_step_rewrites(word)), word


def test_winding_survives_rewrites_of_long_words(rng):
    for _ in range(10_000):
        word = "B" + "".join(rng.choice("ABC") for _ in range(rng.randint(0, 38))) + "B"
        n = winding_invariant(word)
        assert winding_invariant(normal_form(word)) == n
        assert all(winding_invariant(shorter) == n for shorter in _one_step_rewrites(word)), word


def test_simplicial_class_is_a_reduction_invariant(rng):
    for _ in range(200):
        word = "B" + "".join(rng.choice("ABCD") for _ in range(rng.randint(0, 12))) + "B"
        assert simplicial_class(word, 3) == simplicial_class(normal_form(word), 3)


def test_simplicial_class_generators():
    assert simplicial_class("BCAB", 3) == reduce([1], 3)
    assert simplicial_class("BCDB", 3) == reduce([-3], 3)
    assert simplicial_class("BACB", 3) == reduce([-1], 3)
    with pytest.raises(ArrangementError):
        simplicial_class("BAB", 1)


# ============ alternation ============

def test_two_component_is_obstructed():
    cert = alternation_certificate(two_component_arrangement(), two_component_loop())
    assert cert.verdict == AlternationVerdict.OBSTRUCTED
    assert cert.disks == ("1", "2", "3")
    assert len(cert.interleaved) == 3
    assert not cert.separated
    assert len(cert.visits) == 6
    for visit in cert.visits:
        assert visit["entry_component"] != visit["exit_component"]


def test_separated_visits_are_inconclusive():
    cert = alternation_certificate(three_component_arrangement(), three_component_separated_loop())
    assert cert.verdict == AlternationVerdict.INCONCLUSIVE
    assert cert.separated == (("1", "2"),)
    assert "separated" in cert.reason


def test_alternation_needs_two_inner_disks():
    cert = alternation_certificate(three_component_arrangement(), three_component_loop())
    assert cert.verdict == AlternationVerdict.INCONCLUSIVE
    assert cert.disks == ()


def test_alternation_preconditions():
    arr = three_component_arrangement()
    three_visits = CrossingWord(
        EXTERIOR,
        (("4", IN), ("3", IN), ("1", IN), ("1", OUT), ("2", IN), ("2", OUT),
         ("1", IN), ("1", OUT), ("2", IN), ("2", OUT), ("1", IN), ("1", OUT), ("3", OUT), ("4", OUT))
    )
    with pytest.raises(ArrangementError, match="exactly 2"):
        alternation_certificate(arr, three_visits)
    with pytest.raises(ArrangementError, match="closed loop"):
        alternation_certificate(arr, CrossingWord(EXTERIOR, (("4", IN),)))


def test_winding_is_additive(rng):
    for _ in range(100):
        w1 = "B" + "".join(rng.choice("ABC") for _ in range(rng.randint(0, 10))) + "B"
        w2 = "B" + "".join(rng.choice("ABC") for _ in range(rng.randint(0, 10))) + "B"
        assert winding_invariant(w1 + w2[1:]) == winding_invariant(w1) + winding_invariant(w2)
