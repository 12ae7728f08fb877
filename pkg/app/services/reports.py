"""
premcheck Reports
Builds the JSON reports shared by the command-line front end and the HTTP routes.

Every report echoes its command, carries a SHA256 digest of its inputs and the package
version, and tags each verdict with the criterion it rests on. Precondition failures of a
single analysis land under `errors` instead of aborting the report.
"""

import hashlib
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel, Field

from app import __version__
from app.config import config
from app.services import PremError
from app.services.braid import (
    BraidWord,
    HumphriesVerdict,
    Permutation,
    braid_service,
    full_twist,
    sigma,
)
from app.services.foldmap import (
    STANDARD,
    CrossingWord,
    DiskArrangement,
    three_component_arrangement,
    three_component_loop,
    two_component_arrangement,
    two_component_loop,
    foldmap_service,
    loop_from_regions,
    normal_form,
    standard_arrangement,
)
from app.services.freegroup import FreeWord
from app.services.linkhomotopy import FAITHFULNESS_NOTE
from app.services.theta import DoubleCosetSum, canonicalize, paired, theta_service
from app.services.towers import PremVerdict, tower_service


logger = logging.getLogger(__name__)

BRAID_ANALYSES = ("permutation", "trivial", "hb_trivial", "linking", "humphries")
FOLDMAP_ANALYSES = ("pullback", "monodromy", "winding", "alternation")

CRITERIA = {
    "trivial": "faithful Artin representation: trivial iff every generator image is fixed",
    "hb_trivial": "reduced Artin action on F_d/mu_0: trivial iff every generator image is fixed",
    "humphries": "infinite order in HB_d when the permutation order is divisible by 2, 3 or 5",
    "monodromy": "positive-arc endpoint matching in the pullback over the loop",
    "winding": "simplicial loop class modulo XX = X and XYX = X",
    "alternation": "alternating inner-disk visits with folds split across the marked component",
    "theta": "signed double cosets modulo cancelling pairs and (non-covering) points in H",
    "degree_scope": "for d < 7 every nontrivial permutation has order divisible by 2, 3 or 5"
}

# machine-readable anchors of each criterion, emitted as `paper_ref`
REFERENCES = {
    "trivial": "§2.2",
    "hb_trivial": "§2.2",
    "humphries": "§2.2",
    "monodromy": "§2.1",
    "winding": "Example 3.1.1.1",
    "alternation": "Example 3.2.4",
    "theta": "§1",
    "degree_scope": "Theorem 1.3"
}


def _tagged(name: str, payload: Dict[str, Any]) -> Dict[str, Any]:
    return {**payload, "criterion": CRITERIA[name], "paper_ref": REFERENCES[name]}


class Report(BaseModel):
    """Deterministic analysis report."""
    command: str
    version: str = __version__
    inputs_digest: str
    results: Dict[str, Any] = Field(default_factory=dict)
    errors: Dict[str, str] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    def render(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, indent=config.REPORT_INDENT)


def compute_sha256(data: Union[bytes, str]) -> str:
    """Compute SHA256 hash of data."""
    if isinstance(data, str):
        data = data.encode('utf-8')
    return hashlib.sha256(data).hexdigest()


def digest_inputs(inputs: Any) -> str:
    return compute_sha256(json.dumps(inputs, sort_keys=True, separators=(",", ":")))


def _run(report: Report, name: str, analysis: Callable[[], Any]) -> None:
    try:
        report.results[name] = analysis()
    except PremError as e:
        logger.info("Analysis %s skipped: %s", name, e)
        report.errors[name] = str(e)


# ============ braid ============

def cmd_braid(word: Sequence[int], strands: Optional[int] = None, analyses: Iterable[str] = BRAID_ANALYSES,
              level: Optional[int] = None, cap: Optional[int] = None) -> Report:
    """
    Braid analyses: permutation, triviality in B_d and HB_d, linking numbers, the
    Humphries certificate and (with a level) the automorphism tower.

    Raises:
        BraidError: if the word is not a braid word
    """
    cap = config.validate_cap(cap or config.DEFAULT_CAP)
    b = BraidWord.from_json(word, strands)
    analyses = [a for a in BRAID_ANALYSES if a in set(analyses)]
    report = Report(
        command="braid",
        inputs_digest=digest_inputs({"word": list(word), "strands": b.strands, "analyses": analyses,
                                     "level": level, "cap": cap})
    )
    report.results["braid"] = {"strands": b.strands, "word": b.to_json()}

    def permutation():
        p = braid_service.permutation_of(b)
        return {"cycles": p.cycle_string(), "images": p.to_json(), "order": p.order()}

    def humphries():
        return _tagged("humphries", braid_service.humphries_certificate(b).to_json())

    runners = {
        "permutation": permutation,
        "trivial": lambda: _tagged("trivial", {"trivial": braid_service.is_trivial_braid(b)}),
        "hb_trivial": lambda: _tagged("hb_trivial", {"trivial": braid_service.hb_is_trivial(b),
                                                      "assumption": FAITHFULNESS_NOTE}),
        "linking": lambda: braid_service.linking_matrix(b).tolist(),
        "humphries": humphries,
    }
    for name in analyses:
        _run(report, name, runners[name])
    if "hb_trivial" in analyses:
        report.notes.append(FAITHFULNESS_NOTE)

    if level is not None:
        def tower():
            config.validate_cap(level)
            automorphism = braid_service.artin_action(b)
            image = tower_service.level_image(automorphism, level)
            return {
                "level": level,
                "image": image.to_json(),
                "kernel_degree": tower_service.kernel_degree(automorphism, cap),
                "profile": tower_service.tower_profile(automorphism, cap)
            }

        try:
            _run(report, "level", tower)
        except ValueError as e:
            report.errors["level"] = str(e)
    return report


# ============ foldmap ============

def _analyze_loop(arr: DiskArrangement, loop: Dict, analyses: List[str], dot: bool) -> Dict:
    out: Dict[str, Any] = {}
    errors: Dict[str, str] = {}
    try:
        l = CrossingWord.from_json(loop)
        l.walk(arr)
    except PremError as e:
        return {"loop": loop, "errors": {"loop": str(e)}}
    out["loop"] = l.to_json()

    def attempt(name: str, analysis: Callable[[], Any]) -> None:
        try:
            out[name] = analysis()
        except PremError as e:
            errors[name] = str(e)

    if "pullback" in analyses or dot:
        pb = foldmap_service.pullback(arr, l)
        if "pullback" in analyses:
            out["pullback"] = pb.to_json()
        if dot:
            out["dot"] = pb.to_dot()
    if "monodromy" in analyses:
        def monodromy():
            p = foldmap_service.monodromy(arr, l)
            return _tagged("monodromy", {"cycles": p.cycle_string(), "images": p.to_json(), "order": p.order()})
        attempt("monodromy", monodromy)
    if "winding" in analyses and "regions" not in loop:
        errors["winding"] = "winding needs a loop given as a region word"
    elif "winding" in analyses:
        word = loop["regions"]

        def winding():
            result: Dict[str, Any] = {"normal_form": normal_form(word)}
            if arr.kind == STANDARD and arr.degree == 2:
                result["winding"] = foldmap_service.winding_invariant(word)
            if arr.kind == STANDARD and arr.degree >= 2:
                result["simplicial_class"] = foldmap_service.simplicial_class(word, arr.degree).to_json()
            return _tagged("winding", result)
        attempt("winding", winding)
    if "alternation" in analyses:
        attempt("alternation", lambda: _tagged("alternation", foldmap_service.alternation_certificate(arr, l).to_json()))
    if errors:
        out["errors"] = errors
    return out


def cmd_foldmap(arrangement: Dict, loops: Sequence[Dict], analyses: Iterable[str] = FOLDMAP_ANALYSES,
                dot: bool = False) -> Report:
    """
    Fold map analyses for one arrangement and any number of loops.

    Loops are independent and are analyzed concurrently.

    Raises:
        ArrangementError: if the arrangement fails validation
    """
    arr = DiskArrangement.from_json(arrangement)
    analyses = [a for a in FOLDMAP_ANALYSES if a in set(analyses)]
    report = Report(
        command="foldmap",
        inputs_digest=digest_inputs({"arrangement": arrangement, "loops": list(loops),
                                     "analyses": analyses, "dot": dot})
    )
    report.results["arrangement"] = {
        "kind": arr.kind,
        "degree": arr.degree,
        "basepoint": arr.basepoint,
        "base_fiber": arr.fiber(arr.basepoint),
        "circles": len(arr.circles)
    }
    with ThreadPoolExecutor(max_workers=config.MAX_WORKERS) as pool:
        report.results["loops"] = list(pool.map(lambda loop: _analyze_loop(arr, loop, analyses, dot), loops))
    for k, item in enumerate(report.results["loops"]):
        for name, message in item.get("errors", {}).items():
            report.errors[f"loops[{k}].{name}"] = message
    return report


# ============ theta ============

def cmd_theta(data: Dict) -> Report:
    """
    Canonical form and zero test of a signed double coset sum.

    Raises:
        ThetaError: if the sum is malformed
    """
    s = DoubleCosetSum.from_json(data)
    report = Report(command="theta", inputs_digest=digest_inputs(data))
    canonical = theta_service.canonicalize(s)
    report.results["theta"] = _tagged("theta", {
        "zero": not canonical.entries,
        "survivors": [{"sign": sign, "representative": g.to_json()} for sign, g in canonical.entries],
        "subgroup_index_finite": s.H.is_finite_index(),
        "search_bound": None
    })
    return report


# ============ verdict ============

def parse_permutation(text: Union[str, Sequence[int]], degree: Optional[int] = None) -> Permutation:
    """A 1-based image list ("[2,1,3]" or a list) or cycle notation ("(1 2)(3 4 5)")."""
    if not isinstance(text, str):
        return Permutation.from_json(text)
    stripped = text.strip()
    if stripped.startswith("["):
        try:
            return Permutation.from_json(json.loads(stripped))
        except (json.JSONDecodeError, TypeError, ValueError) as e:
            if isinstance(e, PremError):
                raise
            raise PremError(f"Cannot parse permutation {text!r}: {e}") from e
    points = [int(p) for p in stripped.replace("(", " ").replace(")", " ").replace(",", " ").split() if p]
    return Permutation.from_cycles(stripped, degree or max(points, default=1))


def cmd_verdict(torsion_order: int, permutation: Union[str, Sequence[int]], degree: Optional[int] = None) -> Report:
    """
    2-prem verdict for an element of finite order with the given monodromy.

    Raises:
        TowerError: if the torsion order is below 2
    """
    p = parse_permutation(permutation, degree)
    report = Report(
        command="verdict",
        inputs_digest=digest_inputs({"torsion": torsion_order, "permutation": p.to_json()})
    )
    verdict = tower_service.prem_verdict(torsion_order, p)
    report.results["verdict"] = verdict.to_json()
    if p.degree < 7:
        report.notes.append(f"{CRITERIA['degree_scope']} ({REFERENCES['degree_scope']})")
    return report


# ============ selftest ============

def _selftest_checks() -> Dict[str, Callable[[], bool]]:
    def braid_relations():
        for d in range(3, 7):
            for i in range(1, d - 1):
                lhs = BraidWord(d, (i, i + 1, i))
                rhs = BraidWord(d, (i + 1, i, i + 1))
                if braid_service.artin_action(lhs) != braid_service.artin_action(rhs):
                    return False
        return True

    def s3_example():
        c = sigma(1, 3).commutator(sigma(2, 3))
        return (braid_service.permutation_of(c).order() == 3
                and not braid_service.linking_matrix(c ** 3).any()
                and braid_service.humphries_certificate(c).verdict == HumphriesVerdict.INFINITE_ORDER
                and not braid_service.hb_is_trivial(c ** 3))

    def full_twist_pure():
        return braid_service.permutation_of(full_twist(4)).is_identity()

    def standard_transposition():
        arr = standard_arrangement(2)
        return foldmap_service.monodromy(arr, loop_from_regions("BCAB")).cycle_string() == "(1 2)"

    def three_component():
        pb = foldmap_service.pullback(three_component_arrangement(), three_component_loop())
        return len(pb.closed_components) == 3 and pb.marked is not None

    def two_component():
        cert = foldmap_service.alternation_certificate(two_component_arrangement(), two_component_loop())
        return cert.verdict.value == "OBSTRUCTED"

    def theta_paired():
        rng = random.Random(config.SELFTEST_SEED)
        words = [FreeWord.from_json([2, 1], 2), FreeWord.from_json([2, -1, 2], 2)]
        s = paired(2, [FreeWord.from_json([1], 2)], words, rng)
        return not canonicalize(s).entries

    def verdicts():
        transposition = Permutation.transposition(0, 1, 2)
        seven = Permutation(tuple((i + 1) % 7 for i in range(7)))
        return (tower_service.prem_verdict(2, transposition).verdict == PremVerdict.NOT_2PREM
                and tower_service.prem_verdict(3, Permutation.identity(3)).verdict == PremVerdict.NO_CONCLUSION
                and tower_service.prem_verdict(7, seven).verdict == PremVerdict.NO_CONCLUSION)

    return {
        "braid_relations": braid_relations,
        "s3_example": s3_example,
        "full_twist_pure": full_twist_pure,
        "standard_transposition": standard_transposition,
        "three_component_components": three_component,
        "two_component_obstructed": two_component,
        "theta_paired_zero": theta_paired,
        "verdict_table": verdicts,
    }


def selftest() -> Report:
    """Run the built-in fixtures; results map check name to pass/fail."""
    report = Report(command="selftest", inputs_digest=digest_inputs({"seed": config.SELFTEST_SEED}))
    for name, check in _selftest_checks().items():
        _run(report, name, check)
    report.results["passed"] = all(report.results.get(name) is True for name in _selftest_checks())
    report.notes.append(FAITHFULNESS_NOTE)
    return report


def summary_lines(report: Report) -> List[str]:
    """One human-readable line per verdict-bearing result."""
    lines = []
    for name, value in sorted(report.results.items()):
        if isinstance(value, dict) and "verdict" in value:
            lines.append(f"{report.command}: {name} -> {value['verdict']}")
        elif isinstance(value, dict) and "trivial" in value:
            lines.append(f"{report.command}: {name} -> {'trivial' if value['trivial'] else 'nontrivial'}")
        elif isinstance(value, dict) and "zero" in value:
            lines.append(f"{report.command}: theta -> {'zero' if value['zero'] else 'nonzero'}")
        elif isinstance(value, bool):
            lines.append(f"{report.command}: {name} -> {'ok' if value else 'FAILED'}")
    for k, item in enumerate(report.results.get("loops", [])):
        if "monodromy" in item:
            lines.append(f"foldmap: loop {k} monodromy -> {item['monodromy']['cycles']}")
        if "alternation" in item:
            lines.append(f"foldmap: loop {k} alternation -> {item['alternation']['verdict']}")
    for name, message in sorted(report.errors.items()):
        lines.append(f"{report.command}: {name} skipped ({message})")
    return lines
