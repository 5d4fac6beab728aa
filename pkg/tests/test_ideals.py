"""Ideal membership evidence, unit witnesses, density certificates, closure."""

import math
import random
import time

import numpy as np
import pytest

import branchlab as bl
import branchlab.expr as ex
from branchlab import ideals as idl

DOM = ex.DomainInterval(0.0, 2.0 * math.pi)

# sampled infimum of (1 + sin(nu*x)) + (1 + cos(nu*x)) over the unit lattice;
# the analytic infimum is 2 - sqrt(2)
UNIT_BOUND = 0.5857864961087899

# where 1 + sin(x) hits zero on (0, 2*pi), refined from the witness scan grid
WITNESS_X = 4.712388990921401


def ideal_pair():
    first = idl.generated_by("1 + sin(nu*x)")
    second = idl.generated_by("1 + cos(nu*x)")
    return first, second


def refactorization_residual(s, verdict, domain, trials=100):
    """Re-multiply the factorization at fresh points, independent of the
    package's own verification pass (different seed, different samples)."""
    rng = random.Random(555331)
    worst = 0.0
    for _ in range(trials):
        index = rng.randint(max(s.start_index, 1), 24)
        point = rng.uniform(domain.lower, domain.upper)
        total = sum(
            g.term_value(index, point) * t.term_value(index, point)
            for g, t in verdict.factorization
        )
        worst = max(worst, abs(s.term_value(index, point) - total))
    return worst


def assert_witness_holds(witness, s, generators):
    for g in generators:
        assert abs(g.term_value(witness.nu, witness.x)) < 1e-10
    assert abs(s.term_value(witness.nu, witness.x)) > 1e-6
    assert witness.sequence_value == s.term_value(witness.nu, witness.x)


# ---------------------------------------------------------------------------
# ideal construction


def test_generated_by_accepts_mixed_inputs():
    ideal = idl.generated_by("x", bl.diagonal("sin(x)"), ex.parse("nu*x"))
    assert [g.signature() for g in ideal.generators] == ["x|1", "sin(x)|1", "nu*x|1"]


def test_finitely_generated_validation():
    with pytest.raises(ValueError, match="needs generators"):
        idl.FinitelyGenerated(())
    with pytest.raises(TypeError, match="smooth sequences"):
        idl.FinitelyGenerated((1,))


def test_ideal_sum_deduplicates_and_drops_zero():
    left = idl.generated_by("x", "0")
    right = idl.generated_by("x", "sin(x)")
    merged = idl.ideal_sum(left, right)
    assert [g.signature() for g in merged.generators] == ["x|1", "sin(x)|1"]


def test_ideal_sum_requires_finitely_generated():
    with pytest.raises(TypeError, match="finitely generated"):
        idl.ideal_sum(idl.EventuallyZero(), idl.generated_by("x"))


def test_ideal_sum_rejects_total_collapse():
    with pytest.raises(ValueError, match="collapsed"):
        idl.ideal_sum(idl.generated_by("0"), idl.generated_by("x - x"))


# ---------------------------------------------------------------------------
# membership


def test_membership_with_cofactor():
    first, _ = ideal_pair()
    s = bl.smooth_sequence("(1 + sin(nu*x))*x^2")
    verdict = idl.membership(s, first, DOM)
    assert isinstance(verdict, idl.InIdeal)
    ((generator, cofactor),) = verdict.factorization
    assert generator.signature() == "1 + sin(nu*x)|1"
    assert cofactor.signature() == "x^2|1"
    assert verdict.verification_residual == 0.0
    assert refactorization_residual(s, verdict, DOM) < 1e-10
    assert verdict.to_dict()["verdict"] == "in-ideal"


def test_membership_with_non_monic_generator():
    # generator and candidate share the scale factor; division must strip it
    ideal = idl.generated_by("2 + 2*sin(nu*x)")
    s = bl.smooth_sequence("(2 + 2*sin(nu*x))*x^2")
    verdict = idl.membership(s, ideal, DOM)
    assert isinstance(verdict, idl.InIdeal)
    assert refactorization_residual(s, verdict, DOM) < 1e-10


def test_membership_splits_over_two_generators():
    first, second = ideal_pair()
    combined = idl.ideal_sum(first, second)
    s = bl.smooth_sequence("x*(1 + sin(nu*x)) + 3*(1 + cos(nu*x))")
    verdict = idl.membership(s, combined, DOM)
    assert isinstance(verdict, idl.InIdeal)
    cofactors = {g.signature(): t.signature() for g, t in verdict.factorization}
    assert cofactors == {"1 + sin(nu*x)|1": "x|1", "1 + cos(nu*x)|1": "3|1"}
    assert refactorization_residual(s, verdict, DOM) < 1e-10


def test_membership_witness_at_vanishing_point():
    first, _ = ideal_pair()
    one = bl.diagonal("1")
    verdict = idl.membership(one, first, DOM)
    assert isinstance(verdict, idl.NotInIdeal)
    witness = verdict.witness
    assert witness.nu == 1
    assert witness.x == pytest.approx(WITNESS_X, abs=1e-12)
    assert witness.x == pytest.approx(1.5 * math.pi, abs=1e-6)
    assert abs(1.0 + math.sin(witness.nu * witness.x)) < 1e-10
    assert witness.generator_values == (pytest.approx(0.0, abs=1e-10),)
    assert_witness_holds(witness, one, first.generators)


@pytest.mark.parametrize(
    "domain, reason",
    [
        (DOM, "no factorization matched and no vanishing-point witness found"),
        (None, "no factorization matched; no domain given to scan"),
    ],
)
def test_membership_unknown_reasons(domain, reason):
    # the generator's derivative vanishes wherever the generator does, so the
    # witness scan cannot separate them
    first, _ = ideal_pair()
    derivative = bl.seq_derive(first.generators[0])
    verdict = idl.membership(derivative, first, domain)
    assert isinstance(verdict, idl.MembershipUnknown)
    assert verdict.reason == reason
    assert verdict.to_dict() == {"verdict": "unknown", "reason": reason}


def test_membership_rejects_unknown_ideal_kind():
    with pytest.raises(TypeError, match="unsupported ideal"):
        idl.membership(bl.smooth_sequence("x"), object())


def test_eventually_zero_membership_is_decided(expression_corpus):
    ideal = idl.EventuallyZero()
    for e in expression_corpus:
        cancelled = idl.membership(bl.smooth_sequence(ex.Sub(e, e)), ideal)
        assert isinstance(cancelled, idl.InIdeal)
        assert cancelled.factorization == ()
        verdict = idl.membership(bl.smooth_sequence(e), ideal, DOM)
        assert isinstance(verdict, (idl.InIdeal, idl.NotInIdeal))


def test_eventually_zero_membership_evidence():
    ideal = idl.EventuallyZero()
    bumped = bl.smooth_sequence("0", {"3": "x^2"})
    verdict = idl.membership(bumped, ideal)
    assert isinstance(verdict, idl.InIdeal)
    assert verdict.factorization == ()

    outside = idl.membership(bl.smooth_sequence("x - x + 1"), ideal, DOM)
    assert isinstance(outside, idl.NotInIdeal)
    assert outside.witness.sequence_value == pytest.approx(1.0, abs=1e-12)
    assert "does not normalize to zero" in outside.witness.note


# ---------------------------------------------------------------------------
# unit detection


def test_unit_detection_finds_bounded_combination():
    first, second = ideal_pair()
    combined = idl.ideal_sum(first, second)
    unit = idl.unit_detection(combined, DOM)
    assert unit is not None
    assert unit.combination == ((1, 0), (1, 1))
    assert unit.lower_bound == pytest.approx(UNIT_BOUND, abs=1e-12)
    assert unit.lower_bound == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-3)

    # the sampled bound can only sit above the analytic infimum 2 - sqrt(2)
    xs = np.linspace(DOM.lower, DOM.upper, 20001)
    dense_min = min(
        float(np.min(unit.sequence.term_values(index, xs)))
        for index in (1, 2, 3, 4, 6, 8, 12, 16)
    )
    assert 2.0 - math.sqrt(2.0) - 1e-12 <= dense_min <= unit.lower_bound + 1e-12


def test_unit_detection_constant_generator():
    unit = idl.unit_detection(idl.generated_by("1"), DOM)
    assert unit is not None
    assert unit.combination == ((1, 0),)
    assert unit.lower_bound == 1.0
    assert unit.sequence.signature() == "1|1"


def test_unit_detection_none_for_oscillating_generator():
    first, _ = ideal_pair()
    assert idl.unit_detection(first, DOM) is None


def test_unit_detection_requires_finitely_generated():
    with pytest.raises(TypeError, match="finitely generated"):
        idl.unit_detection(idl.EventuallyZero(), DOM)


# ---------------------------------------------------------------------------
# zero-density certificates


def test_zero_density_certificate_covers_domain():
    first, _ = ideal_pair()
    cert = idl.zero_density_certificate(first, DOM)
    assert cert is not None
    assert len(cert.cells) == 126
    assert cert.cell_width == pytest.approx(DOM.length / 126, abs=1e-15)

    assert cert.cells[0].lower == DOM.lower
    assert cert.cells[-1].upper == pytest.approx(DOM.upper, abs=1e-12)
    for before, after in zip(cert.cells, cert.cells[1:]):
        assert after.lower == pytest.approx(before.upper, abs=1e-12)

    for cell in cert.cells:
        assert cell.lower <= cell.root <= cell.upper
        assert 1 <= cell.nu <= 200
        assert cell.residual < 1e-12
        # independent recheck of the stored root against the generator
        assert abs(1.0 + math.sin(cell.nu * cell.root)) < 1e-12
        # 1 + sin vanishes exactly at nu*x = 3*pi/2 (mod 2*pi)
        offset = math.remainder(cell.nu * cell.root - 1.5 * math.pi, 2.0 * math.pi)
        assert abs(offset) < 1e-6


def test_zero_density_roots_match_cosine_zeros():
    cert = idl.zero_density_certificate(idl.generated_by("cos(nu*x)"), DOM)
    assert cert is not None
    for cell in cert.cells:
        # simple zeros, so the residual bounds the phase offset directly
        assert cell.residual < 1e-12
        offset = math.remainder(cell.nu * cell.root - 0.5 * math.pi, math.pi)
        assert abs(offset) < 1e-10


def test_zero_density_single_generator_only():
    with pytest.raises(TypeError, match="single generator"):
        idl.zero_density_certificate(idl.generated_by("x", "1"), DOM)
    with pytest.raises(TypeError, match="single generator"):
        idl.zero_density_certificate(idl.EventuallyZero(), DOM)


def test_zero_density_gives_up_when_indices_run_out():
    # nu = 1 alone roots only the cell around 3*pi/2
    first, _ = ideal_pair()
    assert idl.zero_density_certificate(first, DOM, nu_max=1) is None


# ---------------------------------------------------------------------------
# off-diagonality


def test_off_diagonality_certificate_branch():
    first, _ = ideal_pair()
    verdict = idl.off_diagonality(first, DOM)
    assert isinstance(verdict, idl.OffDiagonal)
    assert isinstance(verdict.certificate, idl.ZeroDensityCertificate)
    assert verdict.to_dict()["verdict"] == "off-diagonal"


def test_off_diagonality_unit_branch():
    first, second = ideal_pair()
    combined = idl.ideal_sum(first, second)
    verdict = idl.off_diagonality(combined, DOM)
    assert isinstance(verdict, idl.ContainsUnit)
    assert verdict.lower_bound == pytest.approx(UNIT_BOUND, abs=1e-12)


def test_off_diagonality_structural_branch():
    verdict = idl.off_diagonality(idl.EventuallyZero(), DOM)
    assert isinstance(verdict, idl.OffDiagonal)
    payload = verdict.to_dict()["certificate"]
    assert payload["kind"] == "structural"
    assert "zero" in payload["statement"]


def test_off_diagonality_inconclusive_reasons():
    multi = idl.generated_by("sin(nu*x)", "x")
    verdict = idl.off_diagonality(multi, DOM)
    assert isinstance(verdict, idl.OffDiagInconclusive)
    assert "single generators" in verdict.reason

    first, _ = ideal_pair()
    starved = idl.off_diagonality(first, DOM, nu_max=1)
    assert isinstance(starved, idl.OffDiagInconclusive)
    assert "uncovered cells" in starved.reason


# ---------------------------------------------------------------------------
# derivation closure


def test_derivation_closure_structural_and_factored():
    assert isinstance(idl.derivation_closure(idl.EventuallyZero()), idl.Closed)
    verdict = idl.derivation_closure(idl.generated_by("exp(x)"), order=2)
    assert isinstance(verdict, idl.Closed)
    assert "factored over the generators" in verdict.note
    assert isinstance(
        idl.derivation_closure(idl.generated_by("1"), order=3, domain=DOM), idl.Closed
    )


def test_derivation_closure_detects_escape():
    ideal = idl.generated_by(bl.diagonal("x"))
    verdict = idl.derivation_closure(ideal, domain=ex.DomainInterval(-1.0, 1.0))
    assert isinstance(verdict, idl.NotClosed)
    assert verdict.generator_position == 0
    assert verdict.order == 1
    assert verdict.witness.x == pytest.approx(0.0, abs=1e-10)
    assert_witness_holds(verdict.witness, bl.diagonal("1"), ideal.generators)


def test_derivation_closure_unknown_generator():
    first, _ = ideal_pair()
    verdict = idl.derivation_closure(first, domain=DOM)
    assert isinstance(verdict, idl.ClosureUnknown)
    assert "generator 0 derivative order 1" in verdict.reason


@pytest.mark.parametrize("order", [0, -2, 1.5])
def test_derivation_closure_order_validation(order):
    first, _ = ideal_pair()
    with pytest.raises(ValueError, match="positive integer"):
        idl.derivation_closure(first, order=order)


# ---------------------------------------------------------------------------
# demo


def test_no_largest_ideal_demo_structure():
    started = time.perf_counter()
    result = idl.no_largest_ideal_demo()
    assert time.perf_counter() - started < 30.0

    assert result["demo"] == "no-largest-ideal"
    assert [s["name"] for s in result["stages"]] == [
        "off-diagonality-first",
        "off-diagonality-second",
        "ideal-sum",
        "unit-witness",
    ]
    assert all(s["passed"] for s in result["stages"])
    assert result["all_stages_passed"] is True
    assert result["parameters"]["first_generator"] == "1 + sin(nu*x)"
    assert result["parameters"]["second_generator"] == "1 + cos(nu*x)"
    unit_stage = result["stages"][3]
    assert unit_stage["outcome"]["lower_bound"] == pytest.approx(UNIT_BOUND, abs=1e-12)
    assert "no largest admissible ideal" in result["conclusion"]


def test_no_largest_ideal_demo_phase_shift():
    result = idl.no_largest_ideal_demo(
        first_generator="1 + sin(nu*x + 1)", second_generator="1 + cos(nu*x + 1)"
    )
    assert result["all_stages_passed"] is True
    bound = result["stages"][3]["outcome"]["lower_bound"]
    assert bound == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-3)


def test_no_largest_ideal_demo_degenerate_pair():
    result = idl.no_largest_ideal_demo(second_generator="1 + sin(nu*x)")
    assert result["all_stages_passed"] is False
    flags = {s["name"]: s["passed"] for s in result["stages"]}
    assert flags["ideal-sum"] is False
    assert flags["unit-witness"] is False
    assert "not applicable" in result["conclusion"]
