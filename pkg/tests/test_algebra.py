"""Quotient algebra gates, embeddings, equality, and the two demos."""

import math
import random
import time

import numpy as np
import pytest

import branchlab as bl
import branchlab.expr as ex
from branchlab import algebra as alg
from branchlab import ideals as idl
from branchlab.pairing import bump, default_panel, pair
from branchlab.weaklimit import DEFAULT_SCHEDULE, weak_limit

DOM = ex.DomainInterval(-1.0, 1.0)
DOM2PI = ex.DomainInterval(0.0, 2.0 * math.pi)

# midpoint value of the bump profile integral, shared with the pairing tests
SHAPE_INTEGRAL = 0.4439938161680794


@pytest.fixture(scope="module")
def house():
    return alg.eventually_zero_algebra()


@pytest.fixture(scope="module")
def trig_algebra():
    return alg.make_algebra(idl.generated_by("1 + sin(nu*x)"), DOM2PI)


def test_eventually_zero_algebra_defaults(house):
    assert isinstance(house.ideal, idl.EventuallyZero)
    assert house.derivation_capable is True
    assert house.domain == DOM
    payload = house.to_dict()
    assert payload["ideal"] == {"kind": "eventually-zero"}
    assert payload["derivation_capable"] is True
    assert payload["domain"] == [-1.0, 1.0]


def test_make_algebra_records_closure(house, trig_algebra):
    # the trig ideal passes the gate by certificate but its closure under
    # derivatives stays open, so derivation must not be offered
    assert trig_algebra.derivation_capable is False
    gated = alg.make_algebra(idl.EventuallyZero(), DOM)
    assert gated.derivation_capable is True


def test_make_algebra_refuses_unit_ideal():
    combined = idl.ideal_sum(
        idl.generated_by("1 + sin(nu*x)"), idl.generated_by("1 + cos(nu*x)")
    )
    with pytest.raises(alg.AlgebraError, match="off-diagonality gate"):
        alg.make_algebra(combined, DOM2PI)


def test_gf_wraps_and_checks_safety(house):
    f = alg.gf("x^2", house)
    assert f.representative.signature() == "x^2|1"
    assert f.to_dict()["representative"] == {"tail": "x^2"}
    with pytest.raises(alg.AlgebraError, match="denominator-safe"):
        alg.gf("1/x", house)


def test_gf_operations_require_same_algebra(house, trig_algebra):
    f = alg.gf("x", house)
    g = alg.gf("x", trig_algebra)
    with pytest.raises(alg.AlgebraError, match="different algebras"):
        alg.gf_add(f, g)
    with pytest.raises(alg.AlgebraError, match="different algebras"):
        alg.gf_mul(f, g)


def test_gf_derive_gates(house, trig_algebra):
    f = alg.gf("x^2", house)
    assert alg.gf_derive(f, 0) is f
    assert alg.gf_derive(f).representative.signature() == "2*x|1"
    with pytest.raises(ValueError, match="nonnegative"):
        alg.gf_derive(f, -1)
    with pytest.raises(ValueError, match="nonnegative"):
        alg.gf_derive(f, 1.5)
    with pytest.raises(alg.AlgebraError, match="derivation-capable"):
        alg.gf_derive(alg.gf("x", trig_algebra))


def test_embedding_derivation_coherence(house):
    # the delta regularization is the exact symbolic derivative of the step
    delta = alg.embed_distribution(alg.Delta(), house)
    step = alg.embed_distribution(alg.Heaviside(), house)
    assert (
        bl.seq_derive(step.representative).signature()
        == delta.representative.signature()
    )
    first = alg.embed_distribution(alg.DeltaDerivative(1), house)
    assert (
        alg.gf_derive(delta).representative.signature()
        == first.representative.signature()
    )


def test_delta_concentrates_at_probe_height(house):
    delta = alg.embed_distribution(alg.Delta(), house)
    phi = bump(0.0, 0.8, normalized=True, domain=DOM)
    value = pair(delta.representative, 1024, phi)
    assert value == pytest.approx(phi.value(0.0), abs=1e-3)


def test_heaviside_weak_limit_right_mass(house):
    step = alg.embed_distribution(alg.Heaviside(), house)
    for center, width in ((0.0, 0.8), (0.3, 0.5)):
        phi = bump(center, width, normalized=True, domain=DOM)
        verdict = weak_limit(step.representative, phi, DEFAULT_SCHEDULE)
        payload = verdict.to_dict()
        assert payload["kind"] == "converges-to"
        lo, hi = 0.0, center + width
        panels = 2**15
        mids = np.linspace(lo, hi, panels, endpoint=False) + (hi - lo) / (2 * panels)
        oracle = float(np.sum(phi.values(mids)) * (hi - lo) / panels)
        assert payload["value"] == pytest.approx(oracle, abs=1e-3)


def test_delta_square_representative(house):
    delta = alg.embed_distribution(alg.Delta(), house)
    squared = alg.gf_mul(delta, delta)
    expected = bl.smooth_sequence(ex.simplify(ex.parse("nu^2/(4*cosh(nu*x)^4)")))
    assert squared.representative.signature() == expected.signature()
    assert squared.representative.signature() == "0.25*nu^2/cosh(nu*x)^4|1"


def test_embedding_catalog_validation(house):
    smooth = alg.embed_distribution(alg.SmoothEmbed(ex.parse("x^2")), house)
    assert ex.to_string(smooth.representative.term(5)) == "x^2"
    with pytest.raises(ValueError, match="positive integer"):
        alg.DeltaDerivative(0)
    with pytest.raises(ValueError, match="not depend on the index"):
        alg.SmoothEmbed(ex.parse("nu*x"))
    with pytest.raises(TypeError, match="unknown distribution tag"):
        alg.embed_distribution("delta", house)


def test_smooth_mult_consistency_corpus(expression_corpus):
    pairs = [
        (expression_corpus[k], expression_corpus[k + 1]) for k in range(0, 94, 2)
    ]
    pairs += [
        (ex.x, ex.x),
        (ex.parse("sin(x)"), ex.parse("cos(x)")),
        (ex.parse("1"), expression_corpus[7]),
    ]
    for psi, chi in pairs:
        report = alg.smooth_mult_consistency(psi, chi)
        assert report["structural_zero"] is True
        assert report["grid_points"] > 0
        assert report["max_grid_residual"] < 1e-12
        assert report["passed"] is True


def test_smooth_mult_consistency_rejects_index():
    with pytest.raises(ValueError, match="index-free"):
        alg.smooth_mult_consistency("nu*x", "x")


def test_quotient_well_definedness(house, expression_corpus):
    # a representative and its finitely perturbed twin must stay equal under
    # sum, product, and derivation; this is what makes the quotient a ring
    safe = [
        e
        for e in expression_corpus
        if ex.denominator_safety(e, DOM).status is ex.SafetyStatus.SAFE
    ]
    rng = random.Random(411)
    for _ in range(100):
        f_tail = safe[rng.randrange(len(safe))]
        g_tail = safe[rng.randrange(len(safe))]
        entry = safe[rng.randrange(len(safe))]
        index = rng.randint(1, 12)
        f = alg.gf(bl.smooth_sequence(f_tail), house)
        perturbed = alg.gf(
            bl.smooth_sequence(f_tail, {index: ex.Add(f_tail, entry)}), house
        )
        g = alg.gf(bl.smooth_sequence(g_tail), house)
        assert isinstance(alg.gf_equal(f, perturbed), alg.Equal)
        assert isinstance(
            alg.gf_equal(alg.gf_add(f, g), alg.gf_add(perturbed, g)), alg.Equal
        )
        assert isinstance(
            alg.gf_equal(alg.gf_mul(f, g), alg.gf_mul(perturbed, g)), alg.Equal
        )
        assert isinstance(
            alg.gf_equal(alg.gf_derive(f), alg.gf_derive(perturbed)), alg.Equal
        )


def test_gf_equal_decidable_cases(house):
    f = alg.gf(bl.smooth_sequence("x^2"), house)
    perturbed = alg.gf(bl.smooth_sequence("x^2", {4: "x^2 + sin(x)"}), house)
    verdict = alg.gf_equal(f, perturbed)
    assert isinstance(verdict, alg.Equal)
    assert verdict.to_dict()["verdict"] == "equal"

    ones = alg.gf(bl.diagonal("1"), house)
    zero = alg.gf(bl.diagonal("0"), house)
    assert isinstance(alg.gf_equal(ones, zero), alg.NotEqual)
    cos = alg.gf("cos(nu*x)", house)
    assert isinstance(alg.gf_equal(cos, zero), alg.NotEqual)


def test_gf_equal_generated_ideal(trig_algebra):
    zero = alg.gf("0", trig_algebra)
    factored = alg.gf("(1 + sin(nu*x))*x", trig_algebra)
    assert isinstance(alg.gf_equal(factored, zero), alg.Equal)
    assert isinstance(alg.gf_equal(alg.gf("1", trig_algebra), zero), alg.NotEqual)
    open_case = alg.gf_equal(alg.gf("nu*cos(nu*x)", trig_algebra), zero)
    assert isinstance(open_case, alg.EqualityUnknown)
    assert "no factorization matched" in open_case.reason
    assert open_case.to_dict()["verdict"] == "unknown"


def test_branching_demo_default():
    result = alg.branching_demo()
    assert result["demo"] == "branching"
    assert [s["name"] for s in result["stages"]] == [
        "classify-representatives",
        "apply-operation",
        "separation",
    ]
    assert result["all_stages_passed"] is True
    assert result["parameters"]["operation"] == "u^2"

    records = result["stages"][1]["records"]
    for row in records[0]["per_test_function"]:
        assert row["verdict"]["kind"] == "converges-to"
        assert row["verdict"]["value"] == pytest.approx(0.5, abs=1e-3)
    for row in records[1]["per_test_function"]:
        assert row["verdict"]["value"] == pytest.approx(0.0, abs=1e-6)

    separation = result["stages"][2]["records"][0]
    assert separation["separation"] == pytest.approx(0.5, abs=1e-3)
    assert separation["ratio"] >= alg.SEPARATION_FACTOR
    assert "no single quotient" in result["conclusion"]


def test_branching_demo_equal_squares_no_witness():
    result = alg.branching_demo(representatives=("cos(nu*x)", "sin(nu*x)"))
    assert result["all_stages_passed"] is False
    flags = {s["name"]: s["passed"] for s in result["stages"]}
    assert flags["classify-representatives"] is True
    assert flags["apply-operation"] is True
    assert flags["separation"] is False
    assert "no branching witnessed" in result["conclusion"]


def test_branching_demo_scaled_pair():
    result = alg.branching_demo(representatives=("cos(nu*x)", "2*cos(nu*x)"))
    assert result["all_stages_passed"] is True
    records = result["stages"][1]["records"]
    for row in records[0]["per_test_function"]:
        assert row["verdict"]["value"] == pytest.approx(0.5, abs=1e-3)
    for row in records[1]["per_test_function"]:
        assert row["verdict"]["value"] == pytest.approx(2.0, abs=3e-3)


def test_branching_demo_needs_two_representatives():
    with pytest.raises(ValueError, match="at least two"):
        alg.branching_demo(representatives=("cos(nu*x)",))


def test_branching_witness_stability():
    # the separation witness must survive a coarser panel and a longer tail
    coarse = alg.branching_demo(panel=default_panel(DOM, count=6))
    assert coarse["all_stages_passed"] is True
    longer = alg.branching_demo(schedule=tuple(2**k for k in range(14)))
    assert longer["all_stages_passed"] is True


def test_delta_square_demo_structure():
    started = time.perf_counter()
    result = alg.delta_square_demo()
    assert time.perf_counter() - started < 20.0

    assert result["demo"] == "delta-square"
    assert [s["name"] for s in result["stages"]] == [
        "pairing-table",
        "growth-exponent",
        "panel-classification",
    ]
    assert result["all_stages_passed"] is True

    table = result["stages"][0]
    assert table["band"] == alg.DELTA_SQUARE_BAND
    for row in table["records"]:
        # closed form for the linear growth, written out independently
        closed = row["nu"] * math.exp(-1.0) / (3.0 * SHAPE_INTEGRAL)
        assert row["expected"] == pytest.approx(closed, rel=1e-12)
        assert abs(row["value"] - closed) <= alg.DELTA_SQUARE_BAND * closed

    exponent = result["stages"][1]["verdict"]["growth_exponent"]
    assert exponent == pytest.approx(1.0, abs=0.1)
    assert result["stages"][2]["classification"] == "divergent"
    assert "no weak limit" in result["conclusion"]
