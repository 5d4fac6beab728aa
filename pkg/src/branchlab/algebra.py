"""Quotient-algebra layer: generalized functions modulo a chosen ideal.

An algebra configuration pins down an ideal that passed the off-diagonality
gate, a domain, and whether entry-wise derivation descends to the quotient.
Generalized functions are representative sequences tagged with their algebra;
equality is membership of the difference, so it inherits the three-valued
character of membership.  A small catalog of distributions embeds through
explicit regularizations chosen to differentiate exactly within the
expression language.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .expr import DomainInterval, SafetyStatus, denominator_safety, simplify
from .ideals import (
    Closed,
    EventuallyZero,
    InIdeal,
    NotInIdeal,
    OffDiagonal,
    derivation_closure,
    membership,
    off_diagonality,
)
from .pairing import Panel, TestFunction, bump, default_panel, pair_with_estimate
from .sequences import (
    SmoothSequence,
    apply_smooth,
    diagonal,
    seq_derive,
    smooth_sequence,
)
from .weaklimit import (
    DEFAULT_TOL,
    Classification,
    ConvergesTo,
    Diverges,
    classify_membership,
    weak_limit,
)

GRID_POINTS = 256
SMOOTH_CONSISTENCY_TOL = 1e-12
SEPARATION_FACTOR = 100.0
DELTA_SQUARE_SCHEDULE = tuple(2**k for k in range(2, 13))
DELTA_SQUARE_BAND = 0.05


class AlgebraError(ValueError):
    """Gate violation: inadmissible ideal or unsupported operation."""


@dataclass(frozen=True, slots=True)
class AlgebraConfig:
    """Validated by make_algebra; construct through it, not directly.

    derivation_capable is only set when the ideal's derivation closure came
    back Closed, and the ideal must have passed the off-diagonality gate.
    """

    ideal: object
    derivation_capable: bool
    domain: DomainInterval

    def to_dict(self):
        return {
            "ideal": self.ideal.to_dict(),
            "derivation_capable": self.derivation_capable,
            "domain": [self.domain.lower, self.domain.upper],
        }


def make_algebra(ideal, domain, **off_diag_params):
    """Quotient algebra over an ideal that passes the admissibility gate.

    The ideal must certify off-diagonal (meeting the diagonal constants only
    in zero); otherwise the quotient would identify distinct smooth
    functions and the construction is refused.  Derivation capability is
    recorded from the closure check, not assumed.
    """
    verdict = off_diagonality(ideal, domain, **off_diag_params)
    if not isinstance(verdict, OffDiagonal):
        raise AlgebraError(
            "ideal failed the off-diagonality gate: " + str(verdict.to_dict())
        )
    closure = derivation_closure(ideal, 1, domain)
    return AlgebraConfig(ideal, isinstance(closure, Closed), domain)


def eventually_zero_algebra(domain=None):
    """The house algebra: decidable equality, derivation-capable."""
    domain = domain or DomainInterval(-1.0, 1.0)
    return AlgebraConfig(EventuallyZero(), True, domain)


@dataclass(frozen=True, slots=True)
class GeneralizedFunction:
    representative: SmoothSequence
    algebra: AlgebraConfig

    def to_dict(self):
        return {
            "representative": self.representative.to_dict(),
            "algebra": self.algebra.to_dict(),
        }


def _check_safety(s, domain):
    checked = [s.tail]
    checked.extend(entry for _, entry in s.exceptional)
    for candidate in checked:
        report = denominator_safety(candidate, domain)
        if report.status is not SafetyStatus.SAFE:
            raise AlgebraError(
                "representative is not denominator-safe on the domain: "
                + str(report.to_dict())
            )


def gf(representative, algebra):
    """Wrap a representative after checking denominator safety."""
    if isinstance(representative, str) or isinstance(representative, ex.Expr):
        representative = smooth_sequence(representative)
    _check_safety(representative, algebra.domain)
    return GeneralizedFunction(representative, algebra)


def _same_algebra(f, g):
    if f.algebra != g.algebra:
        raise AlgebraError("operands live in different algebras")


def gf_add(f, g):
    _same_algebra(f, g)
    return GeneralizedFunction(f.representative + g.representative, f.algebra)


def gf_mul(f, g):
    _same_algebra(f, g)
    return GeneralizedFunction(f.representative * g.representative, f.algebra)


def gf_apply_smooth(f, outer):
    """Apply a smooth outer function (placeholder u) representative-wise."""
    result = apply_smooth(outer, f.representative, f.algebra.domain)
    return GeneralizedFunction(result, f.algebra)


def gf_derive(f, order=1):
    """Quotient derivation; only defined when the ideal closure held."""
    if not isinstance(order, int) or order < 0:
        raise ValueError("derivation order must be a nonnegative integer")
    if order == 0:
        return f
    if not f.algebra.derivation_capable:
        raise AlgebraError(
            "algebra is not derivation-capable: the ideal's closure under "
            "entry-wise derivatives was not established, so derivation does "
            "not descend to the quotient"
        )
    return GeneralizedFunction(seq_derive(f.representative, order), f.algebra)


@dataclass(frozen=True, slots=True)
class Equal:
    evidence: InIdeal

    def to_dict(self):
        return {"verdict": "equal", "evidence": self.evidence.to_dict()}


@dataclass(frozen=True, slots=True)
class NotEqual:
    evidence: NotInIdeal

    def to_dict(self):
        return {"verdict": "not-equal", "evidence": self.evidence.to_dict()}


@dataclass(frozen=True, slots=True)
class EqualityUnknown:
    reason: str = ""

    def to_dict(self):
        return {"verdict": "unknown", "reason": self.reason}


def gf_equal(f, g):
    """Equality modulo the ideal, decided by membership of the difference."""
    _same_algebra(f, g)
    difference = f.representative - g.representative
    verdict = membership(difference, f.algebra.ideal, f.algebra.domain)
    if isinstance(verdict, InIdeal):
        return Equal(verdict)
    if isinstance(verdict, NotInIdeal):
        return NotEqual(verdict)
    return EqualityUnknown(verdict.reason)


# ---------------------------------------------------------------------------
# distribution catalog


@dataclass(frozen=True, slots=True)
class Delta:
    def to_dict(self):
        return {"tag": "delta"}


@dataclass(frozen=True, slots=True)
class Heaviside:
    def to_dict(self):
        return {"tag": "heaviside"}


@dataclass(frozen=True, slots=True)
class DeltaDerivative:
    order: int

    def __post_init__(self):
        if not isinstance(self.order, int) or self.order < 1:
            raise ValueError("delta derivative order must be a positive integer")

    def to_dict(self):
        return {"tag": "delta-derivative", "order": self.order}


@dataclass(frozen=True, slots=True)
class SmoothEmbed:
    psi: ex.Expr

    def __post_init__(self):
        psi = ex.as_expr(self.psi)
        object.__setattr__(self, "psi", psi)
        if "nu" in ex.variables(psi):
            raise ValueError("smooth embeddings must not depend on the index")

    def to_dict(self):
        return {"tag": "smooth-embed", "psi": ex.to_string(self.psi)}


HEAVISIDE_REPRESENTATIVE = "(1 + tanh(nu*x))/2"
DELTA_REPRESENTATIVE = "nu/(2*cosh(nu*x)^2)"


def embed_distribution(tag, algebra):
    """Catalog regularizations: steep tanh step and its exact derivatives.

    The delta representative is literally the symbolic derivative of the
    step representative, so derivation coherence holds by construction.
    """
    match tag:
        case Heaviside():
            rep = smooth_sequence(HEAVISIDE_REPRESENTATIVE)
        case Delta():
            rep = smooth_sequence(DELTA_REPRESENTATIVE)
        case DeltaDerivative(order=k):
            rep = seq_derive(smooth_sequence(DELTA_REPRESENTATIVE), k)
        case SmoothEmbed(psi=psi):
            rep = diagonal(psi)
        case _:
            raise TypeError("unknown distribution tag")
    return GeneralizedFunction(rep, algebra)


def smooth_mult_consistency(psi, chi, domain=None, grid_points=GRID_POINTS):
    """Check that embedding preserves products of smooth functions.

    The product of the diagonal embeddings must match the embedding of the
    product, structurally after normalization and numerically on a grid
    (the grid compares the two evaluation orders, not the simplified
    difference, so it is not vacuous).
    """
    domain = domain or DomainInterval(-1.0, 1.0)
    psi = ex.parse(psi) if isinstance(psi, str) else ex.as_expr(psi)
    chi = ex.parse(chi) if isinstance(chi, str) else ex.as_expr(chi)
    for candidate in (psi, chi):
        if "nu" in ex.variables(candidate):
            raise ValueError("both factors must be index-free")
    lhs = diagonal(psi) * diagonal(chi)
    rhs = diagonal(simplify(psi * chi))
    difference = lhs - rhs
    structural = ex.is_zero(simplify(difference.tail))
    xs = domain.interior_grid(grid_points)
    lhs_values = lhs.term_values(1, xs)
    rhs_values = rhs.term_values(1, xs)
    finite = np.isfinite(lhs_values) & np.isfinite(rhs_values)
    residual = (
        float(np.max(np.abs(lhs_values[finite] - rhs_values[finite])))
        if np.any(finite)
        else math.inf
    )
    passed = structural and residual < SMOOTH_CONSISTENCY_TOL
    return {
        "psi": ex.to_string(psi),
        "chi": ex.to_string(chi),
        "structural_zero": structural,
        "max_grid_residual": residual,
        "grid_points": int(np.count_nonzero(finite)),
        "passed": passed,
    }


# ---------------------------------------------------------------------------
# demos


def _limit_rows(s, panel, schedule, tol):
    rows = []
    for phi in panel:
        verdict = weak_limit(s, phi, schedule, tol)
        rows.append(
            {
                "center": phi.center,
                "width": phi.width,
                "verdict": verdict.to_dict(),
            }
        )
    return rows


def _limit_vector(rows):
    values = []
    uncertainties = []
    for row in rows:
        verdict = row["verdict"]
        if verdict["kind"] != "converges-to":
            return None, None
        values.append(verdict["value"])
        uncertainties.append(verdict["uncertainty"])
    return values, uncertainties


def branching_demo(
    representatives=None,
    operation="u^2",
    domain=None,
    panel=None,
    schedule=None,
    tol=DEFAULT_TOL,
):
    """Distinct distributional outcomes of one operation on equal inputs.

    Every representative is first classified as converging weakly to zero,
    so each one stands for the zero distribution.  Applying the operation
    term-wise then produces sequences with different weak limits; which
    limit the quotient algebra selects depends on which representatives the
    ideal identifies, and no choice is canonical.
    """
    domain = domain or DomainInterval(-1.0, 1.0)
    panel = panel or default_panel(domain)
    if representatives is None:
        representatives = (smooth_sequence("cos(nu*x)"), smooth_sequence("0"))
    else:
        representatives = tuple(
            r if isinstance(r, SmoothSequence) else smooth_sequence(r)
            for r in representatives
        )
    if len(representatives) < 2:
        raise ValueError("branching needs at least two representatives")

    stages = []

    started = time.perf_counter()
    base_records = []
    all_null = True
    for s in representatives:
        verdict = classify_membership(s, panel, schedule, tol)
        null = verdict.classification is Classification.WEAK_NULL
        all_null = all_null and null
        base_records.append(
            {
                "sequence": s.to_dict(),
                "classification": verdict.classification.value,
                "weak_null": null,
            }
        )
    stages.append(
        {
            "name": "classify-representatives",
            "records": base_records,
            "passed": all_null,
            "timing_s": time.perf_counter() - started,
        }
    )

    started = time.perf_counter()
    squared_records = []
    limit_vectors = []
    all_definite = True
    for s in representatives:
        transformed = apply_smooth(operation, s, domain)
        verdict = classify_membership(transformed, panel, schedule, tol)
        rows = _limit_rows(transformed, panel, schedule, tol)
        values, uncertainties = _limit_vector(rows)
        limit_vectors.append((values, uncertainties))
        definite = verdict.classification in (
            Classification.CONVERGENT,
            Classification.WEAK_NULL,
        )
        all_definite = all_definite and definite
        squared_records.append(
            {
                "sequence": transformed.to_dict(),
                "classification": verdict.classification.value,
                "per_test_function": rows,
            }
        )
    stages.append(
        {
            "name": "apply-operation",
            "operation": operation if isinstance(operation, str) else ex.to_string(operation),
            "records": squared_records,
            "passed": all_definite,
            "timing_s": time.perf_counter() - started,
        }
    )

    started = time.perf_counter()
    separations = []
    witness_found = False
    for i in range(len(representatives)):
        for j in range(i + 1, len(representatives)):
            vi, ui = limit_vectors[i]
            vj, uj = limit_vectors[j]
            if vi is None or vj is None:
                separations.append(
                    {"pair": [i, j], "separation": None, "ratio": None}
                )
                continue
            gap = max(abs(a - b) for a, b in zip(vi, vj))
            uncertainty = max(a + b for a, b in zip(ui, uj))
            ratio = gap / max(uncertainty, 1e-15)
            separated = ratio >= SEPARATION_FACTOR
            witness_found = witness_found or separated
            separations.append(
                {
                    "pair": [i, j],
                    "separation": gap,
                    "combined_uncertainty": uncertainty,
                    "ratio": ratio,
                    "separated": separated,
                }
            )
    stages.append(
        {
            "name": "separation",
            "records": separations,
            "passed": witness_found,
            "timing_s": time.perf_counter() - started,
        }
    )

    all_passed = all(stage["passed"] for stage in stages)
    if all_passed:
        conclusion = (
            "all representatives converge weakly to zero, yet the operation "
            "sends them to sequences with well-separated weak limits; the "
            "distributional outcome depends on the representative, so it "
            "depends on the ideal that decides which representatives are "
            "identified, and no single quotient fixes the product of "
            "singular objects"
        )
    elif not witness_found and all_null and all_definite:
        conclusion = (
            "the operation sent these representatives to sequences with "
            "matching weak limits; no branching witnessed for this choice"
        )
    else:
        conclusion = "expected pattern not reproduced; the demo is not applicable"

    return {
        "demo": "branching",
        "parameters": {
            "domain": [domain.lower, domain.upper],
            "operation": operation if isinstance(operation, str) else ex.to_string(operation),
            "representatives": [s.to_dict() for s in representatives],
            "panel": [phi.to_dict() for phi in panel],
        },
        "stages": stages,
        "all_stages_passed": all_passed,
        "conclusion": conclusion,
    }


def delta_square_demo(domain=None, probe=None, schedule=None, band=DELTA_SQUARE_BAND):
    """The squared delta: a healthy algebra element with no weak limit.

    Pairings of the squared representative against a probe grow linearly in
    the index, matching the closed-form first-order prediction
    index * probe(0) / 3, so the result cannot be identified with any
    distribution; the algebra still holds it as an ordinary element.
    """
    domain = domain or DomainInterval(-1.0, 1.0)
    probe = probe or bump(0.0, 1.0, normalized=True, domain=domain)
    schedule = tuple(schedule) if schedule is not None else DELTA_SQUARE_SCHEDULE
    algebra = eventually_zero_algebra(domain)
    delta = embed_distribution(Delta(), algebra)
    squared = gf_mul(delta, delta)
    rep = squared.representative

    stages = []

    started = time.perf_counter()
    probe_height = probe.value(0.0)
    rows = []
    within_band = True
    for index in schedule:
        value, estimate = pair_with_estimate(rep, index, probe)
        expected = index * probe_height / 3.0
        deviation = abs(value - expected) / abs(expected)
        within_band = within_band and deviation <= band
        rows.append(
            {
                "nu": index,
                "center": probe.center,
                "width": probe.width,
                "value": value,
                "error_estimate": estimate,
                "expected": expected,
                "relative_deviation": deviation,
            }
        )
    stages.append(
        {
            "name": "pairing-table",
            "records": rows,
            "band": band,
            "passed": within_band,
            "timing_s": time.perf_counter() - started,
        }
    )

    started = time.perf_counter()
    verdict = weak_limit(rep, probe, schedule)
    exponent_ok = (
        isinstance(verdict, Diverges) and abs(verdict.growth_exponent - 1.0) <= 0.1
    )
    stages.append(
        {
            "name": "growth-exponent",
            "verdict": verdict.to_dict(),
            "passed": exponent_ok,
            "timing_s": time.perf_counter() - started,
        }
    )

    started = time.perf_counter()
    panel = default_panel(domain)
    classified = classify_membership(rep, panel, schedule)
    divergent = classified.classification is Classification.DIVERGENT
    stages.append(
        {
            "name": "panel-classification",
            "classification": classified.classification.value,
            "passed": divergent,
            "timing_s": time.perf_counter() - started,
        }
    )

    all_passed = all(stage["passed"] for stage in stages)
    if all_passed:
        conclusion = (
            "pairings of the squared delta grow like index * probe(0) / 3 "
            "with growth exponent 1 within 0.1; the square has no weak limit "
            "and represents no distribution, yet it is a first-class element "
            "of the quotient algebra"
        )
    else:
        conclusion = "expected pattern not reproduced; the demo is not applicable"

    return {
        "demo": "delta-square",
        "parameters": {
            "domain": [domain.lower, domain.upper],
            "probe": probe.to_dict(),
            "schedule": list(schedule),
        },
        "stages": stages,
        "all_stages_passed": all_passed,
        "conclusion": conclusion,
    }
