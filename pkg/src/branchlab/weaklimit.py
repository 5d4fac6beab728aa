"""Weak-limit evidence for sequences paired against test-function panels.

A verdict is computed per test function from the pairing values along a
geometric index schedule: convergence when the last three pairings agree
within tolerance (and their quadrature estimates are below it), divergence
when the magnitudes grow monotonically with a stable positive log-log slope,
inconclusive otherwise.  Everything here is finite evidence at the schedule's
resolution, never a proof about the limit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .expr import DomainInterval
from .pairing import default_panel, pair_with_estimate
from .sequences import seq_mul, smooth_sequence

DEFAULT_SCHEDULE = tuple(2 ** k for k in range(13))
DEFAULT_TOL = 1e-4

# a fitted log-log slope below this is creep toward a finite limit, not growth
MIN_GROWTH_EXPONENT = 0.2
MAX_FIT_RESIDUAL = 0.2


@dataclass(frozen=True, slots=True)
class ConvergesTo:
    value: float
    uncertainty: float

    def to_dict(self):
        return {
            "kind": "converges-to",
            "value": self.value,
            "uncertainty": self.uncertainty,
        }


@dataclass(frozen=True, slots=True)
class Diverges:
    growth_exponent: float
    fit_residual: float

    def to_dict(self):
        return {
            "kind": "diverges",
            "growth_exponent": self.growth_exponent,
            "fit_residual": self.fit_residual,
        }


@dataclass(frozen=True, slots=True)
class Inconclusive:
    reason: str = ""

    def to_dict(self):
        return {"kind": "inconclusive", "reason": self.reason}


def _validate_schedule(schedule):
    if len(schedule) < 6:
        raise ValueError("schedule needs at least 6 indices")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    if schedule[0] < 1:
        raise ValueError("schedule indices must be positive")


def pairing_table(s, phi, schedule):
    """Pairing values and quadrature estimates along the schedule."""
    return [(index, *pair_with_estimate(s, index, phi)) for index in schedule]


def _verdict_from_table(table, tol):
    values = [v for _, v, _ in table]
    estimates = [e for _, _, e in table]
    last = values[-3:]
    spread = max(last) - min(last)
    if spread <= tol and max(estimates[-3:]) <= tol:
        return ConvergesTo(values[-1], max(spread, max(estimates[-3:])))
    magnitudes = [abs(v) for v in values]
    window = magnitudes[-6:]
    if all(b > a for a, b in zip(window, window[1:])) and all(m > 0 for m in window):
        logs_n = np.log([index for index, _, _ in table[-6:]])
        logs_p = np.log(window)
        slope, intercept = np.polyfit(logs_n, logs_p, 1)
        residual = float(
            np.sqrt(np.mean((logs_p - (slope * logs_n + intercept)) ** 2))
        )
        if residual < MAX_FIT_RESIDUAL and slope > MIN_GROWTH_EXPONENT:
            return Diverges(float(slope), residual)
        return Inconclusive("monotone growth without a stable power law")
    return Inconclusive("pairings neither settle nor grow monotonically")


def weak_limit(s, phi, schedule=None, tol=DEFAULT_TOL):
    """Limit verdict for one sequence against one test function."""
    schedule = tuple(schedule or DEFAULT_SCHEDULE)
    _validate_schedule(schedule)
    return _verdict_from_table(pairing_table(s, phi, schedule), tol)


class Classification(str, Enum):
    CONVERGENT = "convergent"
    WEAK_NULL = "weak-null"
    DIVERGENT = "divergent"
    MIXED = "mixed"


@dataclass(frozen=True, slots=True)
class FunctionalVerdict:
    per_test_function: tuple  # (TestFunction, LimitVerdict) pairs
    classification: Classification

    def to_dict(self):
        return {
            "classification": self.classification.value,
            "per_test_function": [
                {**phi.to_dict(), "verdict": verdict.to_dict()}
                for phi, verdict in self.per_test_function
            ],
        }


def classify_membership(s, panel, schedule=None, tol=DEFAULT_TOL):
    """Classify a sequence by its limit behaviour across a whole panel.

    weak-null additionally requires every limit to sit within its
    uncertainty (floored by the tolerance) of zero; weak-null therefore
    implies convergent by construction.
    """
    schedule = tuple(schedule or DEFAULT_SCHEDULE)
    _validate_schedule(schedule)
    verdicts = tuple(
        (phi, _verdict_from_table(pairing_table(s, phi, schedule), tol))
        for phi in panel
    )
    kinds = [type(v) for _, v in verdicts]
    if any(k is Diverges for k in kinds):
        classification = Classification.DIVERGENT
    elif all(k is ConvergesTo for k in kinds):
        if all(
            abs(v.value) <= max(v.uncertainty, tol) for _, v in verdicts
        ):
            classification = Classification.WEAK_NULL
        else:
            classification = Classification.CONVERGENT
    else:
        classification = Classification.MIXED
    return FunctionalVerdict(verdicts, classification)


def _pairing_rows(s, panel, schedule):
    rows = []
    for phi in panel:
        for index in schedule:
            value, estimate = pair_with_estimate(s, index, phi)
            rows.append(
                {
                    "nu": index,
                    "center": phi.center,
                    "width": phi.width,
                    "value": value,
                    "error_estimate": estimate,
                }
            )
    return rows


def classify_stage(name, s, panel, schedule, tol, include_pairings=True):
    """Timed report stage wrapping classify_membership, with raw pairing rows."""
    started = time.perf_counter()
    verdict = classify_membership(s, panel, schedule, tol)
    stage = {
        "name": name,
        "sequence": s.to_dict(),
        "classification": verdict.classification.value,
        "per_test_function": verdict.to_dict()["per_test_function"],
        "timing_s": time.perf_counter() - started,
    }
    if include_pairings:
        stage["pairings"] = _pairing_rows(s, panel, schedule)
    return stage, verdict


def nosquare_demo(domain=None, panel=None, schedule=None, tol=DEFAULT_TOL, sequence=None):
    """Why identifying all weak-null sequences with zero breaks multiplication.

    The base sequence is weak-null, yet its entry-wise square has weak limit
    half the test-function mass.  Any multiplication on classes that sends
    every weak-null sequence to the zero class would force the square's class
    to be both zero and one-half, so no such multiplication exists.
    """
    domain = domain or DomainInterval(-1.0, 1.0)
    panel = panel or default_panel(domain)
    schedule = tuple(schedule or DEFAULT_SCHEDULE)
    base = sequence or smooth_sequence("cos(nu*x)")
    square = seq_mul(base, base)

    base_stage, base_verdict = classify_stage("classify-base", base, panel, schedule, tol)
    square_stage, square_verdict = classify_stage(
        "classify-square", square, panel, schedule, tol
    )

    half_mass = []
    for phi, verdict in square_verdict.per_test_function:
        expected = 0.5 * phi.integral()
        entry = {
            "center": phi.center,
            "expected_half_mass": expected,
            "verdict": verdict.to_dict(),
        }
        if isinstance(verdict, ConvergesTo):
            entry["deviation"] = abs(verdict.value - expected)
        half_mass.append(entry)

    base_ok = base_verdict.classification is Classification.WEAK_NULL
    square_ok = square_verdict.classification is Classification.CONVERGENT and all(
        "deviation" in entry and entry["deviation"] <= 1e-3 for entry in half_mass
    )
    if base_ok and square_ok:
        conclusion = (
            "the base sequence is weak-null but its square settles at half the "
            "test-function mass on every panel member; a multiplication that "
            "identifies every weak-null sequence with zero would give the square "
            "two different values, so the naive quotient carries no multiplication"
        )
    else:
        conclusion = (
            "expected pattern not reproduced for this input; "
            "no impossibility conclusion is drawn"
        )

    return {
        "demo": "nosquare",
        "parameters": {
            "domain": [domain.lower, domain.upper],
            "schedule": list(schedule),
            "tol": tol,
            "panel": panel.to_dict(),
        },
        "stages": [
            base_stage,
            square_stage,
            {
                "name": "square-limits-vs-half-mass",
                "entries": half_mass,
                "timing_s": 0.0,
            },
        ],
        "all_stages_passed": bool(base_ok and square_ok),
        "conclusion": conclusion,
    }
