"""Information-theoretic valuation of screening outcomes.

The engine values a screening strategy by how much it moves the CRC
belief.  Per outcome the measure is the pointwise mutual information of
the CRC state with the observed results, normalized by the entropy of the
CRC belief, so the expectation over a full strategy lands in [0, 1] (the
fraction of CRC uncertainty removed).

Conditional independence assumption: the screening result and the
colonoscopy result are independent given the CRC state, so posteriors
chain through Bayes updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .screening import (
    COLONOSCOPY,
    NO_RESULT,
    PRED_FALSE,
    PRED_TRUE,
    InterventionSpec,
    default_catalog,
)

_COL = default_catalog()[COLONOSCOPY]
#: Colonoscopy report accuracy used for belief updates.
COL_SENSITIVITY = _COL.sensitivity
COL_SPECIFICITY = _COL.specificity


class DegeneratePriorError(ValueError):
    """CRC prior of exactly 0 or 1 leaves nothing to learn."""


class UnreachableResultError(ValueError):
    """Conditioning on a screening result that has probability zero."""


def entropy(p: float) -> float:
    """Binary entropy in nats, with 0*ln(0) taken to be 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of [0,1]: {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def bayes_update(prior: float, sensitivity: float, specificity: float, result: str) -> float:
    """Posterior P(crc | result) for a test with the given accuracy."""
    if result == NO_RESULT:
        return prior
    if result == PRED_TRUE:
        num = prior * sensitivity
        den = num + (1.0 - prior) * (1.0 - specificity)
    elif result == PRED_FALSE:
        num = prior * (1.0 - sensitivity)
        den = num + (1.0 - prior) * specificity
    else:
        raise ValueError(f"unknown result state {result!r}")
    if den == 0.0:
        raise UnreachableResultError(f"result {result} has probability zero")
    return num / den


def result_probability(prior: float, sensitivity: float, specificity: float, result: str) -> float:
    """Marginal P(result) for a performed test."""
    if result == PRED_TRUE:
        return prior * sensitivity + (1.0 - prior) * (1.0 - specificity)
    if result == PRED_FALSE:
        return prior * (1.0 - sensitivity) + (1.0 - prior) * specificity
    raise ValueError(f"unknown result state {result!r}")


def posterior_chain(p_crc: float, screen: InterventionSpec | None,
                    r_s: str, r_c: str) -> tuple[float, float]:
    """(P(crc|r_s), P(crc|r_s,r_c)) after the screening and colonoscopy reports."""
    p1 = p_crc if r_s == NO_RESULT else bayes_update(p_crc, screen.sensitivity, screen.specificity, r_s)
    p2 = p1 if r_c == NO_RESULT else bayes_update(p1, COL_SENSITIVITY, COL_SPECIFICITY, r_c)
    return p1, p2


@dataclass(frozen=True)
class OutcomeCell:
    """One joint outcome of (screening result, CRC state, colonoscopy, its result)."""

    screening_result: str
    crc: bool
    colonoscopy_performed: bool
    colonoscopy_result: str
    probability: float
    v_info: float


def _check_prior(p_crc: float) -> None:
    if not 0.0 < p_crc < 1.0:
        raise DegeneratePriorError(f"p(CRC) must lie strictly inside (0,1), got {p_crc}")


def _log_ratio(post: float, prior: float) -> float:
    # Guarded for measure-zero branches; callers skip cells with probability 0.
    if post == 0.0 or prior == 0.0:
        return 0.0
    return math.log(post / prior)


def v_info(p_crc: float, screen: InterventionSpec | None, crc: bool,
           r_s: str, r_c: str) -> float:
    """Normalized pointwise mutual information of one realized outcome.

    Sums the screening-stage and colonoscopy-stage belief shifts (each zero
    when the corresponding result is NoResult) and divides by the entropy of
    the patient-specific prior.  Positive for correct predictions, negative
    for wrong ones, zero when nothing was observed.
    """
    _check_prior(p_crc)
    if screen is None or (screen is not None and not screen.is_test):
        if r_s != NO_RESULT:
            raise ValueError("screening result present without a screening test")
    p1, p2 = posterior_chain(p_crc, screen, r_s, r_c)
    h = entropy(p_crc)
    if crc:
        pmi = _log_ratio(p1, p_crc) + _log_ratio(p2, p1)
    else:
        pmi = _log_ratio(1.0 - p1, 1.0 - p_crc) + _log_ratio(1.0 - p2, 1.0 - p1)
    return pmi / h


def outcome_cells(p_crc: float, screen: InterventionSpec | None, r_s: str,
                  colonoscopy: bool) -> list[OutcomeCell]:
    """All (crc, colonoscopy result) cells conditional on one screening result.

    Cell probabilities are conditional on ``r_s``; zero-probability cells are
    kept with v_info 0 so tables render completely but never contribute to
    expectations.
    """
    _check_prior(p_crc)
    if screen is None or not screen.is_test:
        if r_s != NO_RESULT:
            raise UnreachableResultError("no-screening only yields NoResult")
        p1 = p_crc
    else:
        if r_s == NO_RESULT:
            raise UnreachableResultError(f"{screen.id} was performed; NoResult unreachable")
        p1 = bayes_update(p_crc, screen.sensitivity, screen.specificity, r_s)

    cells: list[OutcomeCell] = []
    for crc, p_state in ((True, p1), (False, 1.0 - p1)):
        if colonoscopy:
            for r_c in (PRED_TRUE, PRED_FALSE):
                p_rc = COL_SENSITIVITY if r_c == PRED_TRUE else 1.0 - COL_SENSITIVITY
                if not crc:
                    p_rc = 1.0 - COL_SPECIFICITY if r_c == PRED_TRUE else COL_SPECIFICITY
                prob = p_state * p_rc
                val = v_info(p_crc, screen, crc, r_s, r_c) if prob > 0.0 else 0.0
                cells.append(OutcomeCell(r_s, crc, True, r_c, prob, val))
        else:
            val = v_info(p_crc, screen, crc, r_s, NO_RESULT) if p_state > 0.0 else 0.0
            cells.append(OutcomeCell(r_s, crc, False, NO_RESULT, p_state, val))
    return cells


def reachable_results(screen: InterventionSpec | None) -> tuple[str, ...]:
    """Screening-result states a strategy must map to a colonoscopy decision."""
    if screen is None or not screen.is_test:
        return (NO_RESULT,)
    return (PRED_TRUE, PRED_FALSE)


def expected_v_info_given_result(p_crc: float, screen: InterventionSpec | None,
                                 r_s: str, colonoscopy: bool) -> float:
    """E[v_info | screening result, colonoscopy decision].

    This is the value-node table entry that the utility model consumes: the
    extension of v_info over the yet-unresolved CRC state and colonoscopy
    report.  Unlike the full expectation it is not confined to [0, 1].
    """
    if screen is not None and screen.is_test and r_s != NO_RESULT:
        if result_probability(p_crc, screen.sensitivity, screen.specificity, r_s) <= 0.0:
            raise UnreachableResultError(f"result {r_s} unreachable under {screen.id}")
    cells = outcome_cells(p_crc, screen, r_s, colonoscopy)
    return sum(c.probability * c.v_info for c in cells)


def expected_v_info(p_crc: float, screen: InterventionSpec | None,
                    col_rule: Mapping[str, bool] | Callable[[str], bool]) -> float:
    """Total expected normalized information of a screening strategy.

    Equals MI(CRC; results) / H(CRC), hence lies in [0, 1]; zero exactly
    when no intervention is performed.
    """
    _check_prior(p_crc)
    rule = col_rule if callable(col_rule) else col_rule.__getitem__
    total = 0.0
    for r_s in reachable_results(screen):
        if screen is None or not screen.is_test:
            p_rs = 1.0
        else:
            p_rs = result_probability(p_crc, screen.sensitivity, screen.specificity, r_s)
        if p_rs <= 0.0:
            continue
        total += p_rs * expected_v_info_given_result(p_crc, screen, r_s, bool(rule(r_s)))
    return total


def single_test_v_info(p_crc: float, spec: InterventionSpec) -> float:
    """Normalized MI of performing just this test (no follow-up colonoscopy)."""
    if not spec.is_test:
        return 0.0
    return expected_v_info(p_crc, spec, {PRED_TRUE: False, PRED_FALSE: False})


def v_info_curve(spec: InterventionSpec, grid: Sequence[float]) -> list[tuple[float, float]]:
    """(p, single-test normalized MI) along a grid of CRC probabilities."""
    out = []
    for p in grid:
        _check_prior(p)
        out.append((p, single_test_v_info(p, spec)))
    return out


def curve_table(specs: Iterable[InterventionSpec], grid: Sequence[float]) -> dict[str, list[float]]:
    """Column-oriented curve data: 'p' plus one column per intervention id."""
    table: dict[str, list[float]] = {"p": list(grid)}
    for spec in specs:
        table[spec.id] = [v for _, v in v_info_curve(spec, grid)]
    return table


__all__ = [
    "COL_SENSITIVITY", "COL_SPECIFICITY",
    "DegeneratePriorError", "UnreachableResultError",
    "OutcomeCell",
    "entropy", "bayes_update", "result_probability", "posterior_chain",
    "v_info", "outcome_cells", "reachable_results",
    "expected_v_info_given_result", "expected_v_info",
    "single_test_v_info", "v_info_curve", "curve_table",
]
