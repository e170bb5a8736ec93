"""Multi-attribute preference aggregation and its elicitation machinery.

Cost and information are merged by a weighted-additive value function whose
trade-off weight depends on the comfort level of the intervention path:

    v(cost, info, comfort=k) = lambda_k * info - log10(cost + 1)

Comfort weights come from pairwise indifference interviews (robustified by
the median), and a constant-absolute-risk-aversion utility

    u(v) = a - b * exp(-rho * v)

is calibrated on best/worst anchors plus one probability-equivalent answer.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import median
from typing import Mapping, Sequence

DEFAULT_LAMBDAS = {1: 4.01, 2: 4.17, 3: 6.80, 4: 7.0}
DEFAULT_BEST_ANCHOR = (0.0, 15.75)        # (cost*, info*)
DEFAULT_WORST_ANCHOR = (8131.71, 0.0)     # (cost_*, info_*)
DEFAULT_PE_POINT = (50.0, 4.1)            # sure-thing coordinates for the PE question
DEFAULT_PE_VALUE = 0.7
#: Comfort level at which anchor/PE values are computed during calibration.
CALIBRATION_COMFORT = 3

_RHO_LO = 1e-6
_RHO_HI = 10.0
_RHO_TOL = 1e-10


class ElicitationError(ValueError):
    """Ill-posed indifference question (equal informativeness, bad cost)."""


class CalibrationError(ValueError):
    """The risk-aversion equation has no root in the search bracket."""


def total_cost(intervention_cost: float, complication_cost: float) -> float:
    """Realized euro cost of a path: intervention plus complication costs."""
    if intervention_cost < 0 or complication_cost < 0:
        raise ValueError("costs must be nonnegative")
    return intervention_cost + complication_cost


def value(cost: float, info: float, comfort: int,
          lambdas: Mapping[int, float] = DEFAULT_LAMBDAS) -> float:
    """Weighted-additive value of an outcome at a given comfort level."""
    if cost <= -1.0:
        raise ValueError("cost must exceed -1 for the log-cost transform")
    return lambdas[comfort] * info - math.log10(cost + 1.0)


def elicit_lambda_pair(info_a: float, cost_a: float, info_b: float,
                       cost_b: float | None, indifference_cost: float) -> float:
    """Solve the indifference identity for the comfort weight.

    Option A keeps its stated cost; the interview shifted option B's cost to
    ``indifference_cost`` until the respondent was indifferent.  ``cost_b``
    (when known) only bounds the admissible answer.
    """
    if info_a == info_b:
        raise ElicitationError("options are equally informative; weight is undefined")
    if indifference_cost < 0:
        raise ElicitationError("indifference cost must be nonnegative")
    if cost_b is not None and indifference_cost >= cost_b:
        raise ElicitationError(
            f"indifference cost {indifference_cost} must fall below the stated cost {cost_b}")
    return math.log10((cost_a + 1.0) / (indifference_cost + 1.0)) / (info_a - info_b)


def robustify_lambda(estimates: Sequence[float]) -> float:
    """Median of the pairwise estimates (midpoint of the central two when even)."""
    if not estimates:
        raise ElicitationError("no pairwise estimates to robustify")
    return float(median(estimates))


def check_lambda_monotonicity(lambdas: Mapping[int, float]) -> bool:
    """Warn (not fail) when comfort weights do not increase with comfort."""
    ordered = [lambdas[k] for k in sorted(lambdas)]
    ok = all(a <= b for a, b in zip(ordered, ordered[1:]))
    if not ok:
        warnings.warn(
            f"comfort weights are not monotone: {dict(sorted(lambdas.items()))}",
            stacklevel=2,
        )
    return ok


@dataclass(frozen=True)
class PreferenceParams:
    """Calibrated preference model: comfort weights plus CARA utility constants."""

    lambdas: dict[int, float]
    a: float
    b: float
    rho: float
    best_anchor: tuple[float, float] = DEFAULT_BEST_ANCHOR
    worst_anchor: tuple[float, float] = DEFAULT_WORST_ANCHOR
    pe_point: tuple[float, float] = DEFAULT_PE_POINT
    pe_value: float = DEFAULT_PE_VALUE
    risk_neutral: bool = False

    def with_rho(self, rho: float) -> "PreferenceParams":
        """Risk-attitude override that keeps the calibrated scaling constants."""
        return replace(self, rho=rho)

    def utility(self, cost: float, info: float, comfort: int) -> float:
        v = value(cost, info, comfort, self.lambdas)
        if self.risk_neutral:
            return self.a + self.b * v
        return self.a - self.b * math.exp(-self.rho * v)

    def to_dict(self) -> dict:
        return {
            "lambdas": {str(k): v for k, v in self.lambdas.items()},
            "a": self.a, "b": self.b, "rho": self.rho,
            "bestAnchor": list(self.best_anchor),
            "worstAnchor": list(self.worst_anchor),
            "pePoint": list(self.pe_point),
            "peValue": self.pe_value,
        }


def _pe_mismatch(rho: float, v_worst: float, v_best: float, v_pe: float, pe_value: float) -> float:
    aw = math.exp(-rho * v_worst)
    ab = math.exp(-rho * v_best)
    ap = math.exp(-rho * v_pe)
    return (aw - ap) / (aw - ab) - pe_value


def calibrate_utility(best_anchor: tuple[float, float] = DEFAULT_BEST_ANCHOR,
                      worst_anchor: tuple[float, float] = DEFAULT_WORST_ANCHOR,
                      pe_point: tuple[float, float] = DEFAULT_PE_POINT,
                      pe_value: float = DEFAULT_PE_VALUE,
                      lambdas: Mapping[int, float] = DEFAULT_LAMBDAS,
                      comfort: int = CALIBRATION_COMFORT) -> tuple[float, float, float]:
    """Solve u(worst)=0, u(best)=1, u(pe)=pe_value for (a, b, rho).

    a and b are eliminated analytically; the remaining one-dimensional
    equation in rho is solved by bisection on [1e-6, 10].  A probability
    equivalent at (or below) the linear-interpolation point has no strictly
    risk-averse solution: exactly linear is flagged as risk neutrality,
    below-linear raises CalibrationError.
    """
    if not 0.0 < pe_value < 1.0:
        raise CalibrationError(f"PE value must lie in (0,1), got {pe_value}")
    v_best = value(best_anchor[0], best_anchor[1], comfort, lambdas)
    v_worst = value(worst_anchor[0], worst_anchor[1], comfort, lambdas)
    v_pe = value(pe_point[0], pe_point[1], comfort, lambdas)
    if not v_worst < v_pe < v_best:
        raise CalibrationError(
            f"anchors must order worst < pe < best in value terms "
            f"(got {v_worst:.4f}, {v_pe:.4f}, {v_best:.4f})")

    linear = (v_pe - v_worst) / (v_best - v_worst)
    lo, hi = _RHO_LO, _RHO_HI
    f_lo = _pe_mismatch(lo, v_worst, v_best, v_pe, pe_value)
    f_hi = _pe_mismatch(hi, v_worst, v_best, v_pe, pe_value)
    if f_lo >= 0.0:
        if pe_value >= linear - 1e-12:
            # The answer already sits on the straight line: rho -> 0 limit.
            warnings.warn(
                f"PE value {pe_value} matches the risk-neutral point {linear:.6f}; "
                "returning the linear-utility limit (rho = 0)",
                stacklevel=2,
            )
            b = 1.0 / (v_best - v_worst)
            return -v_worst * b, b, 0.0
        raise CalibrationError(
            f"PE value {pe_value} lies below the risk-neutral point {linear:.4f}; "
            "no rho > 0 solves the system (risk-seeking answers are out of range)")
    if f_hi <= 0.0:
        raise CalibrationError(
            f"no rho in [{_RHO_LO}, {_RHO_HI}] reproduces the PE answer "
            f"(mismatch at bracket ends: {f_lo:.3e}, {f_hi:.3e})")
    while hi - lo > _RHO_TOL:
        mid = 0.5 * (lo + hi)
        if _pe_mismatch(mid, v_worst, v_best, v_pe, pe_value) < 0.0:
            lo = mid
        else:
            hi = mid
    rho = 0.5 * (lo + hi)
    b = 1.0 / (math.exp(-rho * v_worst) - math.exp(-rho * v_best))
    a = b * math.exp(-rho * v_worst)
    return a, b, rho


def utility(cost: float, info: float, comfort: int, params: PreferenceParams) -> float:
    """CARA utility of one outcome under calibrated parameters."""
    return params.utility(cost, info, comfort)


def default_params(lambdas: Mapping[int, float] | None = None,
                   best_anchor: tuple[float, float] = DEFAULT_BEST_ANCHOR,
                   worst_anchor: tuple[float, float] = DEFAULT_WORST_ANCHOR,
                   pe_point: tuple[float, float] = DEFAULT_PE_POINT,
                   pe_value: float = DEFAULT_PE_VALUE) -> PreferenceParams:
    """Calibrated parameters with the published comfort weights and anchors."""
    lam = dict(DEFAULT_LAMBDAS if lambdas is None else lambdas)
    check_lambda_monotonicity(lam)
    a, b, rho = calibrate_utility(best_anchor, worst_anchor, pe_point, pe_value, lam)
    return PreferenceParams(lam, a, b, rho, best_anchor, worst_anchor, pe_point, pe_value,
                            risk_neutral=(rho == 0.0))


# ---------------------------------------------------------------------------
# Elicitation sessions and transcripts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairOption:
    """One side of an indifference question; cost may be unknown (synthetic probe)."""

    id: str
    info: float
    cost: float | None


@dataclass(frozen=True)
class PairAnswer:
    """An answered pairwise question at one comfort level.

    ``applies_to`` names the option whose cost the interview moved to the
    indifference point; it defaults to the non-preferred option.
    """

    comfort: int
    option_a: PairOption
    option_b: PairOption
    preferred: str
    indifference_cost: float
    applies_to: str | None = None

    def shifted_option(self) -> str:
        if self.applies_to is not None:
            return self.applies_to
        if self.option_a.cost is None:
            return self.option_a.id
        if self.option_b.cost is None:
            return self.option_b.id
        return self.option_b.id if self.preferred == self.option_a.id else self.option_a.id

    def lambda_estimate(self) -> float:
        shifted = self.shifted_option()
        if shifted == self.option_b.id:
            kept, moved = self.option_a, self.option_b
        else:
            kept, moved = self.option_b, self.option_a
        if kept.cost is None:
            raise ElicitationError(f"option {kept.id} needs a stated cost")
        return elicit_lambda_pair(kept.info, kept.cost, moved.info, moved.cost,
                                  self.indifference_cost)


@dataclass
class ElicitationSession:
    """Accumulates pairwise answers for one comfort level and robustifies them."""

    comfort: int
    items: list[PairAnswer] = field(default_factory=list)

    def add(self, answer: PairAnswer) -> float:
        if answer.comfort != self.comfort:
            raise ElicitationError(
                f"answer for comfort {answer.comfort} in a comfort-{self.comfort} session")
        est = answer.lambda_estimate()
        if est <= 0:
            raise ElicitationError(f"pair yields non-positive weight {est:.4f}")
        self.items.append(answer)
        return est

    @property
    def estimates(self) -> list[float]:
        return [ans.lambda_estimate() for ans in self.items]

    def result(self) -> float:
        return robustify_lambda(self.estimates)


def _answer_from_record(rec: dict) -> PairAnswer:
    def opt(raw: dict) -> PairOption:
        cost = raw.get("cost")
        return PairOption(str(raw["id"]), float(raw["info"]),
                          None if cost is None else float(cost))

    return PairAnswer(
        comfort=int(rec["comfort"]),
        option_a=opt(rec["optionA"]),
        option_b=opt(rec["optionB"]),
        preferred=str(rec["preferred"]),
        indifference_cost=float(rec["indifferenceCost"]),
        applies_to=rec.get("appliesTo"),
    )


def replay_transcript(source: str | Path | dict, lambda4: float = 7.0,
                      ) -> tuple[dict[int, float], PreferenceParams | None, dict[int, list[float]]]:
    """Reproduce comfort weights (and utility constants) from a saved interview.

    The transcript is a JSON document with ``answers`` (ordered pairwise
    records) and an optional ``pe`` record; see the bundled
    ``appendix_b_transcript.json`` for the layout.  Returns the per-level
    weights, calibrated parameters (None without a PE answer) and the raw
    per-level estimate lists.
    """
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    sessions: dict[int, ElicitationSession] = {}
    for rec in doc.get("answers", []):
        ans = _answer_from_record(rec)
        sessions.setdefault(ans.comfort, ElicitationSession(ans.comfort)).add(ans)

    lambdas: dict[int, float] = {}
    estimates: dict[int, list[float]] = {}
    for level, session in sorted(sessions.items()):
        lambdas[level] = session.result()
        estimates[level] = session.estimates
    # The no-intervention level has no pair to compare; fill to keep monotone.
    lambdas.setdefault(4, lambda4)
    check_lambda_monotonicity(lambdas)

    params = None
    pe = doc.get("pe")
    if pe is not None:
        best = tuple(pe.get("bestAnchor", DEFAULT_BEST_ANCHOR))
        worst = tuple(pe.get("worstAnchor", DEFAULT_WORST_ANCHOR))
        point = tuple(pe.get("point", DEFAULT_PE_POINT))
        pe_value = float(pe["value"])
        a, b, rho = calibrate_utility(best, worst, point, pe_value, lambdas)
        params = PreferenceParams(dict(lambdas), a, b, rho, best, worst, point, pe_value,
                                  risk_neutral=(rho == 0.0))
    return lambdas, params, estimates


__all__ = [
    "DEFAULT_LAMBDAS", "DEFAULT_BEST_ANCHOR", "DEFAULT_WORST_ANCHOR",
    "DEFAULT_PE_POINT", "DEFAULT_PE_VALUE", "CALIBRATION_COMFORT",
    "ElicitationError", "CalibrationError",
    "total_cost", "value", "elicit_lambda_pair", "robustify_lambda",
    "check_lambda_monotonicity", "PreferenceParams", "calibrate_utility",
    "utility", "default_params",
    "PairOption", "PairAnswer", "ElicitationSession", "replay_transcript",
]
