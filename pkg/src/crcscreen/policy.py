"""Strategy enumeration, expected-utility evaluation and recommendation.

A strategy pairs a screening choice with a rule mapping each reachable
screening result to a colonoscopy decision.  Evaluation rolls the finite
outcome tree exactly: CRC state, screening result, screening complication,
colonoscopy decision, its result and its complication.  The information
attribute entering the utility at a leaf is the value-node entry for the
leaf's branch, i.e. the expected normalized information conditional on the
screening result and the colonoscopy decision (the belief over CRC and the
colonoscopy report is still open when the value node reads its parents).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .infovalue import (
    expected_v_info_given_result,
    reachable_results,
    result_probability,
)
from .preferences import PreferenceParams
from .screening import (
    NO_RESULT,
    NO_SCREENING,
    PRED_FALSE,
    PRED_TRUE,
    InterventionCatalog,
    InterventionSpec,
    combined_comfort,
)


@dataclass(frozen=True)
class Strategy:
    """A screening choice plus a result-conditional colonoscopy rule."""

    screening: str
    col_rule: tuple[tuple[str, bool], ...]

    @classmethod
    def make(cls, screening: str, rule: dict[str, bool]) -> "Strategy":
        return cls(screening, tuple(sorted(rule.items())))

    @property
    def rule(self) -> dict[str, bool]:
        return dict(self.col_rule)

    def colonoscopy_after(self, result: str) -> bool:
        return self.rule[result]

    def label(self) -> str:
        rule = self.rule
        if self.screening == NO_SCREENING:
            return f"{NO_SCREENING}+colonoscopy" if rule[NO_RESULT] else NO_SCREENING
        pos, neg = rule[PRED_TRUE], rule[PRED_FALSE]
        suffix = {
            (True, False): "col-if-positive",
            (False, False): "never-col",
            (True, True): "always-col",
            (False, True): "col-if-negative",
        }[(pos, neg)]
        return f"{self.screening}+{suffix}"

    def to_dict(self) -> dict:
        return {"screening": self.screening, "colRule": self.rule}


def col_if_positive(screening: str) -> Strategy:
    """The standard protocol: colonoscopy exactly after a positive result."""
    if screening == NO_SCREENING:
        return Strategy.make(screening, {NO_RESULT: False})
    return Strategy.make(screening, {PRED_TRUE: True, PRED_FALSE: False})


@dataclass(frozen=True)
class StrategyEvaluation:
    strategy: Strategy
    expected_utility: float
    branch_eus: dict[str, tuple[float, float]]  # r_s -> (EU with col, EU without)
    expected_cost: float
    expected_info: float

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.to_dict(),
            "label": self.strategy.label(),
            "expectedUtility": self.expected_utility,
            "expectedCost": self.expected_cost,
            "expectedInfo": self.expected_info,
            "branchEUs": {
                r: {"col": with_col, "noCol": without}
                for r, (with_col, without) in self.branch_eus.items()
            },
        }


def enumerate_strategies(catalog: InterventionCatalog) -> list[Strategy]:
    """No-screening with/without colonoscopy, plus each test with all four rules."""
    out = [
        Strategy.make(NO_SCREENING, {NO_RESULT: False}),
        Strategy.make(NO_SCREENING, {NO_RESULT: True}),
    ]
    for spec in catalog.tests:
        for pos in (True, False):
            for neg in (True, False):
                out.append(Strategy.make(spec.id, {PRED_TRUE: pos, PRED_FALSE: neg}))
    return out


def _complication_outcomes(spec: InterventionSpec | None) -> list[tuple[float, float]]:
    if spec is None:
        return [(1.0, 0.0)]
    return [(c.probability, c.cost) for c in spec.complications if c.probability > 0.0]


def _branch_eu(p_crc: float, screen: InterventionSpec | None, r_s: str, col: bool,
               catalog: InterventionCatalog, params: PreferenceParams,
               expected_complication_cost: bool) -> tuple[float, float, float]:
    """(EU, expected cost, info) of one (screening result, colonoscopy) branch."""
    info = expected_v_info_given_result(p_crc, screen, r_s, col)
    comfort = combined_comfort(screen, col)
    base = (screen.unit_cost if screen is not None and screen.is_test else 0.0)
    col_spec = catalog.colonoscopy
    if col:
        base += col_spec.unit_cost

    screen_comps = _complication_outcomes(screen if screen is not None and screen.is_test else None)
    col_comps = _complication_outcomes(col_spec if col else None)
    if expected_complication_cost:
        mean_extra = (sum(p * c for p, c in screen_comps)
                      + sum(p * c for p, c in col_comps))
        screen_comps, col_comps = [(1.0, mean_extra)], [(1.0, 0.0)]

    eu = 0.0
    cost = 0.0
    for p_sc, c_sc in screen_comps:
        for p_cc, c_cc in col_comps:
            leaf_cost = base + c_sc + c_cc
            eu += p_sc * p_cc * params.utility(leaf_cost, info, comfort)
            cost += p_sc * p_cc * leaf_cost
    return eu, cost, info


def evaluate_strategy(p_crc: float, strategy: Strategy, catalog: InterventionCatalog,
                      params: PreferenceParams, *,
                      expected_complication_cost: bool = False) -> StrategyEvaluation:
    """Exact expected utility of a strategy for a patient with CRC probability p."""
    if not 0.0 < p_crc < 1.0:
        raise ValueError(f"p(CRC) must lie strictly inside (0,1), got {p_crc}")
    screen = catalog[strategy.screening]
    results = reachable_results(screen)
    rule = strategy.rule
    if set(rule) != set(results):
        raise ValueError(
            f"colonoscopy rule covers {sorted(rule)} but reachable results are {sorted(results)}")

    branch_eus: dict[str, tuple[float, float]] = {}
    eu = 0.0
    cost = 0.0
    info = 0.0
    for r_s in results:
        if screen.is_test:
            p_rs = result_probability(p_crc, screen.sensitivity, screen.specificity, r_s)
        else:
            p_rs = 1.0
        eu_col, cost_col, info_col = _branch_eu(
            p_crc, screen, r_s, True, catalog, params, expected_complication_cost)
        eu_nocol, cost_nocol, info_nocol = _branch_eu(
            p_crc, screen, r_s, False, catalog, params, expected_complication_cost)
        branch_eus[r_s] = (eu_col, eu_nocol)
        if rule[r_s]:
            eu += p_rs * eu_col
            cost += p_rs * cost_col
            info += p_rs * info_col
        else:
            eu += p_rs * eu_nocol
            cost += p_rs * cost_nocol
            info += p_rs * info_nocol
    return StrategyEvaluation(strategy, eu, branch_eus, cost, info)


def recommend(p_crc: float, catalog: InterventionCatalog, params: PreferenceParams,
              top_k: int | None = None, *,
              expected_complication_cost: bool = False) -> list[StrategyEvaluation]:
    """All strategies ranked by EU (ties: lower expected cost, then id order)."""
    evals = [
        evaluate_strategy(p_crc, s, catalog, params,
                          expected_complication_cost=expected_complication_cost)
        for s in enumerate_strategies(catalog)
    ]
    evals.sort(key=lambda e: (-e.expected_utility, e.expected_cost,
                              e.strategy.screening, e.strategy.col_rule))
    return evals if top_k is None else evals[:top_k]


def utility_array(cost: np.ndarray, info: float, comfort: int,
                  params: PreferenceParams) -> np.ndarray:
    """Vectorized CARA utility over an array of realized costs."""
    v = params.lambdas[comfort] * info - np.log10(cost + 1.0)
    if params.risk_neutral:
        return params.a + params.b * v
    return params.a - params.b * np.exp(-params.rho * v)


def monte_carlo_eu(p_crc: float, strategy: Strategy, catalog: InterventionCatalog,
                   params: PreferenceParams, samples: int, seed: int,
                   chunk: int = 2_000_000) -> tuple[float, float]:
    """Stochastic oracle for evaluate_strategy: (EU estimate, standard error).

    Samples the same outcome tree the exact evaluation enumerates; kept
    independent of the branch-summation path.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    screen = catalog[strategy.screening]
    col_spec = catalog.colonoscopy
    rule = strategy.rule
    branch_info = {r_s: expected_v_info_given_result(p_crc, screen, r_s, rule[r_s])
                   for r_s in reachable_results(screen)}
    totals = 0.0
    sq_totals = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        crc = rng.random(n) < p_crc
        if screen.is_test:
            pos_prob = np.where(crc, screen.sensitivity, 1.0 - screen.specificity)
            positive = rng.random(n) < pos_prob
            r_s_idx = np.where(positive, 0, 1)  # 0: PredTrue, 1: PredFalse
            results = (PRED_TRUE, PRED_FALSE)
        else:
            r_s_idx = np.zeros(n, dtype=int)
            results = (NO_RESULT,)
        u = np.zeros(n)
        for i, r_s in enumerate(results):
            mask = r_s_idx == i
            count = int(mask.sum())
            if not count:
                continue
            col = rule[r_s]
            comfort = combined_comfort(screen if screen.is_test else None, col)
            base = (screen.unit_cost if screen.is_test else 0.0) \
                + (col_spec.unit_cost if col else 0.0)
            cost = np.full(count, base)
            if screen.is_test:
                cost += _sample_complication_costs(rng, screen, count)
            if col:
                cost += _sample_complication_costs(rng, col_spec, count)
            u[mask] = utility_array(cost, branch_info[r_s], comfort, params)
        totals += float(u.sum())
        sq_totals += float((u ** 2).sum())
        done += n
    mean = totals / samples
    var = max(sq_totals / samples - mean ** 2, 0.0)
    return mean, float(np.sqrt(var / samples))


def _sample_complication_costs(rng: np.random.Generator, spec: InterventionSpec,
                               n: int) -> np.ndarray:
    probs = np.array([c.probability for c in spec.complications])
    costs = np.array([c.cost for c in spec.complications])
    idx = rng.choice(len(probs), size=n, p=probs / probs.sum())
    return costs[idx]


@dataclass(frozen=True)
class DominanceFinding:
    kind: str        # "dominated" or "tie"
    intervention: str
    by: str
    witness: dict[str, str] = field(default_factory=dict, hash=False, compare=False)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "intervention": self.intervention,
                "by": self.by, "witness": self.witness}


_CRITERIA = (
    ("cost", lambda s: -s.unit_cost),          # lower cost is better
    ("sensitivity", lambda s: s.sensitivity),
    ("specificity", lambda s: s.specificity),
    ("comfort", lambda s: s.comfort),
)


def dominance_filter(catalog: InterventionCatalog,
                     p_grid: list[float] | None = None) -> list[DominanceFinding]:
    """Pairwise dominance on (cost, sensitivity, specificity, comfort).

    B dominates A when it is no worse everywhere and strictly better
    somewhere; identical specs are reported as ties.  Applies to tests and
    colonoscopy (no-screening has no accuracy to compare).  ``p_grid`` is
    accepted for witness enrichment only: when both accuracies weakly
    dominate, the information curve dominates at every prior as well.
    """
    specs = [s for s in catalog.specs.values() if s.id != NO_SCREENING]
    findings: list[DominanceFinding] = []
    for a in specs:
        for b in specs:
            if a.id >= b.id:
                continue
            _compare_pair(a, b, findings)
    return findings


def _compare_pair(a: InterventionSpec, b: InterventionSpec,
                  findings: list[DominanceFinding]) -> None:
    def relation(x: InterventionSpec, y: InterventionSpec):
        at_least, strict, witness = True, False, {}
        for name, key in _CRITERIA:
            kx, ky = key(x), key(y)
            if kx > ky:
                strict = True
                witness[name] = "strictly better"
            elif kx == ky:
                witness[name] = "equal"
            else:
                at_least = False
                break
        return at_least, strict, witness

    b_over_a, strict_ba, wit_ba = relation(b, a)
    a_over_b, strict_ab, wit_ab = relation(a, b)
    if b_over_a and strict_ba:
        findings.append(DominanceFinding("dominated", a.id, b.id, wit_ba))
    elif a_over_b and strict_ab:
        findings.append(DominanceFinding("dominated", b.id, a.id, wit_ab))
    elif b_over_a and a_over_b:
        findings.append(DominanceFinding("tie", a.id, b.id,
                                         {name: "equal" for name, _ in _CRITERIA}))


__all__ = [
    "Strategy", "StrategyEvaluation", "DominanceFinding",
    "col_if_positive", "enumerate_strategies", "evaluate_strategy",
    "recommend", "monte_carlo_eu", "dominance_filter",
]
