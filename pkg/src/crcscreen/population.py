"""Population-scale strategy design: allocation, simulation and sweeps.

The allocator processes members in descending best-strategy EU and hands
each their highest-EU strategy among interventions that still have
capacity; colonoscopies triggered by a positive screening are never
capped.  The Monte Carlo simulator replays an allocation on the population
and reports confusion matrices, derived metrics and realized costs.

Randomness uses counter-based Philox streams keyed by (seed, run), with
member i always occupying slot i of each draw, so results are bit-stable
no matter how runs are spread over threads.
"""

from __future__ import annotations

import csv
import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bn import DiscreteNetwork, PatientEvidence, posterior_crc
from .policy import Strategy, recommend
from .preferences import PreferenceParams, calibrate_utility
from .screening import (
    COLONOSCOPY,
    NO_RESULT,
    NO_SCREENING,
    PRED_FALSE,
    PRED_TRUE,
    InterventionCatalog,
    InterventionSpec,
)

TRUE_CRC_COLUMN = "true_crc"


class PopulationError(ValueError):
    """Malformed population file or member data."""


@dataclass(frozen=True)
class PopulationMember:
    id: int
    evidence: dict[str, str]
    true_crc: bool | None
    p_crc: float


class Population:
    """Columnar store of members: state indices per variable plus cached posteriors."""

    def __init__(self, net: DiscreteNetwork, columns: dict[str, np.ndarray],
                 true_crc: np.ndarray | None, missing: dict[str, np.ndarray] | None = None):
        self.net = net
        self.columns = columns
        self.true_crc = true_crc
        self.missing = missing or {}
        sizes = {arr.shape[0] for arr in columns.values()}
        if len(sizes) != 1:
            raise PopulationError("ragged population columns")
        self.size = sizes.pop()
        self.p_crc: np.ndarray | None = None

    def __len__(self) -> int:
        return self.size

    def evidence_for(self, i: int) -> dict[str, str]:
        out = {}
        for name, idx in self.columns.items():
            mask = self.missing.get(name)
            if mask is not None and mask[i]:
                continue
            out[name] = self.net[name].states[int(idx[i])]
        return out

    def member(self, i: int) -> PopulationMember:
        if self.p_crc is None:
            self.compute_posteriors()
        crc = None if self.true_crc is None else bool(self.true_crc[i])
        return PopulationMember(i, self.evidence_for(i), crc, float(self.p_crc[i]))

    def compute_posteriors(self) -> np.ndarray:
        """Cache p(CRC | member evidence) for every member.

        When every parent of the (childless) target is observed the posterior
        is a straight CPT lookup; otherwise exact inference runs per distinct
        evidence signature.  Both paths agree (see tests).
        """
        if self.p_crc is not None:
            return self.p_crc
        net = self.net
        target = net.target
        parents = net.parents(target)
        fully_observed = (
            not net.children(target)
            and all(p in self.columns for p in parents)
            and all(not self.missing.get(p, np.zeros(1, bool)).any() for p in parents)
        )
        if fully_observed:
            arr = net.cpt(target).as_array(net)   # axes: parents..., target
            idx = tuple(self.columns[p] for p in parents) + (0,)
            self.p_crc = arr[idx].astype(float)
            return self.p_crc
        cache: dict[tuple, float] = {}
        out = np.empty(self.size)
        for i in range(self.size):
            ev = self.evidence_for(i)
            key = tuple(sorted(ev.items()))
            if key not in cache:
                cache[key] = posterior_crc(net, PatientEvidence(ev))
            out[i] = cache[key]
        self.p_crc = out
        return out

    def to_csv(self, path: str | Path) -> None:
        names = list(self.columns)
        header = names + ([TRUE_CRC_COLUMN] if self.true_crc is not None else [])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(self.size):
                row = []
                for name in names:
                    mask = self.missing.get(name)
                    if mask is not None and mask[i]:
                        row.append("")
                    else:
                        row.append(self.net[name].states[int(self.columns[name][i])])
                if self.true_crc is not None:
                    row.append("true" if self.true_crc[i] else "false")
                writer.writerow(row)


def generate_population(net: DiscreteNetwork, size: int, seed: int) -> Population:
    """Forward-sample full joint assignments (target state becomes true_crc)."""
    if size < 1:
        raise PopulationError(f"population size must be >= 1, got {size}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    order = _topological_order(net)
    samples: dict[str, np.ndarray] = {}
    for name in order:
        cpt = net.cpt(name)
        arr = net._factors[name]
        n_states = len(net[name].states)
        flat = arr.reshape(-1, n_states)
        cum = np.cumsum(flat, axis=1)
        if cpt.parents:
            combo = np.zeros(size, dtype=np.int64)
            for p in cpt.parents:
                combo = combo * len(net[p].states) + samples[p]
        else:
            combo = np.zeros(size, dtype=np.int64)
        u = rng.random(size)
        samples[name] = (u[:, None] > cum[combo]).sum(axis=1).astype(np.int64)

    target = net.target
    true_crc = samples.pop(target) == 0  # first target state is the positive one
    columns = {name: samples[name] for name in net.names if name != target}
    return Population(net, columns, true_crc)


def _topological_order(net: DiscreteNetwork) -> list[str]:
    indeg = {n: len(net.parents(n)) for n in net.names}
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for ch in sorted(net.children(node)):
            indeg[ch] -= 1
            if indeg[ch] == 0:
                ready.append(ch)
        ready.sort()
    return order


def load_population(path: str | Path, net: DiscreteNetwork) -> Population:
    """Read a population CSV (header = variable names, optional true_crc)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PopulationError(f"{path}: empty population file") from None
        rows = list(reader)
    if not rows:
        raise PopulationError(f"{path}: no members")
    names = [h for h in header if h != TRUE_CRC_COLUMN]
    for name in names:
        if name not in net:
            raise PopulationError(f"{path}: unknown variable column {name!r}")
    crc_col = header.index(TRUE_CRC_COLUMN) if TRUE_CRC_COLUMN in header else None
    col_idx = {name: header.index(name) for name in names}
    n = len(rows)
    columns = {name: np.zeros(n, dtype=np.int64) for name in names}
    missing = {name: np.zeros(n, dtype=bool) for name in names}
    true_crc = np.zeros(n, dtype=bool) if crc_col is not None else None
    for i, row in enumerate(rows):
        for name in names:
            cell = row[col_idx[name]].strip()
            if cell == "":
                missing[name][i] = True
            else:
                columns[name][i] = net[name].state_index(cell)
        if crc_col is not None:
            true_crc[i] = row[crc_col].strip().lower() in ("true", "1", "yes", "present")
    missing = {k: v for k, v in missing.items() if v.any()}
    return Population(net, columns, true_crc, missing)


# ---------------------------------------------------------------------------
# Allocation
# ---------------------------------------------------------------------------

#: Per-intervention caps; absent id means unlimited. Colonoscopy counts only
#: direct colonoscopies; follow-ups after a positive screening are never capped.
OperationalLimits = dict[str, int]

TABLE9_LIMITS: OperationalLimits = {
    COLONOSCOPY: 3000, "gFOBT": 30000, "FIT": 42000, "BloodBased": 7000,
    "sDNA": 6000, "CTC": 2000, "CC": 2000,
}


def _capacity_id(strategy: Strategy) -> str | None:
    """Which capacity pool a strategy consumes (None: nothing limited)."""
    if strategy.screening == NO_SCREENING:
        return COLONOSCOPY if strategy.rule[NO_RESULT] else None
    return strategy.screening


@dataclass
class AllocationResult:
    assignment: dict[int, Strategy]
    counts: dict[str, int]
    exhausted: set[str]
    eus: dict[int, float] = field(default_factory=dict)

    def count_table(self, catalog: InterventionCatalog) -> dict[str, int]:
        """Members per screening choice (NoScreening bucket includes direct colonoscopy)."""
        table = {NO_SCREENING: 0, COLONOSCOPY: 0}
        for spec_id in catalog.specs:
            table.setdefault(spec_id, 0)
        for strat in self.assignment.values():
            cap = _capacity_id(strat)
            if cap is None:
                table[NO_SCREENING] += 1
            else:
                table[cap] += 1
        return table


def _ranked_strategies_by_p(ps: np.ndarray, catalog: InterventionCatalog,
                            params: PreferenceParams) -> dict[float, list[tuple[Strategy, float]]]:
    tables = {}
    for p in np.unique(ps):
        ranked = recommend(float(p), catalog, params)
        tables[float(p)] = [(e.strategy, e.expected_utility) for e in ranked]
    return tables


def allocate(population: Population, catalog: InterventionCatalog,
             params: PreferenceParams, limits: OperationalLimits | None = None,
             mode: str = "static") -> AllocationResult:
    """EU-ordered greedy assignment under per-intervention capacity limits.

    ``static`` (default) orders members once by their unconstrained best EU
    and substitutes methods as pools exhaust; ``dynamic`` re-ranks members
    by their best still-available EU after every exhaustion.
    """
    if mode not in ("static", "dynamic"):
        raise ValueError(f"unknown allocation mode {mode!r}")
    limits = dict(limits or {})
    ps = population.compute_posteriors()
    tables = _ranked_strategies_by_p(ps, catalog, params)

    counts: dict[str, int] = {}
    exhausted: set[str] = set()
    assignment: dict[int, Strategy] = {}
    eus: dict[int, float] = {}

    def available(strategy: Strategy) -> bool:
        cap = _capacity_id(strategy)
        if cap is None:
            return True
        limit = limits.get(cap)
        return limit is None or counts.get(cap, 0) < limit

    def best_available(p: float) -> tuple[Strategy, float]:
        for strategy, eu in tables[p]:
            if available(strategy):
                return strategy, eu
        raise AssertionError("no available strategy (NoScreening is never capped)")

    def commit(member: int, strategy: Strategy, eu: float) -> None:
        assignment[member] = strategy
        eus[member] = eu
        cap = _capacity_id(strategy)
        if cap is not None:
            counts[cap] = counts.get(cap, 0) + 1
            limit = limits.get(cap)
            if limit is not None and counts[cap] >= limit:
                exhausted.add(cap)

    best_eu = np.array([tables[float(p)][0][1] for p in ps])
    if mode == "static":
        order = np.lexsort((np.arange(len(ps)), -best_eu))
        for member in order:
            strategy, eu = best_available(float(ps[member]))
            commit(int(member), strategy, eu)
    else:
        heap = [(-best_eu[i], i) for i in range(len(ps))]
        heapq.heapify(heap)
        while heap:
            neg_eu, member = heapq.heappop(heap)
            strategy, eu = best_available(float(ps[member]))
            if -neg_eu - eu > 1e-12:   # stale entry: capacity vanished since push
                heapq.heappush(heap, (-eu, member))
                continue
            commit(member, strategy, eu)
    for cap, limit in limits.items():
        if limit is not None and counts.get(cap, 0) > limit:
            raise AssertionError(f"capacity {cap} exceeded")
    return AllocationResult(assignment, counts, exhausted, eus)


def national_baseline(population: Population, age_band: list[str], test_id: str,
                      age_variable: str = "age") -> AllocationResult:
    """Age-based policy: in-band members get (test, colonoscopy-if-positive)."""
    if age_variable not in population.columns:
        raise PopulationError(f"population lacks the {age_variable!r} variable")
    states = population.net[age_variable].states
    band_idx = {states.index(b) for b in age_band if b in states}
    unknown = [b for b in age_band if b not in states]
    if unknown:
        raise PopulationError(f"age band states not in model: {unknown}")
    test = Strategy.make(test_id, {PRED_TRUE: True, PRED_FALSE: False})
    none = Strategy.make(NO_SCREENING, {NO_RESULT: False})
    ages = population.columns[age_variable]
    in_band = np.isin(ages, list(band_idx)) if band_idx else np.zeros(len(ages), bool)
    missing = population.missing.get(age_variable)
    if missing is not None:
        in_band &= ~missing
    assignment = {i: (test if in_band[i] else none) for i in range(len(population))}
    counts = {test_id: int(in_band.sum())} if in_band.any() else {}
    return AllocationResult(assignment, counts, set())


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimulationReport:
    confusion_mean: dict[str, float]   # TN, FP, FN, TP
    confusion_std: dict[str, float]
    sensitivity: float
    precision: float
    f1: float
    cost_per_patient: float
    runs: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "confusionMean": self.confusion_mean,
            "confusionStd": self.confusion_std,
            "sensitivity": self.sensitivity,
            "precision": self.precision,
            "f1": self.f1,
            "costPerPatient": self.cost_per_patient,
            "runs": self.runs,
            "seed": self.seed,
        }


@dataclass
class _StrategyArrays:
    screened: np.ndarray
    sens: np.ndarray
    spec: np.ndarray
    test_cost: np.ndarray
    col_if_pos: np.ndarray
    col_if_neg: np.ndarray
    col_direct: np.ndarray
    test_code: np.ndarray          # index into test_specs, -1 where unscreened
    test_specs: list[InterventionSpec]


def _strategy_arrays(population: Population, allocation: AllocationResult,
                     catalog: InterventionCatalog) -> _StrategyArrays:
    n = len(population)
    screened = np.zeros(n, bool)
    sens = np.zeros(n)
    spec = np.zeros(n)
    test_cost = np.zeros(n)
    col_if_pos = np.zeros(n, bool)
    col_if_neg = np.zeros(n, bool)
    col_direct = np.zeros(n, bool)
    test_code = np.full(n, -1, dtype=np.int64)
    test_specs: list[InterventionSpec] = []
    spec_index: dict[str, int] = {}
    for i in range(n):
        strat = allocation.assignment[i]
        rule = strat.rule
        if strat.screening == NO_SCREENING:
            col_direct[i] = rule[NO_RESULT]
            continue
        s = catalog[strat.screening]
        screened[i] = True
        sens[i] = s.sensitivity
        spec[i] = s.specificity
        test_cost[i] = s.unit_cost
        col_if_pos[i] = rule[PRED_TRUE]
        col_if_neg[i] = rule[PRED_FALSE]
        if s.id not in spec_index:
            spec_index[s.id] = len(test_specs)
            test_specs.append(s)
        test_code[i] = spec_index[s.id]
    return _StrategyArrays(screened, sens, spec, test_cost, col_if_pos,
                           col_if_neg, col_direct, test_code, test_specs)


def _complication_cost_draw(rng: np.random.Generator, spec: InterventionSpec,
                            n: int) -> np.ndarray:
    probs = np.array([c.probability for c in spec.complications])
    costs = np.array([c.cost for c in spec.complications])
    if n == 0 or (len(costs) == 1 and costs[0] == 0.0):
        return np.zeros(n)
    idx = rng.choice(len(probs), size=n, p=probs / probs.sum())
    return costs[idx]


def _run_once(run: int, seed: int, true_crc: np.ndarray | None, p_crc: np.ndarray | None,
              arrays: _StrategyArrays, col_spec: InterventionSpec) -> tuple[np.ndarray, float]:
    rng = np.random.Generator(np.random.Philox(key=[seed, run]))
    if true_crc is None:
        # no recorded CRC states: draw them from the posteriors, anew per run
        true_crc = rng.random(p_crc.shape[0]) < p_crc
    n = true_crc.shape[0]
    u_screen = rng.random(n)
    pos_prob = np.where(true_crc, arrays.sens, 1.0 - arrays.spec)
    positive = arrays.screened & (u_screen < pos_prob)

    col = (arrays.screened & ((positive & arrays.col_if_pos)
                              | (~positive & arrays.col_if_neg))) | arrays.col_direct
    u_col = rng.random(n)
    col_pos_prob = np.where(true_crc, col_spec.sensitivity, 1.0 - col_spec.specificity)
    col_positive = col & (u_col < col_pos_prob)

    predicted = col_positive | (positive & ~arrays.col_if_pos)

    cost = np.where(arrays.screened, arrays.test_cost, 0.0).astype(float)
    cost += np.where(col, col_spec.unit_cost, 0.0)
    for code, test in enumerate(arrays.test_specs):
        members = np.flatnonzero(arrays.test_code == code)
        if members.size:
            cost[members] += _complication_cost_draw(rng, test, members.size)
    col_members = np.flatnonzero(col)
    if col_members.size:
        cost[col_members] += _complication_cost_draw(rng, col_spec, col_members.size)

    tp = float(np.count_nonzero(predicted & true_crc))
    fp = float(np.count_nonzero(predicted & ~true_crc))
    fn = float(np.count_nonzero(~predicted & true_crc))
    tn = float(np.count_nonzero(~predicted & ~true_crc))
    return np.array([tn, fp, fn, tp]), float(cost.sum())


def simulate(population: Population, allocation: AllocationResult,
             catalog: InterventionCatalog, runs: int, seed: int,
             threads: int = 1) -> SimulationReport:
    """Monte Carlo replay of an allocation; confusion statistics over runs.

    Populations with recorded CRC states (the synthetic ones) keep them
    fixed across runs; otherwise each run resamples the states from the
    member posteriors.
    """
    true_crc = population.true_crc
    p_crc = None if true_crc is not None else population.compute_posteriors()
    arrays = _strategy_arrays(population, allocation, catalog)
    col_spec = catalog.colonoscopy

    def job(run: int) -> tuple[np.ndarray, float]:
        return _run_once(run, seed, true_crc, p_crc, arrays, col_spec)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(job, range(runs)))
    else:
        outcomes = [job(run) for run in range(runs)]

    matrices = np.stack([m for m, _ in outcomes])
    costs = np.array([c for _, c in outcomes])
    mean = matrices.mean(axis=0)
    std = matrices.std(axis=0)
    tn, fp, fn, tp = mean
    sensitivity = tp / (tp + fn) if tp + fn > 0 else 0.0
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    f1 = (2 * precision * sensitivity / (precision + sensitivity)
          if precision + sensitivity > 0 else 0.0)
    keys = ("TN", "FP", "FN", "TP")
    return SimulationReport(
        confusion_mean=dict(zip(keys, mean.tolist())),
        confusion_std=dict(zip(keys, std.tolist())),
        sensitivity=float(sensitivity),
        precision=float(precision),
        f1=float(f1),
        cost_per_patient=float(costs.mean() / len(population)),
        runs=runs,
        seed=seed,
    )


def analytic_sensitivity(population: Population, allocation: AllocationResult,
                         catalog: InterventionCatalog) -> float:
    """Closed-form detection probability among true CRC members (oracle)."""
    if population.true_crc is None:
        raise PopulationError("analytic sensitivity needs known true CRC states")
    col_sens = catalog.colonoscopy.sensitivity
    total = 0.0
    n_crc = 0
    for i in np.flatnonzero(population.true_crc):
        strat = allocation.assignment[int(i)]
        rule = strat.rule
        n_crc += 1
        if strat.screening == NO_SCREENING:
            total += col_sens if rule[NO_RESULT] else 0.0
            continue
        s = catalog[strat.screening]
        p_pos = s.sensitivity
        detect = p_pos * (col_sens if rule[PRED_TRUE] else 1.0)
        detect += (1.0 - p_pos) * (col_sens if rule[PRED_FALSE] else 0.0)
        total += detect
    return total / n_crc if n_crc else 0.0


# ---------------------------------------------------------------------------
# Sensitivity sweeps and device benchmarking
# ---------------------------------------------------------------------------

def sweep_pe(population: Population, pe_info_grid: list[float], pe_cost_grid: list[float],
             catalog: InterventionCatalog, base: PreferenceParams,
             limits: OperationalLimits | None = None) -> list[dict]:
    """Re-calibrate per PE grid point, re-allocate, and tabulate counts."""
    if not pe_info_grid or not pe_cost_grid:
        raise ValueError("PE sweep grids must be nonempty")
    out = []
    for cost in pe_cost_grid:
        for info in pe_info_grid:
            a, b, rho = calibrate_utility(base.best_anchor, base.worst_anchor,
                                          (cost, info), base.pe_value, base.lambdas)
            params = PreferenceParams(dict(base.lambdas), a, b, rho, base.best_anchor,
                                      base.worst_anchor, (cost, info), base.pe_value,
                                      risk_neutral=(rho == 0.0))
            allocation = allocate(population, catalog, params, limits)
            out.append({
                "peCost": cost, "peInfo": info, "rho": rho,
                "counts": allocation.count_table(catalog),
            })
    return out


def sweep_lambda(population: Population, overrides: dict[int, float],
                 catalog: InterventionCatalog, base: PreferenceParams,
                 limits: OperationalLimits | None = None) -> dict:
    """Re-allocate under modified comfort weights (utility re-calibrated)."""
    lambdas = dict(base.lambdas)
    lambdas.update(overrides)
    a, b, rho = calibrate_utility(base.best_anchor, base.worst_anchor,
                                  base.pe_point, base.pe_value, lambdas)
    params = PreferenceParams(lambdas, a, b, rho, base.best_anchor,
                              base.worst_anchor, base.pe_point, base.pe_value,
                              risk_neutral=(rho == 0.0))
    allocation = allocate(population, catalog, params, limits)
    return {
        "lambdas": lambdas,
        "counts": allocation.count_table(catalog),
        "allocation": allocation,
    }


def benchmark_device(new_spec: InterventionSpec, population: Population,
                     limits: OperationalLimits | None, catalog: InterventionCatalog,
                     params: PreferenceParams, runs: int = 20, seed: int = 7,
                     threads: int = 1):
    """Dominance screen, then re-allocate and re-simulate with the device added."""
    from .policy import dominance_filter

    extended = catalog.with_device(new_spec)
    findings = dominance_filter(extended)
    allocation = allocate(population, extended, params, limits)
    report = simulate(population, allocation, extended, runs, seed, threads)
    return findings, allocation, report


__all__ = [
    "TRUE_CRC_COLUMN", "TABLE9_LIMITS",
    "PopulationError", "PopulationMember", "Population",
    "OperationalLimits", "AllocationResult", "SimulationReport",
    "generate_population", "load_population",
    "allocate", "national_baseline", "simulate", "analytic_sensitivity",
    "sweep_pe", "sweep_lambda", "benchmark_device",
]
