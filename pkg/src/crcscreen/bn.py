"""Discrete Bayesian networks with exact inference by variable elimination.

Networks are loaded from a JSON model document (see ``docs`` in the README
for the exact CPT flattening) and queried for posteriors given patient
evidence.  Inference prunes barren nodes, then eliminates by the min-fill
heuristic with lexicographic tie-breaks, so identical inputs always produce
bit-identical outputs.  A loaded network is immutable and safe to query
concurrently.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_CPT_COLUMN_TOL = 1e-9
_UNDERFLOW = 1e-300


class ModelFormatError(ValueError):
    """The model document does not parse or misses required fields."""


class ModelValidationError(ValueError):
    """Structural or numeric invariant violated; names the offending variable."""


class UnknownVariableError(KeyError):
    """Evidence or query references a variable absent from the model."""


class UnknownStateError(ValueError):
    """Evidence assigns a state label the variable does not have."""


class EvidenceContradictionError(ValueError):
    """The evidence combination has probability zero under the model."""


class InferenceNumericalError(ArithmeticError):
    """Probability mass underflowed double precision (below 1e-300)."""


@dataclass(frozen=True)
class DiscreteVariable:
    name: str
    states: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.states) < 2:
            raise ModelValidationError(f"variable {self.name!r} needs at least two states")
        if len(set(self.states)) != len(self.states):
            raise ModelValidationError(f"variable {self.name!r} has duplicate state labels")

    def state_index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise UnknownStateError(
                f"variable {self.name!r} has no state {label!r} (states: {list(self.states)})"
            ) from None


@dataclass(frozen=True)
class Cpt:
    """P(child | parents) flattened with the last parent varying fastest.

    Flat index = parent_combination_index * |child states| + child_state_index.
    """

    child: str
    parents: tuple[str, ...]
    table: tuple[float, ...]

    def as_array(self, net: "DiscreteNetwork") -> np.ndarray:
        shape = [len(net[p].states) for p in self.parents] + [len(net[self.child].states)]
        return np.asarray(self.table, dtype=float).reshape(shape)


@dataclass(frozen=True)
class PatientEvidence:
    """Observed variable states, or an exogenous CRC probability override."""

    assignments: dict[str, str] = field(default_factory=dict)
    prior_override: float | None = None

    def __post_init__(self) -> None:
        if self.prior_override is not None and not 0.0 < self.prior_override < 1.0:
            raise ModelValidationError(
                f"priorOverride must lie strictly inside (0,1), got {self.prior_override}")

    @classmethod
    def from_dict(cls, raw: dict) -> "PatientEvidence":
        raw = dict(raw)
        override = raw.pop("priorOverride", None)
        return cls({str(k): str(v) for k, v in raw.items()},
                   None if override is None else float(override))


class DiscreteNetwork:
    """Validated immutable network: variables, one CPT each, and a target.

    The target's first state is, by convention of the model format, the
    positive finding (``has CRC``).
    """

    def __init__(self, variables: list[DiscreteVariable], cpts: list[Cpt], target: str):
        self.variables = tuple(variables)
        self.cpts = tuple(cpts)
        self.target = target
        self._by_name = {v.name: v for v in variables}
        self._cpt_by_child = {c.child: c for c in cpts}
        self._validate()
        self._children: dict[str, set[str]] = {v.name: set() for v in variables}
        for c in cpts:
            for p in c.parents:
                self._children[p].add(c.child)
        self._factors = {c.child: c.as_array(self) for c in cpts}

    def __getitem__(self, name: str) -> DiscreteVariable:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownVariableError(f"unknown variable {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def cpt(self, name: str) -> Cpt:
        return self._cpt_by_child[name]

    def parents(self, name: str) -> tuple[str, ...]:
        return self._cpt_by_child[name].parents

    def children(self, name: str) -> set[str]:
        return self._children[name]

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def _validate(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise ModelValidationError(f"duplicate variable name {dup!r}")
        if self.target not in self._by_name:
            raise ModelValidationError(f"target {self.target!r} is not a model variable")
        missing = set(names) - set(self._cpt_by_child)
        if missing:
            raise ModelValidationError(f"variable {sorted(missing)[0]!r} has no CPT")
        if len(self.cpts) != len(self.variables):
            counts = {c.child: sum(1 for k in self.cpts if k.child == c.child)
                      for c in self.cpts}
            dup = sorted(n for n, c in counts.items() if c > 1)
            raise ModelValidationError(
                f"exactly one CPT per variable required "
                f"(offending: {dup[0] if dup else 'count mismatch'!r})")
        for cpt in self.cpts:
            for p in cpt.parents:
                if p not in self._by_name:
                    raise ModelValidationError(
                        f"variable {cpt.child!r} references unknown parent {p!r}")
            n_child = len(self._by_name[cpt.child].states)
            n_cols = 1
            for p in cpt.parents:
                n_cols *= len(self._by_name[p].states)
            if len(cpt.table) != n_cols * n_child:
                raise ModelValidationError(
                    f"variable {cpt.child!r}: CPT length {len(cpt.table)}, "
                    f"expected {n_cols * n_child}")
            for v in cpt.table:
                if not 0.0 <= v <= 1.0 or math.isnan(v):
                    raise ModelValidationError(
                        f"variable {cpt.child!r}: probability {v} out of [0,1]")
            flat = np.asarray(cpt.table, dtype=float).reshape(n_cols, n_child)
            sums = flat.sum(axis=1)
            bad = np.where(np.abs(sums - 1.0) > _CPT_COLUMN_TOL)[0]
            if bad.size:
                raise ModelValidationError(
                    f"variable {cpt.child!r}: conditional column {int(bad[0])} "
                    f"sums to {sums[bad[0]]!r}")
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        indeg = {v.name: len(self._cpt_by_child[v.name].parents) for v in self.variables}
        children: dict[str, list[str]] = {v.name: [] for v in self.variables}
        for c in self.cpts:
            for p in c.parents:
                children[p].append(c.child)
        queue = [n for n, d in indeg.items() if d == 0]
        seen = 0
        while queue:
            node = queue.pop()
            seen += 1
            for ch in children[node]:
                indeg[ch] -= 1
                if indeg[ch] == 0:
                    queue.append(ch)
        if seen != len(self.variables):
            cyclic = sorted(n for n, d in indeg.items() if d > 0)
            raise ModelValidationError(f"graph has a cycle through variable {cyclic[0]!r}")

    def validate_evidence(self, ev: PatientEvidence) -> dict[str, int]:
        indices = {}
        for name, state in ev.assignments.items():
            var = self[name]
            indices[name] = var.state_index(state)
        return indices


def load_network(source: str | Path | dict) -> DiscreteNetwork:
    """Parse and validate a model document (path, JSON text, or parsed dict)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = Path(source).read_text() if _looks_like_path(source) else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model document does not parse: {exc}") from exc
    try:
        raw_vars = doc["variables"]
        target = doc["target"]
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"model document misses field {exc}") from exc
    variables, cpts = [], []
    for raw in raw_vars:
        try:
            name = str(raw["name"])
            states = tuple(str(s) for s in raw["states"])
            parents = tuple(str(p) for p in raw.get("parents", []))
            table = tuple(float(x) for x in raw["cpt"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed variable record ({exc}): {raw!r}") from exc
        variables.append(DiscreteVariable(name, states))
        cpts.append(Cpt(name, parents, table))
    return DiscreteNetwork(variables, cpts, str(target))


def _looks_like_path(source: str | Path) -> bool:
    if isinstance(source, Path):
        return True
    return not source.lstrip().startswith("{")


# ---------------------------------------------------------------------------
# Variable elimination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Factor:
    vars: tuple[str, ...]
    table: np.ndarray


def _align(factor: _Factor, out_vars: tuple[str, ...]) -> np.ndarray:
    present = [v for v in out_vars if v in factor.vars]
    perm = [factor.vars.index(v) for v in present]
    t = np.transpose(factor.table, perm) if perm else factor.table
    shape = []
    i = 0
    for v in out_vars:
        if v in factor.vars:
            shape.append(t.shape[i])
            i += 1
        else:
            shape.append(1)
    return t.reshape(shape)


def _multiply(a: _Factor, b: _Factor) -> _Factor:
    out_vars = a.vars + tuple(v for v in b.vars if v not in a.vars)
    return _Factor(out_vars, _align(a, out_vars) * _align(b, out_vars))


def _marginalize(f: _Factor, var: str) -> _Factor:
    axis = f.vars.index(var)
    return _Factor(f.vars[:axis] + f.vars[axis + 1:], f.table.sum(axis=axis))


def _restrict(f: _Factor, var: str, index: int) -> _Factor:
    axis = f.vars.index(var)
    return _Factor(f.vars[:axis] + f.vars[axis + 1:], np.take(f.table, index, axis=axis))


def _min_fill_order(scopes: list[tuple[str, ...]], eliminate: set[str]) -> list[str]:
    adj: dict[str, set[str]] = {}
    for scope in scopes:
        for v in scope:
            adj.setdefault(v, set())
        for x, y in itertools.combinations(scope, 2):
            adj[x].add(y)
            adj[y].add(x)
    order = []
    remaining = set(eliminate)
    while remaining:
        def fill(v: str) -> int:
            nbrs = [n for n in adj.get(v, ()) if n != v]
            return sum(1 for x, y in itertools.combinations(nbrs, 2) if y not in adj[x])

        best = min(sorted(remaining), key=lambda v: (fill(v), v))
        nbrs = [n for n in adj.get(best, ())]
        for x, y in itertools.combinations(nbrs, 2):
            adj[x].add(y)
            adj[y].add(x)
        for n in nbrs:
            adj[n].discard(best)
        adj.pop(best, None)
        remaining.discard(best)
        order.append(best)
    return order


def _prune_barren(net: DiscreteNetwork, query: str, observed: set[str]) -> set[str]:
    """Drop unobserved non-query leaves (repeatedly); they sum out to one."""
    retained = set(net.names)
    changed = True
    while changed:
        changed = False
        for name in sorted(retained):
            if name == query or name in observed:
                continue
            if not (net.children(name) & retained):
                retained.discard(name)
                changed = True
    return retained


def posterior(net: DiscreteNetwork, ev: PatientEvidence, query: str) -> np.ndarray:
    """Exact posterior distribution over the query variable's states.

    With a prior override and the target as query this is (override,
    1 - override) by definition; otherwise variable elimination.
    """
    qvar = net[query]
    ev_idx = net.validate_evidence(ev)
    if ev.prior_override is not None and query == net.target:
        out = np.zeros(len(qvar.states))
        out[0] = ev.prior_override
        out[1] = 1.0 - ev.prior_override
        return out
    if query in ev_idx:
        out = np.zeros(len(qvar.states))
        out[ev_idx[query]] = 1.0
        return out

    retained = _prune_barren(net, query, set(ev_idx))
    factors: list[_Factor] = []
    for name in sorted(retained):
        cpt = net.cpt(name)
        f = _Factor(cpt.parents + (name,), net._factors[name])
        for var in f.vars:
            if var in ev_idx:
                f = _restrict(f, var, ev_idx[var])
        # Fully restricted factors are scalar likelihoods; they still scale
        # (and possibly zero out) the normalizer, so keep them.
        factors.append(f)

    hidden = {v for f in factors for v in f.vars} - {query}
    order = _min_fill_order([f.vars for f in factors if f.vars], hidden)
    for var in order:
        bucket = [f for f in factors if var in f.vars]
        if not bucket:
            continue
        product = bucket[0]
        for f in bucket[1:]:
            product = _multiply(product, f)
        factors = [f for f in factors if var not in f.vars]
        factors.append(_marginalize(product, var))

    result = _Factor((), np.array(1.0))
    for f in factors:
        result = _multiply(result, f)
    if result.vars != (query,):
        result = _Factor((query,), np.broadcast_to(
            result.table, (len(qvar.states),)).astype(float))
    z = float(result.table.sum())
    if z == 0.0:
        raise EvidenceContradictionError(
            f"evidence has probability zero (query {query!r})")
    if z < _UNDERFLOW:
        raise InferenceNumericalError(
            f"probability mass underflowed double precision: {z!r}")
    return result.table / z


def posterior_crc(net: DiscreteNetwork, ev: PatientEvidence) -> float:
    """P(has CRC | evidence): first state of the target's posterior."""
    return float(posterior(net, ev, net.target)[0])


def brute_force_posterior(net: DiscreteNetwork, ev: PatientEvidence, query: str) -> np.ndarray:
    """Posterior by exhaustive summation over the full joint (test oracle)."""
    qvar = net[query]
    ev_idx = net.validate_evidence(ev)
    if ev.prior_override is not None and query == net.target:
        out = np.zeros(len(qvar.states))
        out[0] = ev.prior_override
        out[1] = 1.0 - ev.prior_override
        return out
    names = net.names
    axes = {n: i for i, n in enumerate(names)}
    totals = np.zeros(len(qvar.states))
    state_ranges = [range(len(net[n].states)) for n in names]
    for combo in itertools.product(*state_ranges):
        if any(combo[axes[n]] != idx for n, idx in ev_idx.items()):
            continue
        prob = 1.0
        for n in names:
            cpt = net.cpt(n)
            arr = net._factors[n]
            index = tuple(combo[axes[p]] for p in cpt.parents) + (combo[axes[n]],)
            prob *= float(arr[index])
        totals[combo[axes[query]]] += prob
    z = totals.sum()
    if z == 0.0:
        raise EvidenceContradictionError("evidence has probability zero")
    return totals / z


def bundled_model_path() -> Path:
    """Location of the packaged 14-node example network."""
    return Path(__file__).parent / "models" / "crc14.json"


def load_bundled_network() -> DiscreteNetwork:
    return load_network(bundled_model_path())


__all__ = [
    "ModelFormatError", "ModelValidationError", "UnknownVariableError",
    "UnknownStateError", "EvidenceContradictionError", "InferenceNumericalError",
    "DiscreteVariable", "Cpt", "PatientEvidence", "DiscreteNetwork",
    "load_network", "posterior", "posterior_crc", "brute_force_posterior",
    "bundled_model_path", "load_bundled_network",
]
