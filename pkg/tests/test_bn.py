from __future__ import annotations

import json

import numpy as np
import pytest

from crcscreen.bn import (
    Cpt,
    DiscreteNetwork,
    DiscreteVariable,
    EvidenceContradictionError,
    ModelFormatError,
    ModelValidationError,
    PatientEvidence,
    UnknownStateError,
    UnknownVariableError,
    brute_force_posterior,
    load_network,
    posterior,
    posterior_crc,
)

CHAIN = {
    "target": "B",
    "variables": [
        {"name": "A", "states": ["a0", "a1"], "parents": [], "cpt": [0.3, 0.7]},
        {"name": "B", "states": ["b0", "b1"], "parents": ["A"],
         "cpt": [0.9, 0.1, 0.2, 0.8]},
    ],
}


def random_network(rng: np.random.Generator, n_vars: int) -> DiscreteNetwork:
    """Random DAG over binary variables with Dirichlet CPT columns."""
    variables, cpts = [], []
    for i in range(n_vars):
        name = f"v{i}"
        n_parents = int(rng.integers(0, min(i, 3) + 1))
        parents = tuple(f"v{j}" for j in sorted(
            rng.choice(i, size=n_parents, replace=False))) if n_parents else ()
        table = []
        for _ in range(2 ** len(parents)):
            col = rng.dirichlet([1.0, 1.0])
            table.extend(col.tolist())
        variables.append(DiscreteVariable(name, ("s0", "s1")))
        cpts.append(Cpt(name, parents, tuple(table)))
    return DiscreteNetwork(variables, cpts, "v0")


def random_evidence(rng: np.random.Generator, net: DiscreteNetwork,
                    exclude: str) -> PatientEvidence:
    picks = {}
    for name in net.names:
        if name != exclude and rng.random() < 0.4:
            var = net[name]
            picks[name] = var.states[int(rng.integers(len(var.states)))]
    return PatientEvidence(picks)


class TestLoading:
    def test_two_node_chain(self):
        net = load_network(CHAIN)
        assert len(net.variables) == 2
        assert net.target == "B"

    def test_json_text_and_path(self, tmp_path):
        text = json.dumps(CHAIN)
        assert load_network(text).names == ["A", "B"]
        path = tmp_path / "m.json"
        path.write_text(text)
        assert load_network(path).names == ["A", "B"]

    def test_parse_error(self):
        with pytest.raises(ModelFormatError):
            load_network("{not json")

    def test_bad_column_sum_names_variable(self):
        doc = json.loads(json.dumps(CHAIN))
        doc["variables"][1]["cpt"] = [0.8, 0.1, 0.2, 0.8]
        with pytest.raises(ModelValidationError, match="'B'"):
            load_network(doc)

    def test_cycle_names_variable(self):
        doc = {
            "target": "A",
            "variables": [
                {"name": "A", "states": ["x", "y"], "parents": ["B"],
                 "cpt": [0.5, 0.5, 0.5, 0.5]},
                {"name": "B", "states": ["x", "y"], "parents": ["A"],
                 "cpt": [0.5, 0.5, 0.5, 0.5]},
            ],
        }
        with pytest.raises(ModelValidationError, match="cycle"):
            load_network(doc)

    def test_dangling_parent_names_variable(self):
        doc = json.loads(json.dumps(CHAIN))
        doc["variables"][1]["parents"] = ["Z"]
        with pytest.raises(ModelValidationError, match="'B'.*'Z'"):
            load_network(doc)

    def test_probability_out_of_range(self):
        doc = json.loads(json.dumps(CHAIN))
        doc["variables"][0]["cpt"] = [1.3, -0.3]
        with pytest.raises(ModelValidationError, match="'A'"):
            load_network(doc)

    def test_bundled_model_loads(self, net):
        assert net.target == "CRC"
        assert len(net.variables) == 14
        assert net["CRC"].states[0] == "present"


class TestPosterior:
    def test_empty_evidence_root_marginal(self):
        net = load_network(CHAIN)
        got = posterior(net, PatientEvidence(), "A")
        assert got == pytest.approx([0.3, 0.7], abs=1e-12)

    def test_chain_posterior(self):
        net = load_network(CHAIN)
        got = posterior(net, PatientEvidence(), "B")
        assert got == pytest.approx([0.3 * 0.9 + 0.7 * 0.2, 0.3 * 0.1 + 0.7 * 0.8],
                                    abs=1e-12)

    def test_evidence_forces_point_mass(self):
        net = load_network(CHAIN)
        got = posterior(net, PatientEvidence({"A": "a1"}), "A")
        assert got.tolist() == [0.0, 1.0]

    def test_prior_override(self, net):
        ev = PatientEvidence({}, prior_override=0.1)
        assert posterior_crc(net, ev) == 0.1
        ev = PatientEvidence({}, prior_override=0.5)
        assert posterior_crc(net, ev) == 0.5

    def test_override_out_of_range(self):
        with pytest.raises(ModelValidationError):
            PatientEvidence({}, prior_override=1.0)

    def test_unknown_variable(self, net):
        with pytest.raises(UnknownVariableError):
            posterior(net, PatientEvidence({"shoe_size": "44"}), "CRC")

    def test_unknown_state(self, net):
        with pytest.raises(UnknownStateError):
            posterior(net, PatientEvidence({"sex": "other"}), "CRC")

    def test_contradiction_distinct_from_numerical_failure(self):
        doc = {
            "target": "B",
            "variables": [
                {"name": "A", "states": ["a0", "a1"], "parents": [], "cpt": [1.0, 0.0]},
                {"name": "B", "states": ["b0", "b1"], "parents": ["A"],
                 "cpt": [0.9, 0.1, 0.2, 0.8]},
            ],
        }
        net = load_network(doc)
        with pytest.raises(EvidenceContradictionError):
            posterior(net, PatientEvidence({"A": "a1"}), "B")

    def test_deterministic_bit_identical(self, net, benchmark_profile):
        ev = PatientEvidence(benchmark_profile)
        first = posterior(net, ev, "CRC")
        second = posterior(net, ev, "CRC")
        assert first.tobytes() == second.tobytes()

    def test_posterior_normalized(self, net, benchmark_profile):
        got = posterior(net, PatientEvidence(benchmark_profile), "CRC")
        assert got.sum() == pytest.approx(1.0, abs=1e-9)


class TestBundledModelPosteriors:
    def test_benchmark_profile(self, net, benchmark_profile):
        assert posterior_crc(net, PatientEvidence(benchmark_profile)) == \
            pytest.approx(0.00085, abs=1e-9)

    def test_benchmark_with_diabetes_hypertension(self, net, benchmark_profile):
        ev = dict(benchmark_profile, diabetes="yes", hypertension="yes")
        assert posterior_crc(net, PatientEvidence(ev)) == pytest.approx(0.0039, abs=1e-9)

    def test_age_5464_profile(self, net, benchmark_profile):
        ev = dict(benchmark_profile, age="54_64")
        ev.pop("hypercholesterolemia")
        assert posterior_crc(net, PatientEvidence(ev)) == pytest.approx(0.0022, abs=1e-9)

    def test_risky_lifestyle_profile(self, net, benchmark_profile):
        ev = dict(benchmark_profile, bmi="overweight", alcohol="high",
                  physical_activity="inactive", smoking="ex_smoker")
        for gone in ("diabetes", "hypertension", "hypercholesterolemia"):
            ev.pop(gone)
        assert posterior_crc(net, PatientEvidence(ev)) == pytest.approx(0.0018, abs=1e-9)


class TestConcurrencyAndNumerics:
    def test_concurrent_reads_are_safe_and_identical(self, net, benchmark_profile):
        from concurrent.futures import ThreadPoolExecutor
        ev = PatientEvidence(benchmark_profile)
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda _: posterior(net, ev, "CRC").tobytes(),
                                    range(64)))
        assert len(set(results)) == 1

    def test_denormal_mass_is_numerical_error_not_zero(self):
        # 20 independent roots observed in their 1e-16 state push the joint
        # to ~1e-320: below the 1e-300 floor but not yet exactly zero
        from crcscreen.bn import InferenceNumericalError
        variables = [{"name": f"r{i}", "states": ["lo", "hi"], "parents": [],
                      "cpt": [1e-16, 1.0 - 1e-16]} for i in range(20)]
        variables.append({"name": "q", "states": ["a", "b"], "parents": ["r0"],
                          "cpt": [0.5, 0.5, 0.5, 0.5]})
        net = load_network({"target": "q", "variables": variables})
        ev = PatientEvidence({f"r{i}": "lo" for i in range(20)})
        with pytest.raises(InferenceNumericalError):
            posterior(net, ev, "q")


class TestEliminationOracle:
    def test_matches_brute_force_on_random_networks(self):
        rng = np.random.Generator(np.random.Philox(key=2024))
        worst = 0.0
        for trial in range(60):
            net = random_network(rng, n_vars=int(rng.integers(2, 7)))
            query = f"v{int(rng.integers(len(net.names)))}"
            ev = random_evidence(rng, net, exclude=query)
            try:
                fast = posterior(net, ev, query)
                slow = brute_force_posterior(net, ev, query)
            except EvidenceContradictionError:
                continue
            worst = max(worst, float(np.max(np.abs(fast - slow))))
        assert worst < 1e-9

    def test_bundled_model_spot_check_against_brute_force(self, net, benchmark_profile):
        ev = PatientEvidence({"sex": "male", "age": "54_64"})
        fast = posterior(net, ev, "CRC")
        slow = brute_force_posterior(net, ev, "CRC")
        assert np.max(np.abs(fast - slow)) < 1e-9
