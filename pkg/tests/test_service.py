from __future__ import annotations

import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from crcscreen.bn import PatientEvidence, load_bundled_network, posterior_crc
from crcscreen.infovalue import entropy, single_test_v_info
from crcscreen.policy import recommend
from crcscreen.population import generate_population
from crcscreen.preferences import replay_transcript
from crcscreen.service import create_app

TRANSCRIPT = Path(__file__).resolve().parents[1] / "src" / "crcscreen" / "data" / "appendix_b_transcript.json"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("service")


@pytest.fixture(scope="module")
def client(workdir):
    app = create_app(workdir=workdir, workers=2)
    with TestClient(app) as c:
        yield c


@pytest.fixture(scope="module")
def population_file(tmp_path_factory):
    net = load_bundled_network()
    pop = generate_population(net, 2_000, seed=99)
    path = tmp_path_factory.mktemp("pop") / "pop.csv"
    pop.to_csv(path)
    return path


class TestPosteriorEndpoint:
    def test_benchmark_profile(self, client, benchmark_profile):
        r = client.post("/v1/posterior", json={"evidence": benchmark_profile})
        assert r.status_code == 200
        body = r.json()
        assert body["pCrc"] == pytest.approx(0.00085, abs=1e-9)
        assert body["entropy"] == pytest.approx(entropy(0.00085), abs=1e-12)

    def test_flat_body_and_override(self, client):
        r = client.post("/v1/posterior", json={"priorOverride": 0.1})
        assert r.status_code == 200
        assert r.json()["pCrc"] == 0.1

    def test_unknown_variable_400(self, client):
        r = client.post("/v1/posterior", json={"evidence": {"shoe_size": "44"}})
        assert r.status_code == 400
        assert "shoe_size" in r.json()["detail"]

    def test_unknown_state_400(self, client):
        r = client.post("/v1/posterior", json={"evidence": {"sex": "robot"}})
        assert r.status_code == 400

    def test_golden_equivalence(self, client, net, benchmark_profile):
        ev = dict(benchmark_profile, age="54_64")
        ev.pop("hypercholesterolemia")
        want = posterior_crc(net, PatientEvidence(ev))
        got = client.post("/v1/posterior", json={"evidence": ev}).json()["pCrc"]
        assert got == want

    def test_contradictory_evidence_422(self, tmp_path):
        model = {
            "target": "B",
            "variables": [
                {"name": "A", "states": ["a0", "a1"], "parents": [], "cpt": [1.0, 0.0]},
                {"name": "B", "states": ["b0", "b1"], "parents": ["A"],
                 "cpt": [0.9, 0.1, 0.2, 0.8]},
            ],
        }
        path = tmp_path / "tiny.json"
        path.write_text(json.dumps(model))
        with TestClient(create_app(model_path=path)) as tiny_client:
            r = tiny_client.post("/v1/posterior", json={"evidence": {"A": "a1"}})
            assert r.status_code == 422


class TestRecommendEndpoint:
    def test_benchmark_defaults(self, client, benchmark_profile):
        r = client.post("/v1/recommend", json={"evidence": benchmark_profile})
        body = r.json()
        assert body["strategies"][0]["label"] == "NoScreening"
        assert body["strategies"][0]["expectedUtility"] == pytest.approx(0.143, abs=0.01)

    def test_rho_override_flips_top(self, client, benchmark_profile):
        r = client.post("/v1/recommend",
                        json={"evidence": benchmark_profile, "rho": 0.005})
        top = r.json()["strategies"][0]
        assert top["label"] == "FIT+col-if-positive"
        assert top["expectedUtility"] == pytest.approx(0.147, abs=0.01)

    def test_top_k(self, client):
        r = client.post("/v1/recommend", json={"pCrc": 0.01, "topK": 1})
        assert len(r.json()["strategies"]) == 1

    def test_golden_equivalence(self, client, catalog, params):
        want = recommend(0.004, catalog, params)
        got = client.post("/v1/recommend", json={"pCrc": 0.004}).json()["strategies"]
        assert [g["label"] for g in got] == [w.strategy.label() for w in want]
        assert got[0]["expectedUtility"] == want[0].expected_utility
        assert got[0]["branchEUs"].keys() == want[0].branch_eus.keys()


class TestElicitationFlow:
    def _replay(self, client) -> tuple[str, dict]:
        doc = json.loads(TRANSCRIPT.read_text())
        session = client.post("/v1/elicitation/sessions", json={}).json()
        sid = session["id"]
        question = session["question"]
        for answer in doc["answers"]:
            assert question["kind"] == "pair"
            assert question["optionA"]["id"] == answer["optionA"]["id"]
            r = client.post(f"/v1/elicitation/sessions/{sid}/answers", json={
                "questionIndex": question["index"],
                "preferred": answer["preferred"],
                "indifferenceCost": answer["indifferenceCost"],
            })
            assert r.status_code == 200, r.text
            body = r.json()
            question = body.get("question")
        assert question["kind"] == "pe"
        r = client.post(f"/v1/elicitation/sessions/{sid}/answers", json={
            "questionIndex": question["index"], "peValue": doc["pe"]["value"],
        })
        assert r.status_code == 200 and r.json().get("complete")
        return sid, client.get(f"/v1/elicitation/sessions/{sid}/result").json()

    def test_replay_matches_library(self, client):
        _, result = self._replay(client)
        lambdas, params, _ = replay_transcript(TRANSCRIPT)
        for level, value in lambdas.items():
            assert result["lambdas"][str(level)] == pytest.approx(value, abs=1e-12)
        assert result["rho"] == pytest.approx(params.rho, abs=1e-12)
        assert result["a"] == pytest.approx(params.a, abs=1e-12)
        assert result["b"] == pytest.approx(params.b, abs=1e-12)

    def test_paper_values_reproduced(self, client):
        _, result = self._replay(client)
        assert result["lambdas"]["1"] == pytest.approx(4.01, abs=0.02)
        assert result["lambdas"]["2"] == pytest.approx(4.17, abs=0.02)
        assert result["lambdas"]["3"] == pytest.approx(6.80, abs=0.02)
        assert result["rho"] == pytest.approx(0.039, abs=0.002)

    def test_out_of_order_answer_409(self, client):
        sid = client.post("/v1/elicitation/sessions", json={}).json()["id"]
        r = client.post(f"/v1/elicitation/sessions/{sid}/answers", json={
            "questionIndex": 3, "preferred": "FIT", "indifferenceCost": 3,
        })
        assert r.status_code == 409

    def test_replayed_answer_409(self, client):
        sid = client.post("/v1/elicitation/sessions", json={}).json()["id"]
        good = {"questionIndex": 0, "preferred": "SyntheticProbe", "indifferenceCost": 300}
        assert client.post(f"/v1/elicitation/sessions/{sid}/answers", json=good).status_code == 200
        assert client.post(f"/v1/elicitation/sessions/{sid}/answers", json=good).status_code == 409

    def test_indifference_cost_above_stated_422(self, client):
        sid = client.post("/v1/elicitation/sessions", json={}).json()["id"]
        # first question ok
        client.post(f"/v1/elicitation/sessions/{sid}/answers", json={
            "questionIndex": 0, "preferred": "SyntheticProbe", "indifferenceCost": 300})
        # CTC vs CC: CC costs 510.24, indifference must fall below that
        r = client.post(f"/v1/elicitation/sessions/{sid}/answers", json={
            "questionIndex": 1, "preferred": "CTC", "indifferenceCost": 800})
        assert r.status_code == 422

    def test_result_before_completion_404(self, client):
        sid = client.post("/v1/elicitation/sessions", json={}).json()["id"]
        r = client.get(f"/v1/elicitation/sessions/{sid}/result")
        assert r.status_code == 404
        assert "incomplete" in r.json()["detail"]

    def test_unknown_session_404(self, client):
        assert client.get("/v1/elicitation/sessions/nope/result").status_code == 404


class TestAllocationJobs:
    def _wait(self, client, job_id: str, timeout: float = 30.0) -> dict:
        deadline = time.time() + timeout
        while time.time() < deadline:
            body = client.get(f"/v1/allocations/{job_id}").json()
            if body["status"] in ("done", "failed"):
                return body
            time.sleep(0.05)
        raise AssertionError("job did not finish in time")

    def test_job_lifecycle(self, client, population_file):
        r = client.post("/v1/allocations", json={
            "population": str(population_file),
            "limits": {"FIT": 40, "sDNA": 15},
            "runs": 5, "seed": 3,
        })
        assert r.status_code == 200
        job_id = r.json()["jobId"]
        polled = client.get(f"/v1/allocations/{job_id}").json()
        assert polled["status"] in ("queued", "running", "done")
        body = self._wait(client, job_id)
        assert body["status"] == "done", body
        counts = body["result"]["counts"]
        assert counts["FIT"] <= 40 and counts["sDNA"] <= 15
        assert body["result"]["simulation"]["runs"] == 5

    def test_missing_population_404(self, client):
        r = client.post("/v1/allocations", json={"population": "/no/such/file.csv"})
        assert r.status_code == 404

    def test_unknown_job_404(self, client):
        assert client.get("/v1/allocations/nothere").status_code == 404

    def test_done_jobs_survive_restart_read_only(self, client, population_file, workdir):
        r = client.post("/v1/allocations", json={
            "population": str(population_file), "runs": 2, "seed": 1})
        job_id = r.json()["jobId"]
        first = self._wait(client, job_id)
        fresh = create_app(workdir=workdir)
        with TestClient(fresh) as second_client:
            body = second_client.get(f"/v1/allocations/{job_id}").json()
            assert body["status"] == "done"
            assert body["result"] == first["result"]


class TestDeviceAndCurves:
    def test_dev1_dominated(self, client):
        r = client.post("/v1/devices/benchmark", json={
            "device": {"id": "Dev1", "sensitivity": 0.8, "specificity": 0.85,
                       "unitCost": 250, "comfort": 2}})
        body = r.json()
        assert body["dominated"] is True
        assert body["by"] == "sDNA" or any(
            f["by"] == "sDNA" and f["intervention"] == "Dev1" for f in body["findings"])

    def test_dev2_not_dominated(self, client):
        r = client.post("/v1/devices/benchmark", json={
            "device": {"id": "Dev2", "sensitivity": 0.85, "specificity": 0.94,
                       "unitCost": 3, "comfort": 3}})
        assert r.json()["dominated"] is False

    def test_curves_shape_and_value(self, client, catalog):
        r = client.get("/v1/curves/vinfo",
                       params={"methods": "FIT", "points": 101,
                               "pmin": 0.00085, "pmax": 0.9})
        pairs = r.json()["FIT"]
        assert len(pairs) == 101
        p0, v0 = pairs[0]
        assert p0 == pytest.approx(0.00085)
        assert v0 == pytest.approx(0.245, abs=0.005)
        assert v0 == single_test_v_info(0.00085, catalog["FIT"])

    def test_methods_empty_400(self, client):
        assert client.get("/v1/curves/vinfo", params={"methods": ""}).status_code == 400

    def test_unknown_method_400(self, client):
        r = client.get("/v1/curves/vinfo", params={"methods": "MRI"})
        assert r.status_code == 400
