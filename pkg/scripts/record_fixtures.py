"""Record v1 API responses as fixtures for the companion-UI contract tests.

Runs the real service in-process and dumps selected responses under
frontend/fixtures/.  Re-run after any engine change that moves numbers.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from crcscreen.population import generate_population  # noqa: E402
from crcscreen.bn import load_bundled_network  # noqa: E402
from crcscreen.preferences import replay_transcript  # noqa: E402
from crcscreen.service import create_app  # noqa: E402

OUT = ROOT / "frontend" / "fixtures"
TRANSCRIPT = ROOT / "src" / "crcscreen" / "data" / "appendix_b_transcript.json"

BENCHMARK = json.loads(
    (ROOT / "src" / "crcscreen" / "data" / "benchmark_profile.json").read_text())


def dump(name: str, payload) -> None:
    (OUT / name).write_text(json.dumps(payload, indent=1))
    print(f"wrote fixtures/{name}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    workdir = ROOT / "frontend" / "fixtures" / ".work"
    workdir.mkdir(exist_ok=True)
    app = create_app(workdir=workdir)
    client = TestClient(app)

    # posterior + what-if recommendation scenarios
    dump("posterior_benchmark.json",
         client.post("/v1/posterior", json={"evidence": BENCHMARK}).json())
    added = dict(BENCHMARK, diabetes="yes", hypertension="yes")
    dump("posterior_added_evidence.json",
         client.post("/v1/posterior", json={"evidence": added}).json())
    dump("recommend_benchmark.json",
         client.post("/v1/recommend", json={"evidence": BENCHMARK, "topK": 8}).json())
    dump("recommend_benchmark_rho005.json",
         client.post("/v1/recommend",
                     json={"evidence": BENCHMARK, "rho": 0.005, "topK": 8}).json())
    dump("recommend_added_evidence.json",
         client.post("/v1/recommend", json={"evidence": added, "topK": 8}).json())

    # full elicitation interview per the bundled transcript
    doc = json.loads(TRANSCRIPT.read_text())
    session = client.post("/v1/elicitation/sessions", json={}).json()
    steps = [{"request": None, "response": session}]
    sid = session["id"]
    question = session["question"]
    for answer in doc["answers"]:
        req = {"questionIndex": question["index"], "preferred": answer["preferred"],
               "indifferenceCost": answer["indifferenceCost"]}
        resp = client.post(f"/v1/elicitation/sessions/{sid}/answers", json=req).json()
        steps.append({"request": req, "response": resp})
        question = resp.get("question")
    pe_req = {"questionIndex": question["index"], "peValue": doc["pe"]["value"]}
    steps.append({"request": pe_req,
                  "response": client.post(f"/v1/elicitation/sessions/{sid}/answers",
                                          json=pe_req).json()})
    result = client.get(f"/v1/elicitation/sessions/{sid}/result").json()
    dump("elicitation_flow.json", {"steps": steps, "result": result})

    # the CLI replay of the same transcript, for the identity check
    lambdas, params, estimates = replay_transcript(TRANSCRIPT)
    dump("cli_replay.json", {
        "lambdas": {str(k): v for k, v in lambdas.items()},
        "estimates": {str(k): v for k, v in estimates.items()},
        "a": params.a, "b": params.b, "rho": params.rho,
    })

    # allocation dashboard: a small population job plus curves
    pop_path = workdir / "population.csv"
    generate_population(load_bundled_network(), 2_000, seed=99).to_csv(pop_path)
    job = client.post("/v1/allocations", json={
        "population": str(pop_path),
        "limits": {"FIT": 40, "sDNA": 15},
        "runs": 5, "seed": 3,
    }).json()
    for _ in range(200):
        status = client.get(f"/v1/allocations/{job['jobId']}").json()
        if status["status"] in ("done", "failed"):
            break
        time.sleep(0.05)
    dump("allocation_job.json", {"submitted": job, "final": status})
    dump("curves_fit_sdna_dev2.json",
         client.get("/v1/curves/vinfo",
                    params={"methods": "FIT,sDNA", "points": 25,
                            "pmin": 0.001, "pmax": 0.55}).json())
    dump("device_dev1.json",
         client.post("/v1/devices/benchmark", json={
             "device": {"id": "Dev1", "sensitivity": 0.8, "specificity": 0.85,
                        "unitCost": 250, "comfort": 2}}).json())


if __name__ == "__main__":
    main()
