"""HTTP facade over the engine for the companion UI and external clients.

Every endpoint performs the same computation as the corresponding library
call; no arithmetic lives here.  Elicitation sessions are strictly
sequential per session id; allocation jobs run on a bounded worker pool
and their results are persisted to the working directory so finished jobs
survive a restart in read-only form.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .bn import (
    DiscreteNetwork,
    EvidenceContradictionError,
    PatientEvidence,
    UnknownStateError,
    UnknownVariableError,
    load_bundled_network,
    load_network,
    posterior_crc,
)
from .infovalue import DegeneratePriorError, curve_table, entropy
from .policy import dominance_filter, recommend
from .population import (
    allocate,
    benchmark_device,
    load_population,
    simulate,
)
from .preferences import (
    CalibrationError,
    ElicitationError,
    PairAnswer,
    PairOption,
    PreferenceParams,
    calibrate_utility,
    default_params,
    robustify_lambda,
)
from .screening import CatalogError, InterventionCatalog, InterventionSpec, default_catalog

_QUESTION_BANK = Path(__file__).parent / "data" / "question_bank.json"


@dataclass
class ElicitationState:
    """One interview: pending questions, accumulated answers, final result."""

    bank: dict
    answers: list[PairAnswer] = field(default_factory=list)
    next_index: int = 0
    pe_value: float | None = None
    params: PreferenceParams | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def total_questions(self) -> int:
        return len(self.bank["pairs"]) + 1   # pairwise questions plus the PE one

    @property
    def complete(self) -> bool:
        return self.pe_value is not None

    def question(self, index: int) -> dict:
        pairs = self.bank["pairs"]
        if index < len(pairs):
            return {"index": index, "kind": "pair", **pairs[index]}
        return {"index": index, "kind": "pe", **self.bank["pe"]}

    def lambdas(self, lambda4: float = 7.0) -> dict[int, float]:
        by_level: dict[int, list[float]] = {}
        for ans in self.answers:
            by_level.setdefault(ans.comfort, []).append(ans.lambda_estimate())
        out = {lvl: robustify_lambda(vals) for lvl, vals in sorted(by_level.items())}
        out.setdefault(4, lambda4)
        return out


@dataclass
class AllocationJob:
    id: str
    status: str = "queued"        # queued | running | done | failed
    error: str | None = None
    result: dict | None = None


class SessionStore:
    """Thread-safe registries for elicitation sessions and allocation jobs."""

    def __init__(self) -> None:
        self.sessions: dict[str, ElicitationState] = {}
        self.jobs: dict[str, AllocationJob] = {}
        self.lock = threading.Lock()

    def new_session(self, bank: dict) -> tuple[str, ElicitationState]:
        sid = uuid.uuid4().hex[:12]
        state = ElicitationState(bank)
        with self.lock:
            self.sessions[sid] = state
        return sid, state

    def session(self, sid: str) -> ElicitationState:
        with self.lock:
            state = self.sessions.get(sid)
        if state is None:
            raise HTTPException(404, f"no elicitation session {sid}")
        return state

    def new_job(self) -> AllocationJob:
        job = AllocationJob(uuid.uuid4().hex[:12])
        with self.lock:
            self.jobs[job.id] = job
        return job

    def job(self, job_id: str) -> AllocationJob | None:
        with self.lock:
            return self.jobs.get(job_id)


def _evidence_from_body(body: dict) -> PatientEvidence:
    raw = dict(body.get("evidence", {k: v for k, v in body.items()
                                     if k not in ("priorOverride", "pCrc", "topK",
                                                  "rho", "lambdas", "peValue")}))
    override = body.get("priorOverride")
    try:
        return PatientEvidence({str(k): str(v) for k, v in raw.items()},
                               None if override is None else float(override))
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc


def _params_with_overrides(base: PreferenceParams, body: dict) -> PreferenceParams:
    params = base
    lambdas = body.get("lambdas")
    if lambdas:
        merged = dict(base.lambdas)
        merged.update({int(k): float(v) for k, v in lambdas.items()})
        a, b, rho = calibrate_utility(base.best_anchor, base.worst_anchor,
                                      base.pe_point, base.pe_value, merged)
        params = PreferenceParams(merged, a, b, rho, base.best_anchor,
                                  base.worst_anchor, base.pe_point, base.pe_value,
                                  risk_neutral=(rho == 0.0))
    if body.get("rho") is not None:
        params = params.with_rho(float(body["rho"]))
    return params


def create_app(model_path: str | Path | None = None,
               catalog_path: str | Path | None = None,
               workdir: str | Path | None = None,
               workers: int | None = None) -> FastAPI:
    net: DiscreteNetwork = (load_network(model_path) if model_path
                            else load_bundled_network())
    catalog: InterventionCatalog = (InterventionCatalog.from_json(Path(catalog_path))
                                    if catalog_path else default_catalog())
    base_params = default_params()
    bank = json.loads(_QUESTION_BANK.read_text())
    store = SessionStore()
    work = Path(workdir) if workdir else None
    if work is not None:
        (work / "jobs").mkdir(parents=True, exist_ok=True)
    pool = ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1)

    app = FastAPI(title="crcscreen", version=__version__)
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.store = store

    def _persisted_job(job_id: str) -> dict | None:
        if work is None:
            return None
        path = work / "jobs" / f"{job_id}.json"
        if path.exists():
            return json.loads(path.read_text())
        return None

    @app.post("/v1/posterior")
    def post_posterior(body: dict) -> dict:
        ev = _evidence_from_body(body)
        try:
            p = posterior_crc(net, ev)
        except (UnknownVariableError, UnknownStateError) as exc:
            raise HTTPException(400, str(exc)) from exc
        except EvidenceContradictionError as exc:
            raise HTTPException(422, str(exc)) from exc
        return {"pCrc": p, "entropy": entropy(p)}

    @app.post("/v1/recommend")
    def post_recommend(body: dict) -> dict:
        params = _params_with_overrides(base_params, body)
        if body.get("pCrc") is not None:
            p = float(body["pCrc"])
        else:
            ev = _evidence_from_body(body)
            try:
                p = posterior_crc(net, ev)
            except (UnknownVariableError, UnknownStateError) as exc:
                raise HTTPException(400, str(exc)) from exc
            except EvidenceContradictionError as exc:
                raise HTTPException(422, str(exc)) from exc
        top_k = body.get("topK")
        try:
            ranked = recommend(p, catalog, params, None if top_k is None else int(top_k))
        except (ValueError, DegeneratePriorError) as exc:
            raise HTTPException(422, str(exc)) from exc
        return {"pCrc": p, "strategies": [e.to_dict() for e in ranked]}

    # -- elicitation -------------------------------------------------------

    @app.post("/v1/elicitation/sessions")
    def new_session(body: dict | None = None) -> dict:
        sid, state = store.new_session(bank)
        return {"id": sid, "totalQuestions": state.total_questions,
                "question": state.question(0)}

    @app.post("/v1/elicitation/sessions/{sid}/answers")
    def answer(sid: str, body: dict) -> dict:
        state = store.session(sid)
        with state.lock:
            index = int(body.get("questionIndex", -1))
            if state.complete:
                raise HTTPException(409, "session already complete")
            if index != state.next_index:
                raise HTTPException(
                    409, f"expected answer to question {state.next_index}, got {index}")
            pairs = state.bank["pairs"]
            if index < len(pairs):
                q = pairs[index]
                try:
                    ans = PairAnswer(
                        comfort=int(q["comfort"]),
                        option_a=PairOption(q["optionA"]["id"], float(q["optionA"]["info"]),
                                            q["optionA"]["cost"]),
                        option_b=PairOption(q["optionB"]["id"], float(q["optionB"]["info"]),
                                            q["optionB"]["cost"]),
                        preferred=str(body["preferred"]),
                        indifference_cost=float(body["indifferenceCost"]),
                    )
                    if ans.preferred not in (ans.option_a.id, ans.option_b.id):
                        raise HTTPException(422, f"unknown option {ans.preferred!r}")
                    estimate = ans.lambda_estimate()
                    if estimate <= 0:
                        raise ElicitationError(
                            f"answer implies a non-positive comfort weight ({estimate:.4f})")
                except KeyError as exc:
                    raise HTTPException(422, f"answer misses field {exc}") from exc
                except ElicitationError as exc:
                    raise HTTPException(422, str(exc)) from exc
                state.answers.append(ans)
                state.next_index += 1
                return {"accepted": index, "lambdaEstimate": estimate,
                        "question": state.question(state.next_index)}
            # PE question
            try:
                pe_value = float(body["peValue"])
                lambdas = state.lambdas()
                pe = state.bank["pe"]
                a, b, rho = calibrate_utility(tuple(pe["bestAnchor"]), tuple(pe["worstAnchor"]),
                                              tuple(pe["point"]), pe_value, lambdas)
            except KeyError as exc:
                raise HTTPException(422, f"answer misses field {exc}") from exc
            except (CalibrationError, ElicitationError, ValueError) as exc:
                raise HTTPException(422, str(exc)) from exc
            state.pe_value = pe_value
            state.params = PreferenceParams(lambdas, a, b, rho,
                                            tuple(pe["bestAnchor"]), tuple(pe["worstAnchor"]),
                                            tuple(pe["point"]), pe_value,
                                            risk_neutral=(rho == 0.0))
            state.next_index += 1
            return {"accepted": index, "complete": True}

    @app.get("/v1/elicitation/sessions/{sid}/result")
    def result(sid: str) -> dict:
        state = store.session(sid)
        with state.lock:
            if not state.complete:
                raise HTTPException(
                    404, f"session incomplete: {state.next_index}/{state.total_questions} answered")
            estimates: dict[int, list[float]] = {}
            for ans in state.answers:
                estimates.setdefault(ans.comfort, []).append(ans.lambda_estimate())
            return {
                "lambdas": {str(k): v for k, v in state.params.lambdas.items()},
                "estimates": {str(k): v for k, v in estimates.items()},
                "a": state.params.a, "b": state.params.b, "rho": state.params.rho,
            }

    # -- allocation jobs ---------------------------------------------------

    def _run_allocation(job: AllocationJob, body: dict) -> None:
        job.status = "running"
        try:
            population = load_population(body["population"], net)
            params = _params_with_overrides(base_params, body)
            limits = body.get("limits") or None
            if limits is not None:
                limits = {str(k): int(v) for k, v in limits.items()}
            allocation = allocate(population, catalog, params, limits)
            runs = int(body.get("runs", 20))
            seed = int(body.get("seed", 0))
            report = simulate(population, allocation, catalog, runs, seed)
            job.result = {
                "counts": allocation.count_table(catalog),
                "exhausted": sorted(allocation.exhausted),
                "simulation": report.to_dict(),
            }
            job.status = "done"
            if work is not None:
                path = work / "jobs" / f"{job.id}.json"
                path.write_text(json.dumps({"status": "done", "result": job.result}))
        except Exception as exc:  # surfaced via job status
            job.status = "failed"
            job.error = f"{type(exc).__name__}: {exc}"

    @app.post("/v1/allocations")
    def post_allocation(body: dict) -> dict:
        path = body.get("population")
        if not path or not Path(path).exists():
            raise HTTPException(404, f"population file not found: {path!r}")
        job = store.new_job()
        pool.submit(_run_allocation, job, body)
        return {"jobId": job.id, "status": job.status}

    @app.get("/v1/allocations/{job_id}")
    def get_allocation(job_id: str) -> dict:
        job = store.job(job_id)
        if job is None:
            persisted = _persisted_job(job_id)
            if persisted is None:
                raise HTTPException(404, f"no allocation job {job_id}")
            return {"jobId": job_id, **persisted}
        out = {"jobId": job.id, "status": job.status}
        if job.status == "done":
            out["result"] = job.result
        if job.status == "failed":
            out["error"] = job.error
        return out

    # -- devices and curves --------------------------------------------------

    @app.post("/v1/devices/benchmark")
    def post_benchmark(body: dict) -> dict:
        try:
            spec = InterventionSpec.from_dict(body["device"])
        except (KeyError, CatalogError) as exc:
            raise HTTPException(422, f"bad device spec: {exc}") from exc
        population_path = body.get("population")
        try:
            if population_path:
                if not Path(population_path).exists():
                    raise HTTPException(404, f"population file not found: {population_path!r}")
                population = load_population(population_path, net)
                limits = body.get("limits") or None
                if limits is not None:
                    limits = {str(k): int(v) for k, v in limits.items()}
                findings, allocation, report = benchmark_device(
                    spec, population, limits, catalog, base_params,
                    runs=int(body.get("runs", 20)), seed=int(body.get("seed", 7)))
                counts = allocation.count_table(catalog.with_device(spec))
                simulation = report.to_dict()
            else:
                findings = dominance_filter(catalog.with_device(spec))
                counts = None
                simulation = None
        except CatalogError as exc:
            raise HTTPException(422, str(exc)) from exc
        mine = [f for f in findings if f.intervention == spec.id and f.kind == "dominated"]
        out = {
            "device": spec.to_dict(),
            "dominated": bool(mine),
            "by": mine[0].by if mine else None,
            "findings": [f.to_dict() for f in findings],
        }
        if counts is not None:
            out["counts"] = counts
            out["simulation"] = simulation
        return out

    @app.get("/v1/curves/vinfo")
    def get_curves(methods: str = "", points: int = 101,
                   pmin: float = 0.001, pmax: float = 0.999) -> dict:
        ids = [m for m in methods.split(",") if m]
        if not ids:
            raise HTTPException(400, "methods must name at least one intervention")
        specs = []
        for mid in ids:
            if mid not in catalog:
                raise HTTPException(400, f"unknown intervention {mid!r}")
            specs.append(catalog[mid])
        if points < 2 or not (0.0 < pmin < pmax < 1.0):
            raise HTTPException(422, "need points >= 2 and 0 < pmin < pmax < 1")
        grid = [pmin + (pmax - pmin) * i / (points - 1) for i in range(points)]
        table = curve_table(specs, grid)
        return {mid: list(zip(table["p"], table[mid])) for mid in ids}

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "model": net.target, "version": __version__}

    return app


__all__ = ["create_app", "SessionStore", "ElicitationState", "AllocationJob"]
