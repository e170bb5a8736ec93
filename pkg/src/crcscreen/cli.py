"""Batch command-line interface.

Results go to stdout in human-readable form or to ``--out`` files as CSV
or JSON.  Numbers are locale-free: probabilities print with six decimals,
euro amounts with two.  Exit codes: 0 success, 1 usage error, 2 validation
error, 3 runtime failure.  All randomized commands take ``--seed`` and are
bit-reproducible under it.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .bn import (
    EvidenceContradictionError,
    ModelFormatError,
    ModelValidationError,
    PatientEvidence,
    UnknownStateError,
    UnknownVariableError,
    bundled_model_path,
    load_network,
    posterior_crc,
)
from .infovalue import DegeneratePriorError, UnreachableResultError, curve_table, entropy
from .policy import dominance_filter, recommend
from .population import (
    TABLE9_LIMITS,
    PopulationError,
    allocate,
    generate_population,
    load_population,
    national_baseline,
    simulate,
    sweep_lambda,
    sweep_pe,
)
from .preferences import (
    CalibrationError,
    ElicitationError,
    calibrate_utility,
    default_params,
    replay_transcript,
)
from .screening import CatalogError, InterventionCatalog, InterventionSpec, default_catalog

_BENCHMARK_PROFILE = Path(__file__).parent / "data" / "benchmark_profile.json"

_VALIDATION_ERRORS = (
    ModelFormatError, ModelValidationError, UnknownVariableError, UnknownStateError,
    EvidenceContradictionError, DegeneratePriorError, UnreachableResultError,
    CatalogError, ElicitationError, CalibrationError, PopulationError, ValueError,
)


def _prob(x: float) -> str:
    return f"{x:.6f}"


def _euro(x: float) -> str:
    return f"{x:.2f}"


def _load_model(model: str):
    if model in ("bundled", ""):
        return load_network(bundled_model_path())
    return load_network(Path(model))


def _load_catalog(catalog: str | None) -> InterventionCatalog:
    if catalog is None:
        return default_catalog()
    return InterventionCatalog.from_json(Path(catalog))


def _load_profile(profile: str | None, evidence: tuple[str, ...],
                  override: float | None) -> PatientEvidence:
    assignments: dict[str, str] = {}
    if profile:
        path = _BENCHMARK_PROFILE if profile == "benchmark" else Path(profile)
        assignments.update(json.loads(path.read_text()))
    for item in evidence:
        if "=" not in item:
            raise click.UsageError(f"evidence must look like name=state, got {item!r}")
        key, _, value = item.partition("=")
        assignments[key] = value
    return PatientEvidence(assignments, override)


def _load_limits(limits: str | None) -> dict | None:
    if limits is None or limits == "none":
        return None
    if limits == "table9":
        return dict(TABLE9_LIMITS)
    return {str(k): (None if v is None else int(v))
            for k, v in json.loads(Path(limits).read_text()).items()}


def _params_from_options(rho: float | None, lambda_overrides: tuple[str, ...]):
    overrides = {}
    for item in lambda_overrides:
        level, _, value = item.partition("=")
        overrides[int(level)] = float(value)
    if overrides:
        from .preferences import DEFAULT_LAMBDAS, PreferenceParams
        lambdas = dict(DEFAULT_LAMBDAS)
        lambdas.update(overrides)
        a, b, r = calibrate_utility(lambdas=lambdas)
        params = PreferenceParams(lambdas, a, b, r, risk_neutral=(r == 0.0))
    else:
        params = default_params()
    if rho is not None:
        params = params.with_rho(rho)
    return params


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


@click.group(name="crcscreen")
@click.option("--config", type=click.Path(exists=True), default=None,
              help="JSON file with default option values per subcommand.")
@click.pass_context
def cli(ctx: click.Context, config: str | None) -> None:
    """Personalized CRC screening decision support."""
    if config:
        ctx.default_map = json.loads(Path(config).read_text())


@cli.command()
@click.option("--model", default="bundled", show_default=True)
@click.option("--profile", default=None, help="JSON evidence file, or 'benchmark'.")
@click.option("--evidence", "-e", multiple=True, help="Extra name=state assignments.")
@click.option("--override", type=float, default=None, help="Exogenous p(CRC).")
def infer(model: str, profile: str | None, evidence: tuple[str, ...],
          override: float | None) -> None:
    """Posterior CRC probability for a patient profile."""
    net = _load_model(model)
    ev = _load_profile(profile, evidence, override)
    p = posterior_crc(net, ev)
    click.echo(f"pCrc {_prob(p)}")
    click.echo(f"entropy {_prob(entropy(p))}")


@cli.command(name="recommend")
@click.option("--model", default="bundled", show_default=True)
@click.option("--catalog", default=None, type=click.Path(exists=True))
@click.option("--profile", default=None)
@click.option("--evidence", "-e", multiple=True)
@click.option("--override", type=float, default=None)
@click.option("--p-crc", type=float, default=None, help="Skip inference; use this risk.")
@click.option("--rho", type=float, default=None, help="Risk-aversion override.")
@click.option("--set-lambda", multiple=True, help="Comfort weight override, level=value.")
@click.option("--top", type=int, default=None)
@click.option("--out", default=None, help="Write CSV instead of a table.")
def recommend_cmd(model: str, catalog: str | None, profile: str | None,
                  evidence: tuple[str, ...], override: float | None,
                  p_crc: float | None, rho: float | None,
                  set_lambda: tuple[str, ...], top: int | None, out: str | None) -> None:
    """Ranked screening strategies for a patient."""
    cat = _load_catalog(catalog)
    params = _params_from_options(rho, set_lambda)
    if p_crc is None:
        net = _load_model(model)
        p_crc = posterior_crc(net, _load_profile(profile, evidence, override))
    ranked = recommend(p_crc, cat, params, top)
    rows = [("rank", "strategy", "eu", "expected_cost", "expected_info")]
    for i, ev_ in enumerate(ranked, 1):
        rows.append((str(i), ev_.strategy.label(), _prob(ev_.expected_utility),
                     _euro(ev_.expected_cost), _prob(ev_.expected_info)))
    if out:
        with open(out, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
    else:
        click.echo(f"pCrc {_prob(p_crc)}")
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        for row in rows:
            click.echo("  ".join(c.ljust(w) for c, w in zip(row, widths)))


@cli.command()
@click.option("--transcript", required=True, type=click.Path(exists=True))
@click.option("--lambda4", type=float, default=7.0, show_default=True,
              help="Fill for the comfort level that has no pair to compare.")
@click.option("--out", default=None)
def elicit(transcript: str, lambda4: float, out: str | None) -> None:
    """Replay a recorded elicitation interview to comfort weights."""
    lambdas, params, estimates = replay_transcript(transcript, lambda4)
    lines = [f"lambda_{k} {v:.4f}" for k, v in sorted(lambdas.items())]
    for level, ests in sorted(estimates.items()):
        lines.append(f"estimates_{level} " + " ".join(f"{e:.4f}" for e in ests))
    if params is not None:
        lines += [f"a {params.a:.6f}", f"b {params.b:.6f}", f"rho {params.rho:.6f}"]
    _write_or_print("\n".join(lines) + "\n", out)


@cli.command()
@click.option("--best-cost", type=float, default=0.0, show_default=True)
@click.option("--best-info", type=float, default=15.75, show_default=True)
@click.option("--worst-cost", type=float, default=8131.71, show_default=True)
@click.option("--worst-info", type=float, default=0.0, show_default=True)
@click.option("--pe-cost", type=float, default=50.0, show_default=True)
@click.option("--pe-info", type=float, default=4.1, show_default=True)
@click.option("--pe-value", type=float, default=0.7, show_default=True)
def calibrate(best_cost: float, best_info: float, worst_cost: float, worst_info: float,
              pe_cost: float, pe_info: float, pe_value: float) -> None:
    """Solve the utility constants from anchors and a probability equivalent."""
    a, b, rho = calibrate_utility((best_cost, best_info), (worst_cost, worst_info),
                                  (pe_cost, pe_info), pe_value)
    click.echo(f"a {a:.6f}")
    click.echo(f"b {b:.6f}")
    click.echo(f"rho {rho:.6f}")


@cli.command(name="gen-population")
@click.option("--model", default="bundled", show_default=True)
@click.option("--size", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def gen_population(model: str, size: int, seed: int, out: str) -> None:
    """Forward-sample a synthetic population (with true CRC states) to CSV."""
    net = _load_model(model)
    population = generate_population(net, size, seed)
    population.to_csv(out)
    click.echo(f"wrote {size} members to {out} "
               f"(prevalence {_prob(float(population.true_crc.mean()))})")


@cli.command(name="allocate")
@click.option("--model", default="bundled", show_default=True)
@click.option("--catalog", default=None, type=click.Path(exists=True))
@click.option("--population", required=True, type=click.Path(exists=True))
@click.option("--limits", default=None, help="'table9', 'none', or a JSON file.")
@click.option("--rho", type=float, default=None)
@click.option("--set-lambda", multiple=True)
@click.option("--mode", type=click.Choice(["static", "dynamic"]), default="static",
              show_default=True)
@click.option("--out", default=None)
def allocate_cmd(model: str, catalog: str | None, population: str, limits: str | None,
                 rho: float | None, set_lambda: tuple[str, ...], mode: str,
                 out: str | None) -> None:
    """EU-ordered greedy assignment of screening methods under capacity limits."""
    net = _load_model(model)
    cat = _load_catalog(catalog)
    pop = load_population(population, net)
    params = _params_from_options(rho, set_lambda)
    allocation = allocate(pop, cat, params, _load_limits(limits), mode)
    table = allocation.count_table(cat)
    doc = {"counts": table, "exhausted": sorted(allocation.exhausted)}
    _write_or_print(json.dumps(doc, indent=2) + "\n", out)


@cli.command(name="simulate")
@click.option("--model", default="bundled", show_default=True)
@click.option("--catalog", default=None, type=click.Path(exists=True))
@click.option("--population", required=True, type=click.Path(exists=True))
@click.option("--limits", default=None)
@click.option("--baseline-band", default=None,
              help="Comma-separated age states: simulate the age-based policy instead.")
@click.option("--baseline-test", default="FIT", show_default=True)
@click.option("--runs", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--rho", type=float, default=None)
@click.option("--set-lambda", multiple=True)
@click.option("--out", default=None)
def simulate_cmd(model: str, catalog: str | None, population: str, limits: str | None,
                 baseline_band: str | None, baseline_test: str, runs: int, seed: int,
                 threads: int, rho: float | None, set_lambda: tuple[str, ...],
                 out: str | None) -> None:
    """Monte Carlo outcome simulation of an allocation policy."""
    net = _load_model(model)
    cat = _load_catalog(catalog)
    pop = load_population(population, net)
    params = _params_from_options(rho, set_lambda)
    if baseline_band:
        allocation = national_baseline(pop, baseline_band.split(","), baseline_test)
    else:
        allocation = allocate(pop, cat, params, _load_limits(limits))
    report = simulate(pop, allocation, cat, runs, seed, threads)
    doc = {"counts": allocation.count_table(cat), **report.to_dict()}
    _write_or_print(json.dumps(doc, indent=2) + "\n", out)


@cli.command(name="benchmark-device")
@click.option("--device", required=True,
              help="JSON file or inline JSON with the InterventionSpec fields.")
@click.option("--model", default="bundled", show_default=True)
@click.option("--catalog", default=None, type=click.Path(exists=True))
@click.option("--population", default=None, type=click.Path(exists=True))
@click.option("--limits", default=None)
@click.option("--runs", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--out", default=None)
def benchmark_device_cmd(device: str, model: str, catalog: str | None,
                         population: str | None, limits: str | None, runs: int,
                         seed: int, out: str | None) -> None:
    """Dominance screen for a new device, plus re-allocation when a population is given."""
    raw = device if device.lstrip().startswith("{") else Path(device).read_text()
    spec = InterventionSpec.from_dict(json.loads(raw))
    cat = _load_catalog(catalog)
    extended = cat.with_device(spec)
    findings = dominance_filter(extended)
    mine = [f for f in findings if f.intervention == spec.id and f.kind == "dominated"]
    doc = {"device": spec.to_dict(), "dominated": bool(mine),
           "by": mine[0].by if mine else None,
           "findings": [f.to_dict() for f in findings]}
    if population:
        from .population import benchmark_device as run_benchmark
        net = _load_model(model)
        pop = load_population(population, net)
        _, allocation, report = run_benchmark(spec, pop, _load_limits(limits), cat,
                                              default_params(), runs, seed)
        doc["counts"] = allocation.count_table(extended)
        doc["simulation"] = report.to_dict()
    _write_or_print(json.dumps(doc, indent=2) + "\n", out)


@cli.command()
@click.option("--methods", required=True, help="Comma-separated intervention ids.")
@click.option("--points", type=int, default=101, show_default=True)
@click.option("--pmin", type=float, default=0.001, show_default=True)
@click.option("--pmax", type=float, default=0.999, show_default=True)
@click.option("--catalog", default=None, type=click.Path(exists=True))
@click.option("--out", default=None)
def curves(methods: str, points: int, pmin: float, pmax: float,
           catalog: str | None, out: str | None) -> None:
    """Single-test information curves over p(CRC), as CSV (p, one column per method)."""
    ids = [m for m in methods.split(",") if m]
    if not ids:
        raise click.UsageError("--methods must name at least one intervention")
    if points < 2 or not 0.0 < pmin < pmax < 1.0:
        raise ValueError("need points >= 2 and 0 < pmin < pmax < 1")
    cat = _load_catalog(catalog)
    grid = [pmin + (pmax - pmin) * i / (points - 1) for i in range(points)]
    table = curve_table([cat[i] for i in ids], grid)
    lines = [",".join(["p"] + ids)]
    for i in range(points):
        lines.append(",".join([_prob(table["p"][i])] + [_prob(table[m][i]) for m in ids]))
    _write_or_print("\n".join(lines) + "\n", out)


@cli.command(name="sweep-pe")
@click.option("--model", default="bundled", show_default=True)
@click.option("--population", required=True, type=click.Path(exists=True))
@click.option("--pe-info-grid", required=True, help="Comma-separated info coordinates.")
@click.option("--pe-cost-grid", required=True, help="Comma-separated cost coordinates.")
@click.option("--limits", default=None)
@click.option("--out", default=None)
def sweep_pe_cmd(model: str, population: str, pe_info_grid: str, pe_cost_grid: str,
                 limits: str | None, out: str | None) -> None:
    """Allocation counts across a grid of probability-equivalent reference points."""
    net = _load_model(model)
    pop = load_population(population, net)
    grid_info = [float(x) for x in pe_info_grid.split(",") if x]
    grid_cost = [float(x) for x in pe_cost_grid.split(",") if x]
    results = sweep_pe(pop, grid_info, grid_cost, default_catalog(), default_params(),
                       _load_limits(limits))
    _write_or_print(json.dumps(results, indent=2) + "\n", out)


@cli.command(name="sweep-lambda")
@click.option("--model", default="bundled", show_default=True)
@click.option("--population", required=True, type=click.Path(exists=True))
@click.option("--set", "overrides", multiple=True, required=True,
              help="Comfort weight override, level=value (repeatable).")
@click.option("--limits", default=None)
@click.option("--out", default=None)
def sweep_lambda_cmd(model: str, population: str, overrides: tuple[str, ...],
                     limits: str | None, out: str | None) -> None:
    """Allocation counts under modified comfort weights."""
    net = _load_model(model)
    pop = load_population(population, net)
    parsed = {}
    for item in overrides:
        level, _, value = item.partition("=")
        parsed[int(level)] = float(value)
    result = sweep_lambda(pop, parsed, default_catalog(), default_params(),
                          _load_limits(limits))
    doc = {"lambdas": {str(k): v for k, v in result["lambdas"].items()},
           "counts": result["counts"]}
    _write_or_print(json.dumps(doc, indent=2) + "\n", out)


@cli.command()
@click.option("--model", default=None, type=click.Path(exists=True), envvar="CRCSCREEN_MODEL",
              help="Model file (default: bundled example model).")
@click.option("--catalog", default=None, type=click.Path(exists=True), envvar="CRCSCREEN_CATALOG")
@click.option("--port", type=int, default=8000, show_default=True, envvar="CRCSCREEN_PORT")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="CRCSCREEN_HOST")
@click.option("--workdir", default=None, type=click.Path(), envvar="CRCSCREEN_WORKDIR")
@click.option("--workers", type=int, default=None, envvar="CRCSCREEN_WORKERS",
              help="Allocation worker pool size (default: CPU count).")
def serve(model: str | None, catalog: str | None, port: int, host: str,
          workdir: str | None, workers: int | None) -> None:
    """Run the HTTP service consumed by the companion UI."""
    import uvicorn

    from .service import create_app
    app = create_app(model, catalog, workdir, workers)
    uvicorn.run(app, host=host, port=port)


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(2)
    except Exception as exc:  # runtime failures
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
