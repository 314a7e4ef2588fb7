"""Command-line interface: assess scenarios, validate inputs, run the RAPEX
baseline, and serve the HTTP API.

Exit codes: 0 success, 2 validation/input failure, 3 inference failure.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import graph, rapex
from .errors import DegenerateWeights, ImpossibleEvidence, InvalidConfig, RiskBnError
from .model import ScenarioConfig, assess, build_product_risk_bn
from .report import canonical_json, render_table

EXIT_VALIDATION = 2
EXIT_INFERENCE = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_json(path: str) -> dict:
    if not os.path.exists(path):
        _fail(EXIT_VALIDATION, f"file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        _fail(EXIT_VALIDATION, f"{path}: invalid JSON ({exc})")


@click.group()
def main():
    """Product risk assessment on Bayesian networks, with a RAPEX baseline."""


@main.command(name="assess")
@click.argument("scenario", type=str)
@click.option("--bins", default=100, show_default=True, help="bins per continuous node")
@click.option("--count-bins", default=200, show_default=True, help="max ranges per count node")
@click.option("--seed", default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="json", show_default=True)
@click.option("--out", type=str, default=None, help="write the report here instead of stdout")
@click.option("--compare-rapex", is_flag=True, help="append the RAPEX verdict for the assessed major-injury probability")
@click.option("--severity", default=3, show_default=True, help="severity level for --compare-rapex")
def assess_cmd(scenario, bins, count_bins, seed, fmt, out, compare_rapex, severity):
    """Assess a scenario file and emit the report."""
    doc = _load_json(scenario)
    try:
        config = ScenarioConfig.from_json(doc)
    except InvalidConfig as exc:
        _fail(EXIT_VALIDATION, str(exc))
    try:
        report = assess(config, bins=bins, count_bins=count_bins, seed=seed)
    except (ImpossibleEvidence, DegenerateWeights) as exc:
        _fail(EXIT_INFERENCE, str(exc))
    except RiskBnError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    payload = report.to_dict()
    if compare_rapex:
        if severity not in (1, 2, 3, 4):
            _fail(EXIT_VALIDATION, f"severity {severity} not in 1..4")
        p_major = report.moments["p_major_injury"].mean
        scenario_obj = rapex.InjuryScenario(
            description=f"{config.product}: assessed mean probability of a major injury",
            steps=(("mean probability of a major injury", max(p_major, 1e-300)),),
            severity=severity,
        )
        verdict = rapex.assess_scenario(scenario_obj)
        payload["rapex_comparison"] = {
            "severity": severity,
            "probability": verdict.total_probability,
            "band": verdict.band_label,
            "risk_class": verdict.risk_class,
            "bn_risk_level_mode": report.risk_level_mode,
            "bn_low_mass": report.distributions["risk_level"]["very-low"]
            + report.distributions["risk_level"]["low"],
        }
    text = canonical_json(payload) + "\n" if fmt == "json" else render_table(payload)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command(name="validate")
@click.argument("path", type=str)
def validate_cmd(path):
    """Validate a scenario config or a model JSON document."""
    doc = _load_json(path)
    if isinstance(doc, dict) and "nodes" in doc and "edges" in doc:
        try:
            model = graph.model_from_json(doc)
        except (KeyError, TypeError, ValueError) as exc:
            _fail(EXIT_VALIDATION, f"bad model document: {exc}")
        report = graph.validate(model)
        if report.ok():
            click.echo(f"ok: model with {len(model.nodes)} nodes, {len(model.edges)} edges")
            return
        for finding in report:
            click.echo(str(finding), err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        config = ScenarioConfig.from_json(doc)
        model = build_product_risk_bn(config)
        report = graph.validate(model)
    except InvalidConfig as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if not report.ok():
        for finding in report:
            click.echo(str(finding), err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(f"ok: scenario {config.product!r} builds a valid model ({len(model.nodes)} nodes)")


@main.command(name="rapex")
@click.argument("scenario", type=str)
@click.option("--factor", default=2.0, show_default=True, help="sensitivity multiplier for step probabilities")
@click.option("--shift", default=1, show_default=True, help="severity shift for the sensitivity analysis")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="json", show_default=True)
def rapex_cmd(scenario, factor, shift, fmt):
    """Run the RAPEX baseline on an injury-scenario file."""
    doc = _load_json(scenario)
    try:
        injury = rapex.InjuryScenario.from_json(doc)
        assessment = rapex.assess_scenario(injury)
        stability = rapex.sensitivity_analysis(injury, factor=factor, severity_shift=shift)
    except RiskBnError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    payload = assessment.to_json()
    payload["sensitivity"] = stability.to_json()
    if fmt == "json":
        click.echo(canonical_json(payload))
    else:
        click.echo(f"Scenario: {injury.description or '(unnamed)'}")
        click.echo(f"Total probability: {assessment.total_probability:.6g} (band {assessment.band_label})")
        click.echo(f"Severity: {injury.severity}  ->  risk class: {assessment.risk_class}")
        click.echo(
            f"Sensitivity (x/{factor:g}, severity +/-{shift}): "
            f"{'stable' if stability.stable else 'NOT stable'}; classes seen: {', '.join(stability.classes)}"
        )


@main.command(name="serve")
@click.option("--addr", default=None, help="listen address host:port (env RISKBN_ADDR)")
@click.option("--ttl", default=None, type=float, help="session idle TTL seconds (env RISKBN_SESSION_TTL)")
@click.option("--bins", default=100, show_default=True)
@click.option("--count-bins", default=200, show_default=True)
@click.option("--static", "static_dir", default=None, help="serve a built workbench UI from this directory")
def serve_cmd(addr, ttl, bins, count_bins, static_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    addr = addr or os.environ.get("RISKBN_ADDR", "127.0.0.1:8080")
    if ttl is None:
        ttl = float(os.environ.get("RISKBN_SESSION_TTL", "3600"))
    host, _, port = addr.rpartition(":")
    app = create_app(
        default_bins=bins, default_count_bins=count_bins, session_ttl=ttl, static_dir=static_dir
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()
