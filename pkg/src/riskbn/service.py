"""HTTP service for the what-if workbench.

Sessions are in-memory and expire after an idle TTL.  Evidence mutations are
serialized per session; reads of an unchanged session run concurrently.  All
report payloads go through the same canonical serializer as the CLI, so the
two surfaces return byte-identical JSON for identical inputs.

Endpoints (JSON bodies, versioned under /v1):
  POST   /v1/sessions                     create a session from a scenario config
  PUT    /v1/sessions/{id}/evidence       set/replace evidence values
  GET    /v1/sessions/{id}/posteriors     query marginals (?nodes=a,b,c)
  GET    /v1/sessions/{id}/report         full assessment report
  DELETE /v1/sessions/{id}                drop the session
  POST   /v1/rapex/assess                 RAPEX baseline verdict
  GET    /v1/scenarios, /v1/scenarios/{name}   bundled example scenario files
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse

from . import infer, rapex
from .discretize import DiscreteSpace
from .errors import BadSupport, ImpossibleEvidence, InvalidConfig, RiskBnError, UnknownNode
from .model import ScenarioConfig, assess, build_product_risk_bn, scenario_binning, scenario_evidence
from .report import canonical_json


@dataclass
class Session:
    session_id: str
    config: ScenarioConfig
    compiled: infer.CompiledModel
    bins: int
    count_bins: int
    evidence: dict[str, Any] = field(default_factory=dict)
    last_report: dict | None = None
    touched: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def touch(self):
        self.touched = time.monotonic()


class SessionStore:
    def __init__(self, ttl: float):
        self.ttl = ttl
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def purge(self):
        now = time.monotonic()
        with self._lock:
            dead = [k for k, s in self._sessions.items() if now - s.touched > self.ttl]
            for k in dead:
                del self._sessions[k]

    def add(self, session: Session):
        with self._lock:
            self._sessions[session.session_id] = session

    def get(self, session_id: str) -> Session | None:
        self.purge()
        with self._lock:
            s = self._sessions.get(session_id)
        if s:
            s.touch()
        return s

    def drop(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None


def _canonical_response(payload, status_code: int = 200) -> Response:
    return Response(content=canonical_json(payload), media_type="application/json", status_code=status_code)


def _space_descriptor(space) -> dict:
    if isinstance(space, DiscreteSpace):
        return {"kind": "discrete", "states": list(space.labels)}
    bins = space.bins
    return {
        "kind": "binned",
        "integer": bins.integer,
        "edges": list(bins.edges),
    }


def _posterior_payload(p: infer.Posterior) -> dict:
    out = {"node": p.node, "space": _space_descriptor(p.space), "mass": [float(x) for x in p.mass]}
    if p.moments is not None:
        m = p.moments
        out["moments"] = {"mean": m.mean, "variance": m.variance, "p5": m.p5, "p50": m.p50, "p95": m.p95}
    if isinstance(p.space, DiscreteSpace):
        out["distribution"] = {s: float(v) for s, v in zip(p.space.labels, p.mass)}
    return out


def create_app(
    default_bins: int = 100,
    default_count_bins: int = 200,
    session_ttl: float = 3600.0,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="riskbn", version="0.1.0")
    store = SessionStore(ttl=session_ttl)
    app.state.store = store

    @app.post("/v1/sessions")
    def create_session(body: dict):
        try:
            config = ScenarioConfig.from_json(body)
            model = build_product_risk_bn(config)
            compiled = infer.compile_model(model, scenario_binning(config, default_bins, default_count_bins))
        except (InvalidConfig, RiskBnError) as exc:
            return _canonical_response({"detail": str(exc), "validation": [str(exc)]}, 422)
        session = Session(
            session_id=uuid.uuid4().hex,
            config=config,
            compiled=compiled,
            bins=default_bins,
            count_bins=default_count_bins,
        )
        store.add(session)
        nodes = {n.id: _space_descriptor(n.space) for n in compiled.nodes}
        return _canonical_response(
            {
                "session_id": session.session_id,
                "product": config.product,
                "validation": [],
                "nodes": nodes,
                "scenario_evidence": {k: _evidence_json(v) for k, v in scenario_evidence(config).items()},
            },
            201,
        )

    @app.put("/v1/sessions/{session_id}/evidence")
    def put_evidence(session_id: str, body: dict):
        session = store.get(session_id)
        if session is None:
            return _canonical_response({"detail": "unknown session"}, 404)
        with session.lock:
            candidate = dict(session.evidence)
            for node_id, raw in body.items():
                if raw is None:
                    candidate.pop(node_id, None)
                    continue
                if not session.compiled.has_node(node_id):
                    return _canonical_response({"detail": f"unknown node: {node_id}"}, 422)
                try:
                    candidate[node_id] = infer.coerce_evidence(session.compiled.node(node_id).space, raw)
                except (BadSupport, ValueError, TypeError) as exc:
                    return _canonical_response({"detail": f"{node_id}: {exc}"}, 422)
            merged = dict(scenario_evidence(session.config))
            merged.update(candidate)
            try:
                infer.evidence_log_probability(session.compiled, merged)
            except ImpossibleEvidence as exc:
                return _canonical_response({"detail": str(exc)}, 409)
            except UnknownNode as exc:
                return _canonical_response({"detail": str(exc)}, 422)
            session.evidence = candidate
            session.last_report = None
            affected = sorted(set(session.compiled.order) - set(merged))
        return _canonical_response({"affected": affected, "evidence": {k: _evidence_json(v) for k, v in candidate.items()}})

    @app.get("/v1/sessions/{session_id}/posteriors")
    def get_posteriors(session_id: str, nodes: str = ""):
        session = store.get(session_id)
        if session is None:
            return _canonical_response({"detail": "unknown session"}, 404)
        query = [n for n in (nodes.split(",") if nodes else []) if n]
        if not query:
            query = list(session.compiled.order)
        merged = dict(scenario_evidence(session.config))
        merged.update(session.evidence)
        try:
            posteriors = infer.posterior(session.compiled, merged, query)
        except UnknownNode as exc:
            return _canonical_response({"detail": str(exc)}, 422)
        except ImpossibleEvidence as exc:
            return _canonical_response({"detail": str(exc)}, 409)
        return _canonical_response({"posteriors": [_posterior_payload(p) for p in posteriors]})

    @app.get("/v1/sessions/{session_id}/report")
    def get_report(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _canonical_response({"detail": "unknown session"}, 404)
        with session.lock:
            if session.last_report is None:
                try:
                    report = assess(
                        session.config,
                        bins=session.bins,
                        count_bins=session.count_bins,
                        extra_evidence=session.evidence,
                        compiled=session.compiled,
                    )
                except ImpossibleEvidence as exc:
                    return _canonical_response({"detail": str(exc)}, 409)
                session.last_report = report.to_dict()
            payload = session.last_report
        return _canonical_response(payload)

    @app.delete("/v1/sessions/{session_id}")
    def delete_session(session_id: str):
        if not store.drop(session_id):
            return _canonical_response({"detail": "unknown session"}, 404)
        return Response(status_code=204)

    @app.post("/v1/rapex/assess")
    def rapex_assess(body: dict):
        try:
            scenario = rapex.InjuryScenario.from_json(body)
            assessment = rapex.assess_scenario(scenario)
        except (RiskBnError, KeyError, TypeError, ValueError) as exc:
            return _canonical_response({"detail": str(exc)}, 422)
        payload = assessment.to_json()
        if body.get("sensitivity"):
            opts = body["sensitivity"] if isinstance(body["sensitivity"], dict) else {}
            stability = rapex.sensitivity_analysis(
                scenario,
                factor=float(opts.get("factor", 2.0)),
                severity_shift=int(opts.get("shift", 1)),
            )
            payload["sensitivity"] = stability.to_json()
        return _canonical_response(payload)

    @app.get("/v1/scenarios")
    def list_scenarios():
        names = sorted(
            p.name.removesuffix(".json")
            for p in resources.files("riskbn.scenarios").iterdir()
            if p.name.endswith(".json")
        )
        return _canonical_response({"scenarios": names})

    @app.get("/v1/scenarios/{name}")
    def get_scenario(name: str):
        safe = "".join(c for c in name if c.isalnum() or c in "_-")
        path = resources.files("riskbn.scenarios").joinpath(f"{safe}.json")
        try:
            with path.open("r") as fh:
                return JSONResponse(json.load(fh))
        except FileNotFoundError:
            return _canonical_response({"detail": f"unknown scenario {name!r}"}, 404)

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="workbench")

    return app


def _evidence_json(v) -> dict:
    if isinstance(v, infer.DiscreteState):
        return {"state": v.state}
    if isinstance(v, infer.Point):
        return {"point": v.value}
    if isinstance(v, infer.Interval):
        return {"interval": [v.lo, v.hi]}
    return {"value": v}
