"""Declarative hybrid Bayesian networks.

A model is a DAG of typed nodes, each carrying a conditional-distribution
expression over its graph parents.  Models are immutable values: ``add_node``
and ``add_edge`` return new specs, and a validated spec can be shared freely
between threads.  ``validate`` never raises; it returns a report listing every
violation so callers can surface all problems at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import CycleDetected, DuplicateId, UnknownNode

_SUM_TOL = 1e-9


# ---------------------------------------------------------------------------
# Node kinds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Labelled:
    """Unordered categorical node."""

    states: tuple[str, ...]

    def state_values(self) -> tuple[float, ...] | None:
        return None


@dataclass(frozen=True)
class Boolean:
    states: tuple[str, ...] = ("no", "yes")

    def state_values(self) -> tuple[float, ...]:
        return (0.0, 1.0)


@dataclass(frozen=True)
class Ranked:
    """Ordered categorical node; state k maps to the midpoint (k+0.5)/K of [0,1]."""

    states: tuple[str, ...]

    def state_values(self) -> tuple[float, ...]:
        k = len(self.states)
        return tuple((i + 0.5) / k for i in range(k))

    def state_edges(self) -> tuple[float, ...]:
        k = len(self.states)
        return tuple(i / k for i in range(k + 1))


@dataclass(frozen=True)
class Continuous:
    lo: float
    hi: float


@dataclass(frozen=True)
class Count:
    """Integer-valued node supported on [0, n_max]."""

    n_max: int


NodeKind = Union[Labelled, Boolean, Ranked, Continuous, Count]

DISCRETE_KINDS = (Labelled, Boolean, Ranked)


# ---------------------------------------------------------------------------
# Deterministic arithmetic expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float

    def refs(self) -> set[str]:
        return set()

    def evaluate(self, env: Mapping[str, object]):
        return self.value


@dataclass(frozen=True)
class Ref:
    """Value of a parent node: bin representative, state midpoint, or 0/1 for booleans."""

    node: str

    def refs(self) -> set[str]:
        return {self.node}

    def evaluate(self, env: Mapping[str, object]):
        return env[self.node]


_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "pow": lambda a, b: a ** b,
    "min": lambda a, b: np.minimum(a, b),
    "max": lambda a, b: np.maximum(a, b),
}


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple["DetExpr", ...]

    def refs(self) -> set[str]:
        out: set[str] = set()
        for a in self.args:
            out |= a.refs()
        return out

    def evaluate(self, env: Mapping[str, object]):
        vals = [a.evaluate(env) for a in self.args]
        if self.op == "exposure":
            return _exposure(vals[0], vals[1])
        return _OPS[self.op](vals[0], vals[1])


def _exposure(p, n):
    """1 - (1-p)^n, computed stably for small p and exactly at p in {0, 1}."""
    p = np.asarray(p, dtype=float)
    n = np.asarray(n, dtype=float)
    out = -np.expm1(n * np.log1p(-np.minimum(p, 1.0 - 1e-16)))
    return np.where((p >= 1.0) & (n > 0), 1.0, out)


DetExpr = Union[Const, Ref, Op]


def const(v: float) -> Const:
    return Const(float(v))


def ref(node: str) -> Ref:
    return Ref(node)


def _binify(op: str, *args) -> DetExpr:
    exprs = [a if isinstance(a, (Const, Ref, Op)) else Const(float(a)) for a in args]
    out = exprs[0]
    for e in exprs[1:]:
        out = Op(op, (out, e))
    return out


def add(*args) -> DetExpr:
    return _binify("add", *args)


def sub(a, b) -> DetExpr:
    return _binify("sub", a, b)


def mul(*args) -> DetExpr:
    return _binify("mul", *args)


def div(a, b) -> DetExpr:
    return _binify("div", a, b)


def pow_(a, b) -> DetExpr:
    return _binify("pow", a, b)


def min_(a, b) -> DetExpr:
    return _binify("min", a, b)


def max_(a, b) -> DetExpr:
    return _binify("max", a, b)


def exposure(p, n) -> DetExpr:
    """Probability of at least one event in n independent demands at rate p."""
    p = p if isinstance(p, (Const, Ref, Op)) else Const(float(p))
    n = n if isinstance(n, (Const, Ref, Op)) else Const(float(n))
    return Op("exposure", (p, n))


# ---------------------------------------------------------------------------
# CPD expressions
# ---------------------------------------------------------------------------

Param = Union[float, Ref]


def _param_refs(p: Param) -> set[str]:
    return p.refs() if isinstance(p, Ref) else set()


@dataclass(frozen=True)
class TableCpd:
    """Explicit CPT over discrete parents.

    ``rows`` holds one probability vector per combination of parent states, in
    row-major order of ``parents`` (first parent varies slowest).
    """

    parents: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def refs(self) -> set[str]:
        return set(self.parents)


@dataclass(frozen=True)
class BetaCpd:
    alpha: Param
    beta: Param

    def refs(self) -> set[str]:
        return _param_refs(self.alpha) | _param_refs(self.beta)


@dataclass(frozen=True)
class BinomialCpd:
    n: Param
    p: Param

    def refs(self) -> set[str]:
        return _param_refs(self.n) | _param_refs(self.p)


@dataclass(frozen=True)
class UniformCpd:
    a: float
    b: float

    def refs(self) -> set[str]:
        return set()


@dataclass(frozen=True)
class TNormalCpd:
    """Truncated normal on [lo, hi]; the mean may be an expression over parents."""

    mean: DetExpr
    variance: float
    lo: float
    hi: float

    def refs(self) -> set[str]:
        return self.mean.refs()


@dataclass(frozen=True)
class DeterministicCpd:
    expr: DetExpr

    def refs(self) -> set[str]:
        return self.expr.refs()


@dataclass(frozen=True)
class PartitionedCpd:
    """Dispatch on a discrete parent's state; one sub-expression per state."""

    parent: str
    cases: tuple[tuple[str, "CpdExpr"], ...]

    def refs(self) -> set[str]:
        out = {self.parent}
        for _, sub_expr in self.cases:
            out |= sub_expr.refs()
        return out

    def case_map(self) -> dict[str, "CpdExpr"]:
        return dict(self.cases)


@dataclass(frozen=True)
class MixtureCpd:
    weights: tuple[float, ...]
    components: tuple["CpdExpr", ...]

    def refs(self) -> set[str]:
        out: set[str] = set()
        for c in self.components:
            out |= c.refs()
        return out


@dataclass(frozen=True)
class RankedBandCpd:
    """Ranked child from a scalar score: the band containing the score picks the
    centre of a truncated normal over the child's [0,1] sub-intervals."""

    score: DetExpr
    edges: tuple[float, ...]
    variance: float

    def refs(self) -> set[str]:
        return self.score.refs()


CpdExpr = Union[
    TableCpd,
    BetaCpd,
    BinomialCpd,
    UniformCpd,
    TNormalCpd,
    DeterministicCpd,
    PartitionedCpd,
    MixtureCpd,
    RankedBandCpd,
]


# ---------------------------------------------------------------------------
# Model spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: NodeKind
    cpd: CpdExpr


@dataclass(frozen=True)
class ModelSpec:
    nodes: tuple[NodeSpec, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()

    def node_map(self) -> dict[str, NodeSpec]:
        return {n.id: n for n in self.nodes}

    def parents_of(self, node_id: str) -> tuple[str, ...]:
        return tuple(p for p, c in self.edges if c == node_id)

    def children_of(self, node_id: str) -> tuple[str, ...]:
        return tuple(c for p, c in self.edges if p == node_id)

    def topological_order(self) -> tuple[str, ...]:
        """Deterministic topological order (ready nodes taken lexicographically)."""
        ids = [n.id for n in self.nodes]
        indeg = {i: 0 for i in ids}
        children: dict[str, list[str]] = {i: [] for i in ids}
        for p, c in self.edges:
            indeg[c] += 1
            children[p].append(c)
        ready = sorted(i for i in ids if indeg[i] == 0)
        order: list[str] = []
        while ready:
            nxt = ready.pop(0)
            order.append(nxt)
            newly = []
            for c in children[nxt]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    newly.append(c)
            ready = sorted(ready + newly)
        if len(order) != len(ids):
            raise CycleDetected("graph contains a cycle")
        return tuple(order)


def add_node(model: ModelSpec, spec: NodeSpec) -> ModelSpec:
    if spec.id in model.node_map():
        raise DuplicateId(f"node {spec.id!r} already present")
    return replace(model, nodes=model.nodes + (spec,))


def add_edge(model: ModelSpec, parent: str, child: str) -> ModelSpec:
    known = model.node_map()
    for end in (parent, child):
        if end not in known:
            raise UnknownNode(f"node {end!r} not in model")
    edges = model.edges + ((parent, child),)
    graph: dict[str, set[str]] = {n.id: set() for n in model.nodes}
    for p, c in edges:
        graph[c].add(p)
    try:
        list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise CycleDetected(f"edge {parent!r}->{child!r} creates a cycle") from exc
    return replace(model, edges=edges)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    node: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.node}] {self.code}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.findings

    def add(self, node: str, code: str, message: str) -> None:
        self.findings.append(Finding(node, code, message))

    def __iter__(self):
        return iter(self.findings)


def _n_states(kind: NodeKind) -> int | None:
    if isinstance(kind, (Labelled, Ranked, Boolean)):
        return len(kind.states)
    return None


def _expr_has_static_zero_div(expr: DetExpr) -> bool:
    if isinstance(expr, Op):
        if expr.op == "div" and isinstance(expr.args[1], Const) and expr.args[1].value == 0.0:
            return True
        return any(_expr_has_static_zero_div(a) for a in expr.args)
    return False


def _cpd_det_exprs(cpd: CpdExpr) -> Iterable[DetExpr]:
    if isinstance(cpd, DeterministicCpd):
        yield cpd.expr
    elif isinstance(cpd, TNormalCpd):
        yield cpd.mean
    elif isinstance(cpd, RankedBandCpd):
        yield cpd.score
    elif isinstance(cpd, PartitionedCpd):
        for _, sub_expr in cpd.cases:
            yield from _cpd_det_exprs(sub_expr)
    elif isinstance(cpd, MixtureCpd):
        for c in cpd.components:
            yield from _cpd_det_exprs(c)


def validate(model: ModelSpec) -> ValidationReport:
    """Collect every structural and CPD problem; empty report iff well-formed."""
    report = ValidationReport()
    seen: set[str] = set()
    for n in model.nodes:
        if n.id in seen:
            report.add(n.id, "duplicate-id", "node id appears more than once")
        seen.add(n.id)

    known = {n.id for n in model.nodes}
    for p, c in model.edges:
        for end in (p, c):
            if end not in known:
                report.add(end, "unknown-node", f"edge ({p!r}, {c!r}) references missing node")

    try:
        model.topological_order()
    except CycleDetected:
        report.add("<graph>", "cycle", "edge set is not acyclic")

    node_map = {n.id: n for n in model.nodes}
    for n in model.nodes:
        _validate_kind(n, report)
        parents = tuple(p for p, c in model.edges if c == n.id and p in known)
        _validate_cpd(n, parents, node_map, report)
    return report


def _validate_kind(n: NodeSpec, report: ValidationReport) -> None:
    k = n.kind
    if isinstance(k, (Labelled, Ranked)):
        if len(k.states) < 2:
            report.add(n.id, "too-few-states", f"{len(k.states)} state(s); need at least 2")
        if len(set(k.states)) != len(k.states):
            report.add(n.id, "duplicate-states", "state labels must be unique")
    elif isinstance(k, Continuous):
        if not (k.lo < k.hi) or not (math.isfinite(k.lo) and math.isfinite(k.hi)):
            report.add(n.id, "bad-support", f"need finite lo < hi, got [{k.lo}, {k.hi}]")
    elif isinstance(k, Count):
        if k.n_max < 1:
            report.add(n.id, "bad-support", f"n_max must be >= 1, got {k.n_max}")


def _validate_cpd(
    n: NodeSpec,
    parents: tuple[str, ...],
    node_map: Mapping[str, NodeSpec],
    report: ValidationReport,
) -> None:
    refs = n.cpd.refs()
    missing = refs - set(parents)
    unreferenced = set(parents) - refs
    if missing:
        report.add(n.id, "missing-parent", f"CPD references undeclared parent(s): {sorted(missing)}")
    if unreferenced:
        report.add(n.id, "unreferenced-parent", f"graph parent(s) unused by CPD: {sorted(unreferenced)}")

    for expr in _cpd_det_exprs(n.cpd):
        if _expr_has_static_zero_div(expr):
            report.add(n.id, "zero-division", "deterministic expression divides by constant 0")

    cpd = n.cpd
    if isinstance(cpd, TableCpd):
        want_rows = 1
        for p in cpd.parents:
            spec = node_map.get(p)
            cnt = _n_states(spec.kind) if spec else None
            if cnt is None:
                report.add(n.id, "table-parent", f"table parent {p!r} is not discrete")
                return
            want_rows *= cnt
        child_states = _n_states(n.kind)
        if child_states is None:
            report.add(n.id, "table-child", "table CPD requires a discrete child")
            return
        if len(cpd.rows) != want_rows:
            report.add(n.id, "table-shape", f"expected {want_rows} row(s), got {len(cpd.rows)}")
        for i, row in enumerate(cpd.rows):
            if len(row) != child_states:
                report.add(n.id, "table-shape", f"row {i} has {len(row)} entries, child has {child_states} states")
                continue
            if any(v < 0 for v in row):
                report.add(n.id, "table-negative", f"row {i} has negative mass")
            s = sum(row)
            if abs(s - 1.0) > _SUM_TOL:
                report.add(n.id, "row-sum", f"row {i} mass {s!r} != 1")
    elif isinstance(cpd, BetaCpd):
        for name, p in (("alpha", cpd.alpha), ("beta", cpd.beta)):
            if isinstance(p, float) and p <= 0:
                report.add(n.id, "bad-param", f"Beta {name} must be positive, got {p}")
    elif isinstance(cpd, UniformCpd):
        if not cpd.a < cpd.b:
            report.add(n.id, "bad-param", f"Uniform needs a < b, got ({cpd.a}, {cpd.b})")
    elif isinstance(cpd, TNormalCpd):
        if cpd.variance <= 0:
            report.add(n.id, "bad-param", "TNormal variance must be positive")
        if not cpd.lo < cpd.hi:
            report.add(n.id, "bad-param", f"TNormal needs lo < hi, got ({cpd.lo}, {cpd.hi})")
    elif isinstance(cpd, PartitionedCpd):
        spec = node_map.get(cpd.parent)
        states = spec.kind.states if spec and isinstance(spec.kind, DISCRETE_KINDS) else None
        if states is None:
            report.add(n.id, "partition-parent", f"partition parent {cpd.parent!r} is not a discrete node")
        else:
            case_states = [s for s, _ in cpd.cases]
            if sorted(case_states) != sorted(states):
                report.add(
                    n.id,
                    "partition-cases",
                    f"cases {sorted(case_states)} do not exactly cover states {sorted(states)}",
                )
    elif isinstance(cpd, MixtureCpd):
        if len(cpd.weights) != len(cpd.components):
            report.add(n.id, "mixture-shape", "one weight per component required")
        if any(w < 0 for w in cpd.weights):
            report.add(n.id, "mixture-weight", "weights must be non-negative")
        elif abs(sum(cpd.weights) - 1.0) > _SUM_TOL:
            report.add(n.id, "mixture-weight", f"weights sum to {sum(cpd.weights)!r} != 1")
    elif isinstance(cpd, RankedBandCpd):
        if not isinstance(n.kind, Ranked):
            report.add(n.id, "band-child", "RankedBand requires a Ranked child")
        if list(cpd.edges) != sorted(cpd.edges):
            report.add(n.id, "band-edges", "band edges must be non-decreasing")
        if cpd.variance <= 0:
            report.add(n.id, "bad-param", "RankedBand variance must be positive")


# ---------------------------------------------------------------------------
# JSON (de)serialization — the persistence format for CLI and service
# ---------------------------------------------------------------------------

def _expr_to_json(e: DetExpr) -> dict:
    if isinstance(e, Const):
        return {"const": e.value}
    if isinstance(e, Ref):
        return {"ref": e.node}
    return {"op": e.op, "args": [_expr_to_json(a) for a in e.args]}


def _expr_from_json(d: Mapping) -> DetExpr:
    if "const" in d:
        return Const(float(d["const"]))
    if "ref" in d:
        return Ref(str(d["ref"]))
    return Op(str(d["op"]), tuple(_expr_from_json(a) for a in d["args"]))


def _param_to_json(p: Param):
    return {"ref": p.node} if isinstance(p, Ref) else float(p)


def _param_from_json(v) -> Param:
    if isinstance(v, Mapping):
        return Ref(str(v["ref"]))
    return float(v)


def _kind_to_json(k: NodeKind) -> dict:
    if isinstance(k, Labelled):
        return {"type": "labelled", "states": list(k.states)}
    if isinstance(k, Boolean):
        return {"type": "boolean"}
    if isinstance(k, Ranked):
        return {"type": "ranked", "states": list(k.states)}
    if isinstance(k, Continuous):
        return {"type": "continuous", "support": [k.lo, k.hi]}
    return {"type": "count", "n_max": k.n_max}


def _kind_from_json(d: Mapping) -> NodeKind:
    t = d["type"]
    if t == "labelled":
        return Labelled(tuple(d["states"]))
    if t == "boolean":
        return Boolean()
    if t == "ranked":
        return Ranked(tuple(d["states"]))
    if t == "continuous":
        lo, hi = d["support"]
        return Continuous(float(lo), float(hi))
    if t == "count":
        return Count(int(d["n_max"]))
    raise ValueError(f"unknown node kind {t!r}")


def _cpd_to_json(c: CpdExpr) -> dict:
    if isinstance(c, TableCpd):
        return {"type": "table", "parents": list(c.parents), "rows": [list(r) for r in c.rows]}
    if isinstance(c, BetaCpd):
        return {"type": "beta", "alpha": _param_to_json(c.alpha), "beta": _param_to_json(c.beta)}
    if isinstance(c, BinomialCpd):
        return {"type": "binomial", "n": _param_to_json(c.n), "p": _param_to_json(c.p)}
    if isinstance(c, UniformCpd):
        return {"type": "uniform", "a": c.a, "b": c.b}
    if isinstance(c, TNormalCpd):
        return {
            "type": "tnormal",
            "mean": _expr_to_json(c.mean),
            "variance": c.variance,
            "lo": c.lo,
            "hi": c.hi,
        }
    if isinstance(c, DeterministicCpd):
        return {"type": "deterministic", "expr": _expr_to_json(c.expr)}
    if isinstance(c, PartitionedCpd):
        return {
            "type": "partitioned",
            "parent": c.parent,
            "cases": [[s, _cpd_to_json(sub)] for s, sub in c.cases],
        }
    if isinstance(c, MixtureCpd):
        return {
            "type": "mixture",
            "weights": list(c.weights),
            "components": [_cpd_to_json(x) for x in c.components],
        }
    return {
        "type": "ranked_band",
        "score": _expr_to_json(c.score),
        "edges": list(c.edges),
        "variance": c.variance,
    }


def _cpd_from_json(d: Mapping) -> CpdExpr:
    t = d["type"]
    if t == "table":
        return TableCpd(tuple(d["parents"]), tuple(tuple(float(v) for v in r) for r in d["rows"]))
    if t == "beta":
        return BetaCpd(_param_from_json(d["alpha"]), _param_from_json(d["beta"]))
    if t == "binomial":
        return BinomialCpd(_param_from_json(d["n"]), _param_from_json(d["p"]))
    if t == "uniform":
        return UniformCpd(float(d["a"]), float(d["b"]))
    if t == "tnormal":
        return TNormalCpd(_expr_from_json(d["mean"]), float(d["variance"]), float(d["lo"]), float(d["hi"]))
    if t == "deterministic":
        return DeterministicCpd(_expr_from_json(d["expr"]))
    if t == "partitioned":
        return PartitionedCpd(str(d["parent"]), tuple((str(s), _cpd_from_json(sub)) for s, sub in d["cases"]))
    if t == "mixture":
        return MixtureCpd(tuple(float(w) for w in d["weights"]), tuple(_cpd_from_json(x) for x in d["components"]))
    if t == "ranked_band":
        return RankedBandCpd(_expr_from_json(d["score"]), tuple(float(e) for e in d["edges"]), float(d["variance"]))
    raise ValueError(f"unknown CPD type {t!r}")


def model_to_json(model: ModelSpec) -> dict:
    return {
        "nodes": [
            {"id": n.id, "kind": _kind_to_json(n.kind), "cpd": _cpd_to_json(n.cpd)}
            for n in model.nodes
        ],
        "edges": [[p, c] for p, c in model.edges],
    }


def model_from_json(doc: Mapping) -> ModelSpec:
    nodes = tuple(
        NodeSpec(str(d["id"]), _kind_from_json(d["kind"]), _cpd_from_json(d["cpd"]))
        for d in doc["nodes"]
    )
    edges = tuple((str(p), str(c)) for p, c in doc["edges"])
    return ModelSpec(nodes=nodes, edges=edges)


def model_dumps(model: ModelSpec, **kwargs) -> str:
    return json.dumps(model_to_json(model), **kwargs)


def model_loads(text: str) -> ModelSpec:
    return model_from_json(json.loads(text))
