"""Exact inference on compiled networks, plus a sampling cross-check.

``compile`` discretizes every CPD into a factor; ``posterior`` answers
marginal queries by variable elimination with a deterministic min-fill
ordering.  Factors are kept in linear space but rescaled so their maximum
entry is 1 after every product, with the scale tracked in log space; this
protects the tiny likelihoods that arise when tens of thousands of product
instances are observed, without paying for log-sum-exp everywhere.

``sample_posterior`` is an independent likelihood-weighting estimator used to
cross-validate the exact engine; it shares nothing with the elimination path
beyond the compiled tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from . import discretize, graph
from ._kernels import EV_HARD, EV_NONE, EV_SOFT, ModelPack, lw_run
from .discretize import BinnedSpace, BinningConfig, DiscreteSpace, Moments, Space
from .errors import (
    BadSupport,
    DegenerateWeights,
    ImpossibleEvidence,
    UnknownNode,
    ValidationFailed,
)

LOG_Z_FLOOR = math.log(1e-300)
MIN_ESS = 10.0


# ---------------------------------------------------------------------------
# Evidence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteState:
    state: str


@dataclass(frozen=True)
class Point:
    value: float


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float


EvidenceValue = Union[DiscreteState, Point, Interval]
Evidence = Mapping[str, EvidenceValue]


def evidence_indicator(space: Space, ev: EvidenceValue) -> np.ndarray:
    """Indicator vector over the node's states/bins selected by the evidence."""
    if isinstance(ev, DiscreteState):
        if not isinstance(space, DiscreteSpace):
            raise BadSupport(f"{space_node(space)}: state evidence on a non-discrete node")
        out = np.zeros(space.size)
        out[space.index_of(ev.state)] = 1.0
        return out
    if isinstance(space, DiscreteSpace):
        raise BadSupport(f"{space.node}: numeric evidence on a discrete node (use a state)")
    bins = space.bins
    out = np.zeros(bins.count)
    if isinstance(ev, Point):
        out[bins.locate(ev.value)] = 1.0
        return out
    if ev.lo > ev.hi:
        raise BadSupport(f"{bins.node}: empty evidence interval [{ev.lo}, {ev.hi}]")
    lo_support = bins.edges[0]
    hi_support = bins.edges[-1] - 1 if bins.integer else bins.edges[-1]
    if ev.hi < lo_support or ev.lo > hi_support:
        raise BadSupport(f"{bins.node}: interval [{ev.lo}, {ev.hi}] outside support")
    if bins.integer:
        for i, (lo, hi) in enumerate(bins.intervals()):
            if ev.lo <= hi - 1 and ev.hi >= lo:
                out[i] = 1.0
    else:
        # positive-measure overlap with [lo, hi) bins; the last bin is closed
        for i, (lo, hi) in enumerate(bins.intervals()):
            last = i == bins.count - 1
            if ev.lo < hi and (ev.hi > lo or (last and ev.hi >= lo)):
                out[i] = 1.0
            elif last and ev.lo <= hi and ev.hi >= hi:
                out[i] = 1.0
    if not out.any():
        # degenerate interval sitting exactly on an edge: treat as a point
        out[bins.locate(min(max((ev.lo + ev.hi) / 2.0, lo_support), hi_support))] = 1.0
    return out


def space_node(space: Space) -> str:
    return space.node if isinstance(space, DiscreteSpace) else space.bins.node


def coerce_evidence(space: Space, raw) -> EvidenceValue:
    """Interpret a JSON-ish evidence value against a node's space."""
    if isinstance(raw, (DiscreteState, Point, Interval)):
        return raw
    if isinstance(raw, Mapping):
        if "state" in raw:
            return DiscreteState(str(raw["state"]))
        if "point" in raw:
            return Point(float(raw["point"]))
        if "interval" in raw:
            lo, hi = raw["interval"]
            return Interval(float(lo), float(hi))
        raise BadSupport(f"{space_node(space)}: unrecognized evidence {raw!r}")
    if isinstance(raw, bool):
        return DiscreteState("yes" if raw else "no")
    if isinstance(raw, str):
        return DiscreteState(raw)
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return Interval(float(raw[0]), float(raw[1]))
    if isinstance(space, DiscreteSpace):
        raise BadSupport(f"{space.node}: evidence for a discrete node must name a state")
    return Point(float(raw))


# ---------------------------------------------------------------------------
# Compiled model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompiledNode:
    id: str
    space: Space
    parents: tuple[str, ...]
    cpt: np.ndarray  # axes: (child, *parents)


@dataclass(frozen=True)
class CompiledModel:
    nodes: tuple[CompiledNode, ...]  # topological order
    order: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> CompiledNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNode(f"node {node_id!r} not in model") from None

    def spaces(self) -> dict[str, Space]:
        return {n.id: n.space for n in self.nodes}

    def has_node(self, node_id: str) -> bool:
        return node_id in self._by_id


def compile_model(model: graph.ModelSpec, binning: BinningConfig | None = None) -> CompiledModel:
    """Discretize every node and build its factor.  Requires a clean validation."""
    report = graph.validate(model)
    if not report.ok():
        raise ValidationFailed(report.findings)
    binning = binning or BinningConfig()
    node_map = model.node_map()
    spaces = {nid: binning.space_for(node_map[nid]) for nid in node_map}
    order = model.topological_order()
    compiled = []
    for nid in order:
        spec = node_map[nid]
        parents = tuple(sorted(spec.cpd.refs()))
        cpt = discretize.expression_to_cpt(
            spec.cpd,
            {p: spaces[p] for p in parents},
            parents,
            spaces[nid],
        )
        compiled.append(CompiledNode(id=nid, space=spaces[nid], parents=parents, cpt=cpt))
    return CompiledModel(nodes=tuple(compiled), order=order)


# ---------------------------------------------------------------------------
# Factors and elimination
# ---------------------------------------------------------------------------

@dataclass
class _Factor:
    vars: tuple[str, ...]
    values: np.ndarray
    log_scale: float = 0.0

    def rescaled(self) -> "_Factor":
        m = float(self.values.max()) if self.values.size else 0.0
        if m > 0 and m != 1.0:
            return _Factor(self.vars, self.values / m, self.log_scale + math.log(m))
        return self


def _multiply(a: _Factor, b: _Factor, cards: Mapping[str, int]) -> _Factor:
    out_vars = tuple(sorted(set(a.vars) | set(b.vars)))

    def aligned(f: _Factor) -> np.ndarray:
        shape = [cards[v] if v in f.vars else 1 for v in out_vars]
        perm = [f.vars.index(v) for v in out_vars if v in f.vars]
        return np.transpose(f.values, perm).reshape(shape)

    return _Factor(out_vars, aligned(a) * aligned(b), a.log_scale + b.log_scale).rescaled()


def _sum_out(f: _Factor, var: str) -> _Factor:
    axis = f.vars.index(var)
    return _Factor(tuple(v for v in f.vars if v != var), f.values.sum(axis=axis), f.log_scale)


def min_fill_order(
    scopes: Sequence[tuple[str, ...]],
    eliminate: set[str],
    cards: Mapping[str, int] | None = None,
) -> list[str]:
    """Greedy min-fill elimination order; ties broken lexicographically.

    Fill cost is weighted by state-space sizes when ``cards`` is given, so the
    heuristic avoids marrying several finely-binned nodes."""
    adj: dict[str, set[str]] = {}
    for scope in scopes:
        for v in scope:
            adj.setdefault(v, set())
        for v in scope:
            adj[v].update(x for x in scope if x != v)
    weight = dict(cards) if cards else {}
    order = []
    remaining = set(eliminate) & set(adj)
    while remaining:
        best: tuple[float, str] | None = None
        for v in sorted(remaining):
            nbrs = [n for n in adj[v] if n in adj]
            fill = 0.0
            for i, x in enumerate(nbrs):
                for y in nbrs[i + 1 :]:
                    if y not in adj[x]:
                        fill += weight.get(x, 2) * weight.get(y, 2)
            if best is None or fill < best[0]:
                best = (fill, v)
        v = best[1]
        order.append(v)
        nbrs = [n for n in adj[v] if n in adj]
        for i, x in enumerate(nbrs):
            for y in nbrs[i + 1 :]:
                adj[x].add(y)
                adj[y].add(x)
        for n in nbrs:
            adj[n].discard(v)
        del adj[v]
        remaining.discard(v)
    return order


def _prune_barren(
    compiled: CompiledModel, evidence_nodes: set[str], keep: set[str]
) -> list[CompiledNode]:
    """Drop leaf nodes that carry no evidence and are not queried; their CPT
    columns sum to one, so eliminating them is a no-op."""
    active = {n.id: n for n in compiled.nodes}
    while True:
        referenced: set[str] = set()
        for n in active.values():
            referenced.update(n.parents)
        barren = [
            nid
            for nid in active
            if nid not in referenced and nid not in keep and nid not in evidence_nodes
        ]
        if not barren:
            return list(active.values())
        for nid in barren:
            del active[nid]


def _base_factors(
    compiled: CompiledModel, evidence: Evidence | None, keep: set[str]
) -> tuple[list[_Factor], dict[str, int]]:
    cards = {n.id: n.space.size for n in compiled.nodes}
    evidence = dict(evidence or {})
    for nid in evidence:
        compiled.node(nid)  # raises UnknownNode early
    nodes = _prune_barren(compiled, set(evidence), keep)
    factors = []
    for n in nodes:
        vars_ = (n.id,) + n.parents
        f = _Factor(vars_, n.cpt).rescaled()
        factors.append(f)
    for nid, raw in evidence.items():
        node = compiled.node(nid)
        ev = coerce_evidence(node.space, raw)
        ind = evidence_indicator(node.space, ev)
        factors.append(_Factor((nid,), ind))
    return factors, cards


def _eliminate_to(
    factors: list[_Factor], cards: Mapping[str, int], keep: set[str], order: Sequence[str] | None = None
) -> _Factor:
    all_vars = set()
    for f in factors:
        all_vars.update(f.vars)
    elim = order if order is not None else min_fill_order([f.vars for f in factors], all_vars - keep, cards)
    work = list(factors)
    for var in elim:
        group = [f for f in work if var in f.vars]
        if not group:
            continue
        work = [f for f in work if var not in f.vars]
        prod = group[0]
        for g in group[1:]:
            prod = _multiply(prod, g, cards)
        work.append(_sum_out(prod, var).rescaled())
    if not work:
        return _Factor((), np.ones(()))
    out = work[0]
    for f in work[1:]:
        out = _multiply(out, f, cards)
    return out


# ---------------------------------------------------------------------------
# Posteriors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Posterior:
    node: str
    space: Space
    mass: np.ndarray
    moments: Moments | None

    @property
    def labels(self) -> tuple[str, ...] | None:
        return self.space.labels if isinstance(self.space, DiscreteSpace) else None

    def mean_value(self) -> float | None:
        """Expected numeric value where one exists (bins, ranked midpoints, booleans)."""
        vals = discretize.space_values(self.space)
        if vals is None:
            return None
        return float(np.dot(self.mass, vals))

    def mode(self) -> str | int:
        i = int(np.argmax(self.mass))
        if isinstance(self.space, DiscreteSpace):
            return self.space.labels[i]
        return i


def _finish_posterior(node: CompiledNode, mass: np.ndarray) -> Posterior:
    moments = None
    if isinstance(node.space, BinnedSpace):
        moments = discretize.summarize(mass, node.space.bins)
    return Posterior(node=node.id, space=node.space, mass=mass, moments=moments)


def posterior(
    compiled: CompiledModel,
    evidence: Evidence | None,
    query: Sequence[str],
    order: Sequence[str] | None = None,
) -> list[Posterior]:
    """Exact marginals for each query node given the evidence."""
    out = []
    for q in query:
        node = compiled.node(q)
        factors, cards = _base_factors(compiled, evidence, {q})
        res = _eliminate_to(factors, cards, {q}, order=order)
        if res.vars != (q,):
            res = _Factor((q,), np.broadcast_to(res.values, (cards[q],)).copy(), res.log_scale)
        total = float(res.values.sum())
        log_z = (math.log(total) + res.log_scale) if total > 0 else -math.inf
        if log_z < LOG_Z_FLOOR:
            raise ImpossibleEvidence(f"evidence has (near-)zero probability: log Z = {log_z:.1f}")
        out.append(_finish_posterior(node, res.values / total))
    return out


def evidence_log_probability(compiled: CompiledModel, evidence: Evidence) -> float:
    """log P(evidence); raises ImpossibleEvidence below the representability floor."""
    factors, cards = _base_factors(compiled, evidence, set())
    res = _eliminate_to(factors, cards, set())
    total = float(res.values.sum()) if res.values.shape else float(res.values)
    log_z = (math.log(total) + res.log_scale) if total > 0 else -math.inf
    if log_z < LOG_Z_FLOOR:
        raise ImpossibleEvidence(f"evidence has (near-)zero probability: log Z = {log_z:.1f}")
    return log_z


# ---------------------------------------------------------------------------
# Likelihood weighting (independent oracle)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledPosterior:
    node: str
    space: Space
    mass: np.ndarray
    stderr: np.ndarray
    mean: float | None
    mean_stderr: float | None
    ess: float


def _pack(compiled: CompiledModel, evidence: Evidence | None) -> ModelPack:
    pos = {n.id: i for i, n in enumerate(compiled.nodes)}
    child_card, cpt_chunks, cpt_off = [], [], [0]
    par_list, par_off, par_stride = [], [0], []
    ev_kind, ev_state, ev_ind_chunks, ev_ind_off = [], [], [], [0]
    evidence = dict(evidence or {})
    for n in compiled.nodes:
        card = n.space.size
        child_card.append(card)
        # cpt axes (child, *parents) -> (combo, child) row-major over parents
        table = np.moveaxis(n.cpt, 0, -1).reshape(-1, card)
        cpt_chunks.append(np.ascontiguousarray(table).ravel())
        cpt_off.append(cpt_off[-1] + table.size)
        strides = []
        sizes = [compiled.node(p).space.size for p in n.parents]
        acc = 1
        for s in reversed(sizes):
            strides.append(acc)
            acc *= s
        strides.reverse()
        par_list.extend(pos[p] for p in n.parents)
        par_stride.extend(strides)
        par_off.append(len(par_list))
        if n.id in evidence:
            ev = coerce_evidence(n.space, evidence.pop(n.id))
            ind = evidence_indicator(n.space, ev)
            hard = int(ind.sum()) == 1
            if hard:
                ev_kind.append(EV_HARD)
                ev_state.append(int(np.argmax(ind)))
                ev_ind_off.append(ev_ind_off[-1])
            else:
                ev_kind.append(EV_SOFT)
                ev_state.append(-1)
                ev_ind_chunks.append(ind)
                ev_ind_off.append(ev_ind_off[-1] + card)
        else:
            ev_kind.append(EV_NONE)
            ev_state.append(-1)
            ev_ind_off.append(ev_ind_off[-1])
    if evidence:
        raise UnknownNode(f"evidence on unknown node(s): {sorted(evidence)}")
    return ModelPack(
        child_card=np.asarray(child_card, dtype=np.int64),
        cpt_flat=np.concatenate(cpt_chunks) if cpt_chunks else np.zeros(0),
        cpt_off=np.asarray(cpt_off, dtype=np.int64),
        par_list=np.asarray(par_list, dtype=np.int64),
        par_off=np.asarray(par_off, dtype=np.int64),
        par_stride=np.asarray(par_stride, dtype=np.int64),
        ev_kind=np.asarray(ev_kind, dtype=np.int64),
        ev_state=np.asarray(ev_state, dtype=np.int64),
        ev_ind=np.concatenate(ev_ind_chunks) if ev_ind_chunks else np.zeros(0),
        ev_ind_off=np.asarray(ev_ind_off, dtype=np.int64),
    )


def sample_posterior(
    compiled: CompiledModel,
    evidence: Evidence | None,
    n_samples: int,
    seed: int,
    query: Sequence[str] | None = None,
    kernel=None,
) -> list[SampledPosterior]:
    """Likelihood-weighting estimates with per-bin standard errors.

    Deterministic for a fixed seed.  Raises ``DegenerateWeights`` when the
    effective sample size drops below ``MIN_ESS``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    pack = _pack(compiled, evidence)
    rng = np.random.default_rng(seed)
    u = rng.random((n_samples, pack.n_nodes))
    run = kernel or lw_run
    states, logw = run(pack, u)
    finite = np.isfinite(logw)
    if not np.any(finite):
        raise DegenerateWeights("all samples have zero likelihood")
    mx = float(logw[finite].max())
    w = np.where(finite, np.exp(logw - mx), 0.0)
    total = float(w.sum())
    ess = total**2 / float((w**2).sum())
    if ess < MIN_ESS:
        raise DegenerateWeights(f"effective sample size {ess:.2f} < {MIN_ESS}")
    wn = w / total

    out = []
    query = list(query) if query is not None else [n.id for n in compiled.nodes]
    pos = {n.id: i for i, n in enumerate(compiled.nodes)}
    for q in query:
        node = compiled.node(q)
        xs = states[:, pos[q]]
        card = node.space.size
        mass = np.bincount(xs, weights=wn, minlength=card)
        onehot_err = np.zeros(card)
        for b in range(card):
            d = (xs == b).astype(float) - mass[b]
            onehot_err[b] = math.sqrt(float(np.sum((wn * d) ** 2)))
        vals = discretize.space_values(node.space)
        mean = mean_se = None
        if vals is not None:
            v = vals[xs]
            mean = float(np.dot(wn, v))
            mean_se = math.sqrt(float(np.sum((wn * (v - mean)) ** 2)))
        out.append(
            SampledPosterior(
                node=q,
                space=node.space,
                mass=mass,
                stderr=onehot_err,
                mean=mean,
                mean_stderr=mean_se,
                ess=ess,
            )
        )
    return out
