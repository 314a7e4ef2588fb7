"""Static discretization of continuous and count nodes.

Continuous supports are partitioned into intervals (equal-width, log-spaced,
or explicit) and count supports into integer ranges, so that every CPD
expression can be compiled to a finite conditional probability table and the
network handled by exact discrete inference.  Probability-valued quantities in
this domain concentrate near zero, so log-spaced bins are the default for
[0, 1] supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np
from scipy import stats

from . import graph
from .errors import BadCount, BadSupport, UnnormalizedPosterior, UnsupportedCombination

COLUMN_TOL = 1e-9
MASS_TOL = 1e-6
DEFAULT_BINS = 100
DEFAULT_COUNT_BINS = 200
DEFAULT_LOG_EPS = 1e-6


# ---------------------------------------------------------------------------
# Interval sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalSet:
    """Ordered partition of a support: [lo, hi) intervals, final interval closed.

    For ``integer`` sets the edges are integers and each interval [a, b)
    stands for the inclusive integer range a..b-1.
    """

    node: str
    edges: tuple[float, ...]
    scheme: str
    integer: bool = False

    def __post_init__(self):
        if len(self.edges) < 3:
            raise BadCount(f"{self.node}: need at least 2 intervals")
        diffs = np.diff(self.edges)
        if np.any(diffs <= 0):
            raise BadSupport(f"{self.node}: interval widths must be positive")

    @property
    def count(self) -> int:
        return len(self.edges) - 1

    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.edges[:-1], self.edges[1:]))

    def representatives(self) -> np.ndarray:
        """One value per bin: geometric midpoints for log bins, integer range
        midpoints for integer sets, arithmetic midpoints otherwise."""
        lo = np.asarray(self.edges[:-1], dtype=float)
        hi = np.asarray(self.edges[1:], dtype=float)
        if self.integer:
            return np.floor((lo + hi - 1) / 2.0)
        if self.scheme == "log":
            mids = np.where(lo > 0, np.sqrt(lo * hi), (lo + hi) / 2.0)
            return mids
        return (lo + hi) / 2.0

    def locate(self, value: float) -> int:
        """Index of the bin containing value (support endpoints clamp inward)."""
        lo = self.edges[0]
        hi = self.edges[-1] - 1 if self.integer else self.edges[-1]
        if value < lo or value > hi:
            raise BadSupport(f"{self.node}: value {value} outside support [{lo}, {hi}]")
        idx = int(np.searchsorted(self.edges, value, side="right") - 1)
        return min(max(idx, 0), self.count - 1)


def make_bins(
    support: tuple[float, float],
    count: int,
    scheme: str = "equal",
    node: str = "",
    eps: float = DEFAULT_LOG_EPS,
) -> IntervalSet:
    """Partition ``support`` into ``count`` intervals under the given scheme.

    Log-spaced binning requires lo >= 0; when lo == 0 the first bin is
    [0, eps) and the remaining bins are geometric from eps to hi.
    """
    lo, hi = float(support[0]), float(support[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise BadSupport(f"bad support [{lo}, {hi}]")
    if count < 2:
        raise BadCount(f"need at least 2 bins, got {count}")
    if scheme == "equal":
        edges = np.linspace(lo, hi, count + 1)
    elif scheme == "log":
        if lo < 0:
            raise BadSupport("log-spaced bins require lo >= 0")
        if lo == 0:
            inner = np.geomspace(eps, hi, count)
            edges = np.concatenate([[0.0], inner])
        else:
            edges = np.geomspace(lo, hi, count + 1)
    else:
        raise BadSupport(f"unknown scheme {scheme!r}")
    edges[0], edges[-1] = lo, hi
    return IntervalSet(node=node, edges=tuple(float(e) for e in edges), scheme=scheme)


def explicit_bins(node: str, edges: Sequence[float], integer: bool = False) -> IntervalSet:
    return IntervalSet(node=node, edges=tuple(float(e) for e in edges), scheme="explicit", integer=integer)


def count_ranges(n_max: int, max_bins: int = DEFAULT_COUNT_BINS, node: str = "") -> IntervalSet:
    """Integer ranges covering 0..n_max: singleton bins first, then geometric
    ranges, keeping the total number of bins at most ``max_bins``."""
    if n_max < 1:
        raise BadSupport(f"n_max must be >= 1, got {n_max}")
    if max_bins < 2:
        raise BadCount(f"need at least 2 bins, got {max_bins}")
    if n_max + 1 <= max_bins:
        edges = list(range(n_max + 2))
    else:
        n_single = min(32, max_bins // 2)
        edges = list(range(n_single + 1))
        remaining = max_bins - n_single
        start, stop = float(n_single), float(n_max + 1)
        raw = np.geomspace(start, stop, remaining + 1)[1:]
        for r in raw:
            e = int(math.ceil(r))
            if e > edges[-1]:
                edges.append(min(e, n_max + 1))
        if edges[-1] != n_max + 1:
            edges.append(n_max + 1)
    return IntervalSet(node=node, edges=tuple(float(e) for e in edges), scheme="log", integer=True)


def interval_count_bins(
    n_max: int,
    focus: tuple[int, int],
    node: str = "",
    focus_bins: int = 32,
) -> IntervalSet:
    """Integer ranges that resolve ``focus`` finely and keep the rest coarse.

    Used for count nodes whose prior lives on a narrow interval (or point):
    bins outside the prior's support carry no mass, so one coarse bin on each
    side suffices.
    """
    lo, hi = int(focus[0]), int(focus[1])
    if not (0 <= lo <= hi <= n_max):
        raise BadSupport(f"focus [{lo}, {hi}] outside [0, {n_max}]")
    edges: list[int] = [0]
    if lo > 0:
        edges.append(lo)
    width = hi - lo + 1
    if width <= focus_bins:
        edges.extend(range(lo + 1, hi + 2))
    else:
        step = width / focus_bins
        for i in range(1, focus_bins + 1):
            e = lo + int(round(i * step))
            if e > edges[-1]:
                edges.append(min(e, hi + 1))
        if edges[-1] != hi + 1:
            edges.append(hi + 1)
    if edges[-1] != n_max + 1:
        edges.append(n_max + 1)
    if len(edges) < 3:
        edges = [0, max(1, lo), n_max + 1]
        edges = sorted(set(edges))
        if len(edges) < 3:
            edges = [0, 1, n_max + 1]
    return IntervalSet(node=node, edges=tuple(float(e) for e in edges), scheme="explicit", integer=True)


# ---------------------------------------------------------------------------
# State spaces: what a node's axis looks like after compilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteSpace:
    node: str
    labels: tuple[str, ...]
    values: tuple[float, ...] | None  # numeric stand-ins (ranked midpoints, bool 0/1)

    @property
    def size(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise BadSupport(f"{self.node}: unknown state {label!r}") from None


@dataclass(frozen=True)
class BinnedSpace:
    node: str
    bins: IntervalSet

    @property
    def size(self) -> int:
        return self.bins.count


Space = Union[DiscreteSpace, BinnedSpace]


def space_values(space: Space) -> np.ndarray | None:
    """Representative numeric value per state/bin, None for labelled nodes."""
    if isinstance(space, BinnedSpace):
        return space.bins.representatives()
    if space.values is None:
        return None
    return np.asarray(space.values, dtype=float)


# ---------------------------------------------------------------------------
# Binning configuration
# ---------------------------------------------------------------------------

@dataclass
class BinningConfig:
    """How continuous/count nodes are discretized; per-node overrides win."""

    default_bins: int = DEFAULT_BINS
    count_bins: int = DEFAULT_COUNT_BINS
    log_eps: float = DEFAULT_LOG_EPS
    overrides: dict[str, dict] = field(default_factory=dict)

    def space_for(self, node: graph.NodeSpec) -> Space:
        kind = node.kind
        if isinstance(kind, (graph.Labelled, graph.Ranked, graph.Boolean)):
            return DiscreteSpace(node.id, tuple(kind.states), kind.state_values())
        ov = self.overrides.get(node.id, {})
        if isinstance(kind, graph.Continuous):
            if "edges" in ov:
                return BinnedSpace(node.id, explicit_bins(node.id, ov["edges"]))
            bins = int(ov.get("bins", self.default_bins))
            scheme = ov.get("scheme")
            if scheme is None:
                scheme = "log" if kind.lo >= 0 and kind.hi <= 1 else "equal"
            eps = float(ov.get("eps", self.log_eps))
            return BinnedSpace(node.id, make_bins((kind.lo, kind.hi), bins, scheme, node.id, eps))
        if isinstance(kind, graph.Count):
            if "edges" in ov:
                return BinnedSpace(node.id, explicit_bins(node.id, ov["edges"], integer=True))
            if "focus" in ov:
                return BinnedSpace(
                    node.id,
                    interval_count_bins(kind.n_max, tuple(ov["focus"]), node.id, int(ov.get("focus_bins", 32))),
                )
            return BinnedSpace(node.id, count_ranges(kind.n_max, int(ov.get("bins", self.count_bins)), node.id))
        raise BadSupport(f"{node.id}: unknown kind {kind!r}")

    def scaled(self, factor: int) -> "BinningConfig":
        """Refined copy: all bin counts multiplied by ``factor`` (for convergence checks)."""
        overrides = {}
        for k, v in self.overrides.items():
            v = dict(v)
            if "bins" in v:
                v["bins"] = int(v["bins"]) * factor
            if "focus_bins" in v:
                v["focus_bins"] = int(v["focus_bins"]) * factor
            overrides[k] = v
        return BinningConfig(
            default_bins=self.default_bins * factor,
            count_bins=self.count_bins * factor,
            log_eps=self.log_eps,
            overrides=overrides,
        )


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    p5: float
    p50: float
    p95: float


def summarize(mass: np.ndarray, bins: IntervalSet) -> Moments:
    """Moments of a posterior over an interval set.

    Mean and variance use bin representatives; percentiles interpolate
    linearly within bins.
    """
    mass = np.asarray(mass, dtype=float)
    if mass.shape != (bins.count,):
        raise UnnormalizedPosterior(f"mass has shape {mass.shape}, expected ({bins.count},)")
    total = float(mass.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise UnnormalizedPosterior(f"posterior mass {total!r} != 1")
    mass = mass / total
    reps = bins.representatives()
    mean = float(np.dot(mass, reps))
    variance = max(0.0, float(np.dot(mass, reps**2) - mean**2))
    pct = _percentiles(mass, bins, (0.05, 0.5, 0.95))
    return Moments(mean=mean, variance=variance, p5=pct[0], p50=pct[1], p95=pct[2])


def _percentiles(mass: np.ndarray, bins: IntervalSet, qs: Sequence[float]) -> list[float]:
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    cum[-1] = 1.0
    lo = np.asarray(bins.edges[:-1])
    hi = np.asarray(bins.edges[1:])
    out = []
    for q in qs:
        i = int(np.searchsorted(cum, q, side="left"))
        i = min(max(i - 1, 0), bins.count - 1)
        span = cum[i + 1] - cum[i]
        frac = 0.5 if span <= 0 else (q - cum[i]) / span
        out.append(float(lo[i] + frac * (hi[i] - lo[i])))
    return out


# ---------------------------------------------------------------------------
# Expression -> CPT compilation
# ---------------------------------------------------------------------------

def expression_to_cpt(
    expr: graph.CpdExpr,
    parent_spaces: Mapping[str, Space],
    parent_order: Sequence[str],
    child_space: Space,
) -> np.ndarray:
    """Compile a CPD expression to a table of shape (child, *parents).

    Every column (fixed parent combination) is a probability vector; columns
    losing more than ``MASS_TOL`` of their mass to truncation raise
    ``UnsupportedCombination``.
    """
    parent_order = tuple(parent_order)
    shape = tuple(parent_spaces[p].size for p in parent_order)
    n_combo = int(np.prod(shape)) if shape else 1
    cols = _columns(expr, parent_spaces, parent_order, child_space, n_combo)
    sums = cols.sum(axis=0)
    bad = sums < 1.0 - MASS_TOL
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise UnsupportedCombination(
            f"column {idx} keeps only {sums[idx]:.6g} of its mass on the child support"
        )
    cols = cols / sums
    return cols.reshape((child_space.size,) + shape)


def _parent_value_grid(
    parent_spaces: Mapping[str, Space], parent_order: Sequence[str], n_combo: int
) -> dict[str, np.ndarray]:
    """Numeric representative for each parent, per flattened combination."""
    env = {}
    sizes = [parent_spaces[p].size for p in parent_order]
    for axis, p in enumerate(parent_order):
        vals = space_values(parent_spaces[p])
        if vals is None:
            continue
        reps = np.ones(sizes[:axis] + [1] + sizes[axis + 1 :])
        grid = vals.reshape([1] * axis + [sizes[axis]] + [1] * (len(sizes) - axis - 1)) * reps
        env[p] = grid.reshape(n_combo)
    return env


def _child_cdf_masses(dist, child_space: Space, n_combo: int) -> np.ndarray:
    """Mass per child bin from a (vectorized) scipy distribution, shape (bins, combos)."""
    if isinstance(child_space, DiscreteSpace):
        raise UnsupportedCombination(f"{child_space.node}: continuous CPD on a non-numeric child")
    bins = child_space.bins
    if bins.integer:
        his = np.asarray(bins.edges[1:]) - 1.0
        los = np.asarray(bins.edges[:-1]) - 1.0
        upper = dist.cdf(his[:, None])
        lower = dist.cdf(los[:, None])
    else:
        edges = np.asarray(bins.edges)
        upper = dist.cdf(edges[1:, None])
        lower = dist.cdf(edges[:-1, None])
    out = np.clip(upper - lower, 0.0, None)
    return np.broadcast_to(out, (bins.count, n_combo)).copy() if out.shape[1] != n_combo else out


def _tnormal_masses(mean: np.ndarray, variance: float, lo: float, hi: float, child_space: Space) -> np.ndarray:
    sd = math.sqrt(variance)
    if isinstance(child_space, DiscreteSpace):
        # Ranked child: its states are the K equal sub-intervals of [0, 1].
        k = child_space.size
        edges = np.linspace(0.0, 1.0, k + 1)
    else:
        edges = np.asarray(child_space.bins.edges)
    edges = np.clip(edges, lo, hi)
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    z = (edges[:, None] - mean[None, :]) / sd
    cdf = stats.norm.cdf(z)
    norm = stats.norm.cdf((hi - mean) / sd) - stats.norm.cdf((lo - mean) / sd)
    norm = np.where(norm <= 0, 1.0, norm)
    masses = np.clip(np.diff(cdf, axis=0), 0.0, None) / norm
    return masses


def _point_mass_columns(values: np.ndarray, child_space: Space, n_combo: int) -> np.ndarray:
    """Deterministic value -> mass on the two bins bracketing it, weighted so
    the conditional mean equals the value exactly.

    Snapping everything to the containing bin's representative leaves a
    systematic half-bin bias when the expression is a near-unit multiplier on
    a log grid (the value's offset from the representatives is then the same
    in every column), which breaks refinement convergence; the two-bin split
    removes the bias at the cost of at most one bin width of spread.
    """
    if isinstance(child_space, DiscreteSpace):
        raise UnsupportedCombination(f"{child_space.node}: deterministic CPD needs a binned child")
    bins = child_space.bins
    values = np.broadcast_to(np.asarray(values, dtype=float), (n_combo,)).astype(float)
    lo, hi = bins.edges[0], bins.edges[-1]
    tol = 1e-12 * max(1.0, abs(hi))
    outside = (values < lo - tol) | (values > hi + tol)
    if np.any(outside):
        v = float(values[np.argmax(outside)])
        raise UnsupportedCombination(f"{bins.node}: deterministic value {v!r} outside support [{lo}, {hi}]")
    values = np.clip(values, lo, hi)
    reps = bins.representatives()
    idx = np.clip(np.searchsorted(reps, values, side="left"), 0, bins.count - 1)
    left = np.clip(idx - 1, 0, bins.count - 1)
    rep_hi = reps[idx]
    rep_lo = reps[left]
    span = rep_hi - rep_lo
    with np.errstate(invalid="ignore", divide="ignore"):
        w_hi = np.where(span > 0, (values - rep_lo) / span, 1.0)
    w_hi = np.clip(w_hi, 0.0, 1.0)
    cols = np.zeros((bins.count, n_combo))
    cols[idx, np.arange(n_combo)] += w_hi
    cols[left, np.arange(n_combo)] += 1.0 - w_hi
    return cols


def _columns(
    expr: graph.CpdExpr,
    parent_spaces: Mapping[str, Space],
    parent_order: tuple[str, ...],
    child_space: Space,
    n_combo: int,
) -> np.ndarray:
    env = _parent_value_grid(parent_spaces, parent_order, n_combo)

    def param(p) -> np.ndarray:
        if isinstance(p, graph.Ref):
            return env[p.node]
        return np.full(n_combo, float(p))

    if isinstance(expr, graph.TableCpd):
        if not isinstance(child_space, DiscreteSpace):
            raise UnsupportedCombination(f"{child_space.node}: table CPD needs a discrete child")
        # Rows are in row-major order of expr.parents; realign to parent_order.
        sizes = {p: parent_spaces[p].size for p in parent_order}
        table = np.asarray(expr.rows, dtype=float).reshape(
            tuple(sizes[p] for p in expr.parents) + (child_space.size,)
        )
        src = tuple(expr.parents)
        perm = [src.index(p) for p in parent_order] + [len(src)]
        table = np.transpose(table, perm)
        return np.moveaxis(table.reshape((n_combo, child_space.size)), 1, 0).copy()

    if isinstance(expr, graph.BetaCpd):
        a, b = param(expr.alpha), param(expr.beta)
        return _child_cdf_masses(stats.beta(a[None, :], b[None, :]), child_space, n_combo)

    if isinstance(expr, graph.UniformCpd):
        if isinstance(child_space, BinnedSpace) and child_space.bins.integer:
            # integer child: uniform over the integers in [a, b]
            dist = stats.randint(math.ceil(expr.a), math.floor(expr.b) + 1)
        else:
            dist = stats.uniform(expr.a, expr.b - expr.a)
        return _child_cdf_masses(dist, child_space, n_combo)

    if isinstance(expr, graph.BinomialCpd):
        n = np.round(param(expr.n)).astype(np.int64)
        p = np.clip(param(expr.p), 0.0, 1.0)
        if isinstance(child_space, DiscreteSpace) or not child_space.bins.integer:
            raise UnsupportedCombination(f"{child_space.node}: binomial CPD needs an integer-binned child")
        return _child_cdf_masses(stats.binom(n[None, :], p[None, :]), child_space, n_combo)

    if isinstance(expr, graph.TNormalCpd):
        mean = np.broadcast_to(np.asarray(expr.mean.evaluate(env), dtype=float), (n_combo,))
        return _tnormal_masses(mean, expr.variance, expr.lo, expr.hi, child_space)

    if isinstance(expr, graph.DeterministicCpd):
        values = expr.expr.evaluate(env)
        return _point_mass_columns(values, child_space, n_combo)

    if isinstance(expr, graph.RankedBandCpd):
        if not isinstance(child_space, DiscreteSpace):
            raise UnsupportedCombination(f"{child_space.node}: ranked-band CPD needs a ranked child")
        score = np.broadcast_to(np.asarray(expr.score.evaluate(env), dtype=float), (n_combo,))
        band = np.searchsorted(np.asarray(expr.edges), score, side="right")
        k = child_space.size
        centres = (np.arange(len(expr.edges) + 1) + 0.5) / (len(expr.edges) + 1)
        per_band = _tnormal_masses(centres, expr.variance, 0.0, 1.0, child_space)
        return per_band[:, band]

    if isinstance(expr, graph.PartitionedCpd):
        pspace = parent_spaces[expr.parent]
        if not isinstance(pspace, DiscreteSpace):
            raise UnsupportedCombination(f"{expr.parent}: partition parent must be discrete")
        axis = parent_order.index(expr.parent)
        sizes = [parent_spaces[p].size for p in parent_order]
        cols = np.zeros((child_space.size, n_combo))
        combo_idx = np.arange(n_combo).reshape(sizes)
        case_map = expr.case_map()
        sub_order = tuple(p for p in parent_order if p != expr.parent)
        for s_i, label in enumerate(pspace.labels):
            sub_expr = case_map[label]
            sub_combo = np.take(combo_idx, s_i, axis=axis).reshape(-1)
            sub_cols = _columns(sub_expr, parent_spaces, sub_order, child_space, len(sub_combo))
            cols[:, sub_combo] = sub_cols
        return cols

    if isinstance(expr, graph.MixtureCpd):
        cols = np.zeros((child_space.size, n_combo))
        for w, comp in zip(expr.weights, expr.components):
            cols += w * _columns(comp, parent_spaces, parent_order, child_space, n_combo)
        return cols

    raise UnsupportedCombination(f"cannot compile CPD {type(expr).__name__}")
