"""The product-risk network template and scenario assessment.

One ``ScenarioConfig`` describes a product assessment: testing evidence,
manufacturer record, usage exposure, the hazard->injury chain, population
size, perception inputs and utility.  ``build_product_risk_bn`` instantiates
the generic template from it; ``assess`` compiles the network, applies the
scenario's observations (including observed injury counts, which drive
backward inference) and collects an ``AssessmentReport``.

Calibration constants that the source material does not pin down (testing
strategy multipliers, manufacturer-quality slope, usage-deviation multipliers,
wear rate, risk bands) live in ``Calibration`` and can be overridden per
scenario file.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Mapping, Sequence, Union

import numpy as np

from . import graph, infer
from .discretize import BinnedSpace, BinningConfig, DiscreteSpace, Moments
from .errors import InvalidConfig
from .graph import (
    BetaCpd,
    BinomialCpd,
    Boolean,
    Const,
    Continuous,
    Count,
    DeterministicCpd,
    Labelled,
    ModelSpec,
    NodeSpec,
    PartitionedCpd,
    Ranked,
    RankedBandCpd,
    TableCpd,
    TNormalCpd,
    UniformCpd,
    add,
    const,
    exposure,
    min_,
    mul,
    pow_,
    ref,
    sub,
)

ENGINE_VERSION = "0.1.0"
CONFIG_SCHEMA_VERSION = 1

STRATEGY_STATES = ("poor", "typical-of-normal-use", "beyond-intended-scope")
YEARS_STATES = ("under-2", "2-5", "5-10", "10-20", "over-20")
RECORD_STATES = ("very-poor", "poor", "average", "good", "very-good")
SATISFACTION_STATES = ("very-low", "low", "medium", "high", "very-high")
DESIGN_STATES = ("none", "minor", "major-improvement")
USAGE_STATES = ("as-intended", "minor-deviation", "major-deviation")
FIVE_LEVELS = ("very-low", "low", "medium", "high", "very-high")

E = math.e


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

AmountLike = Union[int, tuple[int, int]]


@dataclass(frozen=True)
class Spread:
    """A count-valued prior: a point, an interval, or a truncated normal."""

    point: int | None = None
    interval: tuple[int, int] | None = None
    mean: float | None = None
    sd: float | None = None
    hi: int | None = None

    @classmethod
    def coerce(cls, raw) -> "Spread":
        if isinstance(raw, Spread):
            return raw
        if isinstance(raw, bool):
            raise InvalidConfig(f"bad count distribution: {raw!r}")
        if isinstance(raw, (int, float)):
            return cls(point=int(raw))
        if isinstance(raw, (list, tuple)) and len(raw) == 2:
            return cls(interval=(int(raw[0]), int(raw[1])))
        if isinstance(raw, Mapping):
            if "mean" in raw:
                return cls(
                    mean=float(raw["mean"]),
                    sd=float(raw.get("sd", max(1.0, float(raw["mean"])))),
                    hi=int(raw["hi"]) if "hi" in raw else None,
                )
            if "interval" in raw:
                lo, hi = raw["interval"]
                return cls(interval=(int(lo), int(hi)))
            if "point" in raw:
                return cls(point=int(raw["point"]))
        raise InvalidConfig(f"bad count distribution: {raw!r}")

    def to_json(self):
        if self.point is not None:
            return self.point
        if self.interval is not None:
            return list(self.interval)
        out = {"mean": self.mean, "sd": self.sd}
        if self.hi is not None:
            out["hi"] = self.hi
        return out

    def support_hi(self) -> int:
        if self.point is not None:
            return max(1, self.point)
        if self.interval is not None:
            return max(1, self.interval[1])
        hi = self.hi if self.hi is not None else int(math.ceil(self.mean + 5 * self.sd))
        return max(1, hi)

    def validate(self, name: str) -> None:
        if self.point is not None:
            if self.point < 0:
                raise InvalidConfig(f"{name}: negative count")
        elif self.interval is not None:
            lo, hi = self.interval
            if lo < 0 or lo > hi:
                raise InvalidConfig(f"{name}: bad interval [{lo}, {hi}]")
        elif self.mean is not None:
            if self.mean < 0 or (self.sd is not None and self.sd <= 0):
                raise InvalidConfig(f"{name}: bad mean/sd")
        else:
            raise InvalidConfig(f"{name}: empty distribution")


@dataclass(frozen=True)
class TestingConfig:
    demands_tested: Spread | None = None
    hazards_observed: int | None = None
    strategy: str = "typical-of-normal-use"
    prior_alpha: float = 1.0
    prior_beta: float = 1.0


@dataclass(frozen=True)
class ManufacturerConfig:
    years_in_operation: str = "5-10"
    country_safety_record: str = "average"
    customer_satisfaction: str = "medium"
    design_change: str = "none"


@dataclass(frozen=True)
class UsageConfig:
    usage_profile: tuple[float, float, float] = (1.0, 0.0, 0.0)  # per USAGE_STATES
    demands_per_lifetime: Spread = Spread(point=100)
    years_in_use: int = 0


@dataclass(frozen=True)
class HazardInjuryConfig:
    p_uncontrolled_major: float = 0.1
    p_uncontrolled_minor: float = 0.2
    control_present_prob: float = 0.0
    control_effectiveness: float = 1.0


@dataclass(frozen=True)
class PopulationConfig:
    n_instances: Spread = Spread(point=1000)
    observed_major_injury_instances: int | None = None
    observed_minor_injury_instances: int | None = None


@dataclass(frozen=True)
class PerceptionConfig:
    media_stories: bool = False
    warnings: bool = False
    government_intervention_announced: bool = False


@dataclass(frozen=True)
class Calibration:
    """Tunables the template needs but the source material leaves open."""

    strategy_multipliers: tuple[float, float, float] = (20.0, 1.0, 0.5)  # per STRATEGY_STATES
    quality_slope: float = 0.2  # rate scale = exp(slope * (0.5 - quality))
    manufacturer_variance: float = 0.01
    usage_multipliers: tuple[float, float, float] = (1.0, 2.0, 5.0)  # per USAGE_STATES
    wear_rate: float = 0.1  # hazard-rate growth per year in use
    risk_weight_major: float = 2.0 / 3.0
    risk_band_edges: tuple[float, float, float, float] = (5.0, 50.0, 150.0, 400.0)
    risk_variance: float = 0.001
    tolerability_risk_weight: float = 0.6
    tolerability_utility_weight: float = 0.4
    tolerability_variance: float = 0.01
    perception_activations: tuple[float, float, float] = (0.6, 0.5, 0.8)  # media, warnings, gov
    perception_leak: float = 0.02


@dataclass(frozen=True)
class ScenarioConfig:
    product: str = "product"
    testing: TestingConfig = TestingConfig()
    manufacturer: ManufacturerConfig = ManufacturerConfig()
    usage: UsageConfig = UsageConfig()
    hazard_injury: HazardInjuryConfig = HazardInjuryConfig()
    population: PopulationConfig = PopulationConfig()
    perception: PerceptionConfig = PerceptionConfig()
    utility: str = "medium"
    calibration: Calibration = Calibration()
    # per-node binning requests: (node, {"bins": N, "scheme": ..., "eps": ...})
    binning: tuple[tuple[str, tuple[tuple[str, object], ...]], ...] = ()

    def validate(self) -> None:
        t = self.testing
        if t.strategy not in STRATEGY_STATES:
            raise InvalidConfig(f"testing.strategy {t.strategy!r} not one of {STRATEGY_STATES}")
        if t.prior_alpha <= 0 or t.prior_beta <= 0:
            raise InvalidConfig("testing prior parameters must be positive")
        if t.demands_tested is not None:
            t.demands_tested.validate("testing.demands_tested")
            if t.hazards_observed is not None:
                if t.hazards_observed < 0:
                    raise InvalidConfig("testing.hazards_observed must be >= 0")
                if t.hazards_observed > t.demands_tested.support_hi():
                    raise InvalidConfig("testing.hazards_observed exceeds demands tested")
        m = self.manufacturer
        for value, states, name in (
            (m.years_in_operation, YEARS_STATES, "years_in_operation"),
            (m.country_safety_record, RECORD_STATES, "country_safety_record"),
            (m.customer_satisfaction, SATISFACTION_STATES, "customer_satisfaction"),
            (m.design_change, DESIGN_STATES, "design_change"),
        ):
            if value not in states:
                raise InvalidConfig(f"manufacturer.{name} {value!r} not one of {states}")
        u = self.usage
        if len(u.usage_profile) != 3 or any(p < 0 for p in u.usage_profile):
            raise InvalidConfig("usage_profile needs 3 non-negative weights")
        if abs(sum(u.usage_profile) - 1.0) > 1e-9:
            raise InvalidConfig(f"usage_profile sums to {sum(u.usage_profile)!r}, expected 1")
        u.demands_per_lifetime.validate("usage.demands_per_lifetime")
        if u.years_in_use < 0:
            raise InvalidConfig("usage.years_in_use must be >= 0")
        h = self.hazard_injury
        for name, v in (
            ("p_uncontrolled_major", h.p_uncontrolled_major),
            ("p_uncontrolled_minor", h.p_uncontrolled_minor),
            ("control_present_prob", h.control_present_prob),
            ("control_effectiveness", h.control_effectiveness),
        ):
            if not 0.0 <= v <= 1.0:
                raise InvalidConfig(f"hazard_injury.{name} must be in [0, 1], got {v}")
        p = self.population
        p.n_instances.validate("population.n_instances")
        n_hi = p.n_instances.support_hi()
        for name, obs in (
            ("observed_major_injury_instances", p.observed_major_injury_instances),
            ("observed_minor_injury_instances", p.observed_minor_injury_instances),
        ):
            if obs is not None and not 0 <= obs <= n_hi:
                raise InvalidConfig(f"population.{name} {obs} outside [0, {n_hi}]")
        if self.utility not in FIVE_LEVELS:
            raise InvalidConfig(f"utility {self.utility!r} not one of {FIVE_LEVELS}")

    # -- JSON ---------------------------------------------------------------

    @classmethod
    def from_json(cls, doc: Mapping) -> "ScenarioConfig":
        try:
            return cls._from_json(doc)
        except InvalidConfig:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad scenario config: {exc}") from exc

    @classmethod
    def _from_json(cls, doc: Mapping) -> "ScenarioConfig":
        version = doc.get("schema_version", CONFIG_SCHEMA_VERSION)
        if version != CONFIG_SCHEMA_VERSION:
            raise InvalidConfig(f"unsupported schema_version {version!r}")
        t = doc.get("testing") or {}
        testing = TestingConfig(
            demands_tested=Spread.coerce(t["demands_tested"]) if t.get("demands_tested") is not None else None,
            hazards_observed=int(t["hazards_observed"]) if t.get("hazards_observed") is not None else None,
            strategy=t.get("strategy", "typical-of-normal-use"),
            prior_alpha=float(t.get("prior_alpha", 1.0)),
            prior_beta=float(t.get("prior_beta", 1.0)),
        )
        manufacturer = ManufacturerConfig(**(doc.get("manufacturer") or {}))
        u = doc.get("usage") or {}
        profile_raw = u.get("usage_profile", {"as-intended": 1.0})
        if isinstance(profile_raw, Mapping):
            profile = tuple(float(profile_raw.get(s, 0.0)) for s in USAGE_STATES)
        else:
            profile = tuple(float(x) for x in profile_raw)
        usage = UsageConfig(
            usage_profile=profile,
            demands_per_lifetime=Spread.coerce(u.get("demands_per_lifetime", 100)),
            years_in_use=int(u.get("years_in_use", 0)),
        )
        hazard = HazardInjuryConfig(**{k: float(v) for k, v in (doc.get("hazard_injury") or {}).items()})
        pop = doc.get("population") or {}
        population = PopulationConfig(
            n_instances=Spread.coerce(pop.get("n_instances", 1000)),
            observed_major_injury_instances=(
                int(pop["observed_major_injury_instances"])
                if pop.get("observed_major_injury_instances") is not None
                else None
            ),
            observed_minor_injury_instances=(
                int(pop["observed_minor_injury_instances"])
                if pop.get("observed_minor_injury_instances") is not None
                else None
            ),
        )
        per = doc.get("perception") or {}

        def present(key: str) -> bool:
            v = per.get(key, False)
            if isinstance(v, str):
                return v.lower() in {"present", "yes", "true"}
            return bool(v)

        perception = PerceptionConfig(
            media_stories=present("media_stories"),
            warnings=present("warnings"),
            government_intervention_announced=present("government_intervention_announced"),
        )
        cal_doc = doc.get("calibration") or {}
        defaults = Calibration()
        cal_kwargs = {}
        for f_name in defaults.__dataclass_fields__:
            if f_name in cal_doc:
                v = cal_doc[f_name]
                cal_kwargs[f_name] = tuple(v) if isinstance(v, (list, tuple)) else float(v)
        binning = tuple(
            (str(entry["node"]), tuple(sorted((k, v) for k, v in entry.items() if k != "node")))
            for entry in doc.get("binning", [])
        )
        config = cls(
            product=str(doc.get("product", "product")),
            testing=testing,
            manufacturer=manufacturer,
            usage=usage,
            hazard_injury=hazard,
            population=population,
            perception=perception,
            utility=str(doc.get("utility", "medium")),
            calibration=replace(defaults, **cal_kwargs),
            binning=binning,
        )
        config.validate()
        return config

    def to_json(self) -> dict:
        t = self.testing
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "product": self.product,
            "testing": {
                "demands_tested": t.demands_tested.to_json() if t.demands_tested else None,
                "hazards_observed": t.hazards_observed,
                "strategy": t.strategy,
                "prior_alpha": t.prior_alpha,
                "prior_beta": t.prior_beta,
            },
            "manufacturer": asdict(self.manufacturer),
            "usage": {
                "usage_profile": dict(zip(USAGE_STATES, self.usage.usage_profile)),
                "demands_per_lifetime": self.usage.demands_per_lifetime.to_json(),
                "years_in_use": self.usage.years_in_use,
            },
            "hazard_injury": asdict(self.hazard_injury),
            "population": {
                "n_instances": self.population.n_instances.to_json(),
                "observed_major_injury_instances": self.population.observed_major_injury_instances,
                "observed_minor_injury_instances": self.population.observed_minor_injury_instances,
            },
            "perception": {
                "media_stories": "present" if self.perception.media_stories else "absent",
                "warnings": "present" if self.perception.warnings else "absent",
                "government_intervention_announced": (
                    "present" if self.perception.government_intervention_announced else "absent"
                ),
            },
            "utility": self.utility,
            "calibration": {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in asdict(self.calibration).items()
            },
            "binning": [{"node": node, **dict(opts)} for node, opts in self.binning],
        }

    def sha256(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_scenario(path_or_doc) -> ScenarioConfig:
    if isinstance(path_or_doc, Mapping):
        return ScenarioConfig.from_json(path_or_doc)
    with open(path_or_doc, "r", encoding="utf-8") as fh:
        return ScenarioConfig.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Small pure operations (also wired into the template)
# ---------------------------------------------------------------------------

def hazard_occurrence_prob(p_per_demand: float, n_demands: float) -> float:
    """Probability the hazard manifests at least once in n demands: 1-(1-p)^n."""
    if not 0.0 <= p_per_demand <= 1.0:
        raise InvalidConfig(f"p_per_demand must be in [0, 1], got {p_per_demand}")
    if n_demands < 0:
        raise InvalidConfig(f"n_demands must be >= 0, got {n_demands}")
    return float(graph._exposure(p_per_demand, n_demands))


def injury_prob(
    p_occurrence: float,
    p_uncontrolled_injury: float,
    control_present_prob: float,
    control_effectiveness: float,
) -> float:
    for name, v in (
        ("p_occurrence", p_occurrence),
        ("p_uncontrolled_injury", p_uncontrolled_injury),
        ("control_present_prob", control_present_prob),
        ("control_effectiveness", control_effectiveness),
    ):
        if not 0.0 <= v <= 1.0:
            raise InvalidConfig(f"{name} must be in [0, 1], got {v}")
    return p_occurrence * p_uncontrolled_injury * (1.0 - control_present_prob * control_effectiveness)


def _mean_of(dist) -> float:
    if isinstance(dist, infer.Posterior):
        m = dist.mean_value()
        if m is None:
            raise InvalidConfig(f"{dist.node}: posterior has no numeric mean")
        return m
    if isinstance(dist, Moments):
        return dist.mean
    return float(dist)


def expected_injury_counts(n_instances, p_major, p_minor) -> tuple[float, float]:
    """Mean injured-instance counts E[n]*E[p] (instances independent of p)."""
    n = _mean_of(n_instances)
    return n * _mean_of(p_major), n * _mean_of(p_minor)


def usage_rate_multiplier(profile_state: str, years_in_use: float, calibration: Calibration = Calibration()) -> float:
    """Hazard-rate multiplier for a usage class after wear and tear."""
    m = calibration.usage_multipliers[USAGE_STATES.index(profile_state)]
    return m * (1.0 + calibration.wear_rate) ** years_in_use


def _mass_and_values(dist) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dist, infer.Posterior):
        vals = np.asarray(
            dist.space.bins.representatives()
            if isinstance(dist.space, BinnedSpace)
            else dist.space.values
        )
        return np.asarray(dist.mass), vals
    return np.asarray([1.0]), np.asarray([float(dist)])


def _band_mixture(scores: np.ndarray, weights: np.ndarray, edges, variance: float) -> dict[str, float]:
    from .discretize import DiscreteSpace as _DS  # local alias, avoids confusion with graph kinds

    bands = np.searchsorted(np.asarray(edges), scores, side="right")
    centres = (np.arange(len(edges) + 1) + 0.5) / (len(edges) + 1)
    from . import discretize as _disc

    per_band = _disc._tnormal_masses(
        centres, variance, 0.0, 1.0, _DS("risk", FIVE_LEVELS, None)
    )
    mass = per_band[:, bands] @ weights
    mass = mass / mass.sum()
    return {label: float(m) for label, m in zip(FIVE_LEVELS, mass)}


def classify_risk_level(
    p_major,
    p_minor,
    n_instances,
    calibration: Calibration = Calibration(),
) -> dict[str, float]:
    """Distribution over risk levels from the injury probabilities and the
    population scale: bands are on the severity-weighted expected number of
    injured instances."""
    w = calibration.risk_weight_major
    m_major, v_major = _mass_and_values(p_major)
    m_minor, v_minor = _mass_and_values(p_minor)
    n = _mean_of(n_instances)
    score = n * (w * v_major[:, None] + (1.0 - w) * v_minor[None, :])
    weights = (m_major[:, None] * m_minor[None, :]).reshape(-1)
    return _band_mixture(score.reshape(-1), weights, calibration.risk_band_edges, calibration.risk_variance)


def tolerability_and_recommendation(
    risk_level: Mapping[str, float] | infer.Posterior,
    utility: str,
    calibration: Calibration = Calibration(),
) -> tuple[dict[str, float], dict[str, float]]:
    """Tolerability decreases in risk and increases in utility; the
    recommendation to intervene is the probability tolerability is low."""
    if isinstance(risk_level, infer.Posterior):
        risk_mass = {s: float(m) for s, m in zip(risk_level.space.labels, risk_level.mass)}
    else:
        risk_mass = dict(risk_level)
    mids = {s: (i + 0.5) / len(FIVE_LEVELS) for i, s in enumerate(FIVE_LEVELS)}
    u = mids[utility]
    from . import discretize as _disc

    tol = np.zeros(len(FIVE_LEVELS))
    for state, m in risk_mass.items():
        mu = (
            calibration.tolerability_risk_weight * (1.0 - mids[state])
            + calibration.tolerability_utility_weight * u
        )
        col = _disc._tnormal_masses(
            np.asarray([mu]),
            calibration.tolerability_variance,
            0.0,
            1.0,
            DiscreteSpace("tolerability", FIVE_LEVELS, None),
        )[:, 0]
        tol += m * col
    tol = tol / tol.sum()
    p_intervene = float(tol[0] + tol[1])
    return (
        {s: float(v) for s, v in zip(FIVE_LEVELS, tol)},
        {"no": 1.0 - p_intervene, "yes": p_intervene},
    )


def perception_change(
    media_stories: bool,
    warnings: bool,
    government_intervention_announced: bool,
    calibration: Calibration = Calibration(),
) -> dict[str, float]:
    """Noisy-OR of the three perception drivers."""
    keep = 1.0 - calibration.perception_leak
    for active, act in zip(
        (media_stories, warnings, government_intervention_announced),
        calibration.perception_activations,
    ):
        if active:
            keep *= 1.0 - act
    return {"no": keep, "yes": 1.0 - keep}


# ---------------------------------------------------------------------------
# Template construction
# ---------------------------------------------------------------------------

# Configured discrete inputs keep a sliver of mass on their other states so
# what-if evidence can move them without making the joint impossible.
SOFT_EPS = 1e-6


def _point_table(states: Sequence[str], state: str) -> TableCpd:
    k = len(states)
    spread = SOFT_EPS / (k - 1)
    row = tuple(1.0 - SOFT_EPS if s == state else spread for s in states)
    return TableCpd((), (row,))


def _bernoulli_table(p_yes: float) -> TableCpd:
    p = min(max(p_yes, SOFT_EPS), 1.0 - SOFT_EPS)
    return TableCpd((), ((1.0 - p, p),))


def _count_prior(spread: Spread, n_max: int) -> graph.CpdExpr:
    if spread.point is not None:
        return DeterministicCpd(const(spread.point))
    if spread.interval is not None:
        return UniformCpd(float(spread.interval[0]), float(spread.interval[1]))
    return TNormalCpd(const(spread.mean), spread.sd**2, 0.0, float(n_max))


def _quality_scale_expr(calibration: Calibration) -> graph.DetExpr:
    # exp(slope * (0.5 - quality)); quality midpoints live on [0, 1]
    return pow_(const(E), mul(const(calibration.quality_slope), sub(const(0.5), ref("manufacturer_quality"))))


def build_product_risk_bn(config: ScenarioConfig) -> ModelSpec:
    """Instantiate the full template for one scenario.

    Node layout (arrows = graph edges):
      testing fragment   demands_tested, p_hazard_testing -> hazards_observed;
                          strategy + manufacturer_quality revise the rate
      exposure           usage class, wear, demands -> hazard_occurrence
      injury chain       occurrence + control -> p_major/minor -> instance counts
      verdicts           counts -> risk_level; + utility -> tolerability -> recommendation
      perception         media/warnings/intervention -> perception_change
    """
    config.validate()
    cal = config.calibration
    t = config.testing
    nodes: list[NodeSpec] = []
    edges: list[tuple[str, str]] = []

    def node(nid: str, kind, cpd) -> None:
        nodes.append(NodeSpec(nid, kind, cpd))
        for parent in sorted(cpd.refs()):
            edges.append((parent, nid))

    demands_spread = t.demands_tested if t.demands_tested is not None else Spread(point=1)
    d_hi = demands_spread.support_hi()
    node("p_hazard_testing", Continuous(0.0, 1.0), BetaCpd(t.prior_alpha, t.prior_beta))
    node("demands_tested", Count(d_hi), _count_prior(demands_spread, d_hi))
    node("hazards_observed", Count(d_hi), BinomialCpd(ref("demands_tested"), ref("p_hazard_testing")))
    node("testing_strategy", Ranked(STRATEGY_STATES), _point_table(STRATEGY_STATES, t.strategy))

    m = config.manufacturer
    node("years_in_operation", Ranked(YEARS_STATES), _point_table(YEARS_STATES, m.years_in_operation))
    node("country_safety_record", Ranked(RECORD_STATES), _point_table(RECORD_STATES, m.country_safety_record))
    node("customer_satisfaction", Ranked(SATISFACTION_STATES), _point_table(SATISFACTION_STATES, m.customer_satisfaction))
    node("design_change", Ranked(DESIGN_STATES), _point_table(DESIGN_STATES, m.design_change))
    quality_mean = mul(
        const(0.25),
        add(
            ref("years_in_operation"),
            ref("country_safety_record"),
            ref("customer_satisfaction"),
            ref("design_change"),
        ),
    )
    node(
        "manufacturer_quality",
        Ranked(FIVE_LEVELS),
        TNormalCpd(quality_mean, cal.manufacturer_variance, 0.0, 1.0),
    )

    scale = _quality_scale_expr(cal)
    cases = tuple(
        (
            state,
            DeterministicCpd(min_(const(1.0), mul(ref("p_hazard_testing"), mul(const(mult), scale)))),
        )
        for state, mult in zip(STRATEGY_STATES, cal.strategy_multipliers)
    )
    node("p_hazard_operational", Continuous(0.0, 1.0), PartitionedCpd("testing_strategy", cases))

    u = config.usage
    node(
        "particular_product_usage",
        Labelled(USAGE_STATES),
        TableCpd((), (tuple(u.usage_profile),)),
    )
    y_hi = max(1, u.years_in_use)
    node("years_in_use", Count(y_hi), DeterministicCpd(const(u.years_in_use)))
    wear = pow_(const(1.0 + cal.wear_rate), ref("years_in_use"))
    usage_cases = tuple(
        (
            state,
            DeterministicCpd(min_(const(1.0), mul(ref("p_hazard_operational"), mul(const(mult), wear)))),
        )
        for state, mult in zip(USAGE_STATES, cal.usage_multipliers)
    )
    node("effective_hazard_rate", Continuous(0.0, 1.0), PartitionedCpd("particular_product_usage", usage_cases))

    n_hi = u.demands_per_lifetime.support_hi()
    node("number_of_demands", Count(n_hi), _count_prior(u.demands_per_lifetime, n_hi))
    node(
        "hazard_occurrence",
        Continuous(0.0, 1.0),
        DeterministicCpd(exposure(ref("effective_hazard_rate"), ref("number_of_demands"))),
    )

    h = config.hazard_injury
    node("control_present", Boolean(), _bernoulli_table(h.control_present_prob))
    for name, p_unc in (("p_major_injury", h.p_uncontrolled_major), ("p_minor_injury", h.p_uncontrolled_minor)):
        with_control = DeterministicCpd(
            mul(ref("hazard_occurrence"), const(p_unc * (1.0 - h.control_effectiveness)))
        )
        without_control = DeterministicCpd(mul(ref("hazard_occurrence"), const(p_unc)))
        node(
            name,
            Continuous(0.0, 1.0),
            PartitionedCpd("control_present", (("no", without_control), ("yes", with_control))),
        )

    pop = config.population
    i_hi = pop.n_instances.support_hi()
    node("number_of_instances", Count(i_hi), _count_prior(pop.n_instances, i_hi))
    node("major_injury_instances", Count(i_hi), BinomialCpd(ref("number_of_instances"), ref("p_major_injury")))
    node("minor_injury_instances", Count(i_hi), BinomialCpd(ref("number_of_instances"), ref("p_minor_injury")))

    # Risk is scored on the severity-weighted expected number of injured
    # instances.  The weighted rate is deterministic in (occurrence, control),
    # which keeps the elimination cliques small.
    w = cal.risk_weight_major
    rate_with = w * h.p_uncontrolled_major * (1 - h.control_effectiveness) + (1 - w) * h.p_uncontrolled_minor * (
        1 - h.control_effectiveness
    )
    rate_without = w * h.p_uncontrolled_major + (1 - w) * h.p_uncontrolled_minor
    node(
        "severity_weighted_injury_prob",
        Continuous(0.0, 1.0),
        PartitionedCpd(
            "control_present",
            (
                ("no", DeterministicCpd(mul(ref("hazard_occurrence"), const(rate_without)))),
                ("yes", DeterministicCpd(mul(ref("hazard_occurrence"), const(rate_with)))),
            ),
        ),
    )
    node(
        "injury_risk_score",
        Continuous(0.0, float(i_hi)),
        DeterministicCpd(mul(ref("number_of_instances"), ref("severity_weighted_injury_prob"))),
    )
    node("risk_level", Ranked(FIVE_LEVELS), RankedBandCpd(ref("injury_risk_score"), cal.risk_band_edges, cal.risk_variance))

    node("utility", Ranked(FIVE_LEVELS), _point_table(FIVE_LEVELS, config.utility))
    tol_mean = add(
        mul(const(cal.tolerability_risk_weight), sub(const(1.0), ref("risk_level"))),
        mul(const(cal.tolerability_utility_weight), ref("utility")),
    )
    node("risk_tolerability", Ranked(FIVE_LEVELS), TNormalCpd(tol_mean, cal.tolerability_variance, 0.0, 1.0))
    # intervene exactly when tolerability is low or very low
    rec_rows = tuple((0.0, 1.0) if s in ("very-low", "low") else (1.0, 0.0) for s in FIVE_LEVELS)
    node("recommendation", Boolean(), TableCpd(("risk_tolerability",), rec_rows))

    p = config.perception
    node("media_stories", Boolean(), _bernoulli_table(1.0 if p.media_stories else 0.0))
    node("warnings", Boolean(), _bernoulli_table(1.0 if p.warnings else 0.0))
    node(
        "government_intervention_announced",
        Boolean(),
        _bernoulli_table(1.0 if p.government_intervention_announced else 0.0),
    )
    rows = []
    acts = cal.perception_activations
    for mi in (0, 1):
        for wi in (0, 1):
            for gi in (0, 1):
                keep = (1.0 - cal.perception_leak)
                keep *= (1.0 - acts[0]) ** mi * (1.0 - acts[1]) ** wi * (1.0 - acts[2]) ** gi
                rows.append((keep, 1.0 - keep))
    node(
        "perception_change",
        Boolean(),
        TableCpd(("media_stories", "warnings", "government_intervention_announced"), tuple(rows)),
    )

    return ModelSpec(nodes=tuple(nodes), edges=tuple(edges))


def scenario_binning(config: ScenarioConfig, bins: int = 100, count_bins: int = 200) -> BinningConfig:
    """Binning for a scenario's network: point/interval count priors get
    support-aware bins so their mass sits in exact ranges."""
    overrides: dict[str, dict] = {}

    def focus_for(name: str, spread: Spread) -> None:
        if spread.point is not None:
            overrides[name] = {"focus": (spread.point, spread.point)}
        elif spread.interval is not None:
            overrides[name] = {"focus": spread.interval, "focus_bins": 32}

    t = config.testing
    focus_for("demands_tested", t.demands_tested if t.demands_tested is not None else Spread(point=1))
    focus_for("number_of_demands", config.usage.demands_per_lifetime)
    focus_for("number_of_instances", config.population.n_instances)
    overrides["years_in_use"] = {"focus": (config.usage.years_in_use, config.usage.years_in_use)}
    # the risk score spans 0..n_instances; resolve the band edges finely
    overrides["injury_risk_score"] = {"bins": max(250, bins), "scheme": "log", "eps": 0.01}
    for node, opts in config.binning:  # per-node requests from the scenario file win
        overrides[node] = {**overrides.get(node, {}), **dict(opts)}
    return BinningConfig(default_bins=bins, count_bins=count_bins, overrides=overrides)


# ---------------------------------------------------------------------------
# Fragments (stand-alone pieces of the template, used for focused analyses)
# ---------------------------------------------------------------------------

def build_testing_fragment(
    demands: AmountLike,
    strategy: str = "typical-of-normal-use",
    prior_alpha: float = 1.0,
    prior_beta: float = 1.0,
    calibration: Calibration = Calibration(),
) -> ModelSpec:
    """Testing-evidence fragment: prior rate, demands, observed hazards, and
    the strategy-revised operational rate."""
    spread = Spread.coerce(demands)
    d_hi = spread.support_hi()
    nodes = []
    edges = []

    def node(nid, kind, cpd):
        nodes.append(NodeSpec(nid, kind, cpd))
        for parent in sorted(cpd.refs()):
            edges.append((parent, nid))

    node("p_hazard_testing", Continuous(0.0, 1.0), BetaCpd(prior_alpha, prior_beta))
    node("demands_tested", Count(d_hi), _count_prior(spread, d_hi))
    node("hazards_observed", Count(d_hi), BinomialCpd(ref("demands_tested"), ref("p_hazard_testing")))
    node("testing_strategy", Ranked(STRATEGY_STATES), _point_table(STRATEGY_STATES, strategy))
    cases = tuple(
        (state, DeterministicCpd(min_(const(1.0), mul(ref("p_hazard_testing"), const(mult)))))
        for state, mult in zip(STRATEGY_STATES, calibration.strategy_multipliers)
    )
    node("p_hazard_operational", Continuous(0.0, 1.0), PartitionedCpd("testing_strategy", cases))
    return ModelSpec(nodes=tuple(nodes), edges=tuple(edges))


def testing_fragment_binning(demands: AmountLike, bins: int = 100, count_bins: int = 200) -> BinningConfig:
    spread = Spread.coerce(demands)
    overrides = {}
    if spread.point is not None:
        overrides["demands_tested"] = {"focus": (spread.point, spread.point)}
    elif spread.interval is not None:
        overrides["demands_tested"] = {"focus": spread.interval, "focus_bins": 32}
    return BinningConfig(default_bins=bins, count_bins=count_bins, overrides=overrides)


def build_count_fragment(
    n_instances: AmountLike,
    p_major_mean: float,
    p_minor_mean: float,
    p_sd: float = 0.004,
) -> ModelSpec:
    """Instance-count fragment: population size and injury-probability
    distributions feeding the two observable count nodes."""
    spread = Spread.coerce(n_instances)
    i_hi = spread.support_hi()
    nodes = []
    edges = []

    def node(nid, kind, cpd):
        nodes.append(NodeSpec(nid, kind, cpd))
        for parent in sorted(cpd.refs()):
            edges.append((parent, nid))

    node("number_of_instances", Count(i_hi), _count_prior(spread, i_hi))
    node("p_major_injury", Continuous(0.0, 1.0), TNormalCpd(const(p_major_mean), p_sd**2, 0.0, 1.0))
    node("p_minor_injury", Continuous(0.0, 1.0), TNormalCpd(const(p_minor_mean), (2 * p_sd) ** 2, 0.0, 1.0))
    node("major_injury_instances", Count(i_hi), BinomialCpd(ref("number_of_instances"), ref("p_major_injury")))
    node("minor_injury_instances", Count(i_hi), BinomialCpd(ref("number_of_instances"), ref("p_minor_injury")))
    return ModelSpec(nodes=tuple(nodes), edges=tuple(edges))


def build_perception_fragment(
    media_stories: bool,
    warnings: bool,
    government_intervention_announced: bool,
    calibration: Calibration = Calibration(),
) -> ModelSpec:
    nodes = []
    edges = []

    def node(nid, kind, cpd):
        nodes.append(NodeSpec(nid, kind, cpd))
        for parent in sorted(cpd.refs()):
            edges.append((parent, nid))

    node("media_stories", Boolean(), _bernoulli_table(1.0 if media_stories else 0.0))
    node("warnings", Boolean(), _bernoulli_table(1.0 if warnings else 0.0))
    node(
        "government_intervention_announced",
        Boolean(),
        _bernoulli_table(1.0 if government_intervention_announced else 0.0),
    )
    acts = calibration.perception_activations
    rows = []
    for mi in (0, 1):
        for wi in (0, 1):
            for gi in (0, 1):
                keep = (1.0 - calibration.perception_leak)
                keep *= (1.0 - acts[0]) ** mi * (1.0 - acts[1]) ** wi * (1.0 - acts[2]) ** gi
                rows.append((keep, 1.0 - keep))
    node(
        "perception_change",
        Boolean(),
        TableCpd(("media_stories", "warnings", "government_intervention_announced"), tuple(rows)),
    )
    return ModelSpec(nodes=tuple(nodes), edges=tuple(edges))


# ---------------------------------------------------------------------------
# Assessment
# ---------------------------------------------------------------------------

REPORT_NODES = (
    "p_hazard_testing",
    "p_hazard_operational",
    "effective_hazard_rate",
    "hazard_occurrence",
    "p_major_injury",
    "p_minor_injury",
    "major_injury_instances",
    "minor_injury_instances",
    "risk_level",
    "risk_tolerability",
    "recommendation",
    "perception_change",
)


@dataclass(frozen=True)
class AssessmentReport:
    product: str
    moments: dict[str, Moments]
    distributions: dict[str, dict[str, float]]
    major_injury_count_mean: float
    minor_injury_count_mean: float
    risk_level_mode: str
    p_intervene: float
    intervention_recommended: bool
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "product": self.product,
            "posteriors": {
                name: {
                    "mean": m.mean,
                    "variance": m.variance,
                    "p5": m.p5,
                    "p50": m.p50,
                    "p95": m.p95,
                }
                for name, m in self.moments.items()
            },
            "distributions": self.distributions,
            "injury_counts": {
                "major_mean": self.major_injury_count_mean,
                "minor_mean": self.minor_injury_count_mean,
            },
            "verdict": {
                "risk_level_mode": self.risk_level_mode,
                "p_intervene": self.p_intervene,
                "intervention_recommended": self.intervention_recommended,
            },
            "provenance": self.provenance,
        }


def scenario_evidence(config: ScenarioConfig) -> dict[str, infer.EvidenceValue]:
    ev: dict[str, infer.EvidenceValue] = {}
    t = config.testing
    if t.demands_tested is not None and t.hazards_observed is not None:
        ev["hazards_observed"] = infer.Point(float(t.hazards_observed))
    pop = config.population
    if pop.observed_major_injury_instances is not None:
        ev["major_injury_instances"] = infer.Point(float(pop.observed_major_injury_instances))
    if pop.observed_minor_injury_instances is not None:
        ev["minor_injury_instances"] = infer.Point(float(pop.observed_minor_injury_instances))
    return ev


def assess(
    config: ScenarioConfig,
    bins: int = 100,
    count_bins: int = 200,
    seed: int = 0,
    extra_evidence: Mapping | None = None,
    compiled: infer.CompiledModel | None = None,
) -> AssessmentReport:
    """Full scenario assessment; a pure function of its inputs."""
    config.validate()
    if compiled is None:
        model = build_product_risk_bn(config)
        compiled = infer.compile_model(model, scenario_binning(config, bins, count_bins))
    evidence = scenario_evidence(config)
    if extra_evidence:
        for k, v in extra_evidence.items():
            evidence[k] = infer.coerce_evidence(compiled.node(k).space, v)
    posteriors = infer.posterior(compiled, evidence, REPORT_NODES)
    by_name = {p.node: p for p in posteriors}

    moments = {name: p.moments for name, p in by_name.items() if p.moments is not None}
    distributions = {
        name: {s: float(v) for s, v in zip(p.space.labels, p.mass)}
        for name, p in by_name.items()
        if isinstance(p.space, DiscreteSpace)
    }
    risk = by_name["risk_level"]
    rec = distributions["recommendation"]
    p_intervene = rec["yes"]
    return AssessmentReport(
        product=config.product,
        moments=moments,
        distributions=distributions,
        major_injury_count_mean=moments["major_injury_instances"].mean,
        minor_injury_count_mean=moments["minor_injury_instances"].mean,
        risk_level_mode=str(risk.mode()),
        p_intervene=p_intervene,
        intervention_recommended=p_intervene > 0.5,
        provenance={
            "config_sha256": config.sha256(),
            "bins": bins,
            "count_bins": count_bins,
            "seed": seed,
            "engine_version": ENGINE_VERSION,
        },
    )
