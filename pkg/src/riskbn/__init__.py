"""Product risk assessment on hybrid Bayesian networks, with a RAPEX baseline."""

from .discretize import BinningConfig, IntervalSet, Moments, make_bins, summarize
from .errors import (
    BadCount,
    BadProbability,
    BadSupport,
    CycleDetected,
    DegenerateWeights,
    DuplicateId,
    EmptyScenario,
    ImpossibleEvidence,
    InvalidConfig,
    OutOfRange,
    RiskBnError,
    UnknownNode,
    UnnormalizedPosterior,
    UnsupportedCombination,
    ValidationFailed,
)
from .graph import ModelSpec, NodeSpec, add_edge, add_node, model_from_json, model_to_json, validate
from .infer import (
    CompiledModel,
    DiscreteState,
    Interval,
    Point,
    Posterior,
    compile_model,
    posterior,
    sample_posterior,
)
from .model import (
    AssessmentReport,
    Calibration,
    ScenarioConfig,
    assess,
    build_product_risk_bn,
    classify_risk_level,
    expected_injury_counts,
    hazard_occurrence_prob,
    injury_prob,
    load_scenario,
    perception_change,
    scenario_binning,
    tolerability_and_recommendation,
)
from .rapex import (
    InjuryScenario,
    RapexAssessment,
    StabilityReport,
    risk_from_matrix,
    scenario_probability,
    sensitivity_analysis,
)

__version__ = "0.1.0"
