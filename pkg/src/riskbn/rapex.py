"""RAPEX baseline: injury-scenario probability, the EU risk matrix, and the
guideline's sensitivity analysis.

The matrix is shipped as a data constant transcribed from the EU guidelines
(data/rapex_matrix.json).  Probability-band boundaries belong to the band of
higher probabilities, so a value of exactly 1/1000 falls in the "> 1/1000"
band.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .errors import BadProbability, EmptyScenario, OutOfRange

RISK_CLASSES = ("Low", "Medium", "High", "Serious")


@dataclass(frozen=True)
class InjuryScenario:
    description: str
    steps: tuple[tuple[str, float], ...]
    severity: int

    def __post_init__(self):
        if not self.steps:
            raise EmptyScenario("an injury scenario needs at least one step")
        for label, p in self.steps:
            if not 0.0 < p <= 1.0:
                raise BadProbability(f"step {label!r} probability {p} not in (0, 1]")
        if self.severity not in (1, 2, 3, 4):
            raise OutOfRange(f"severity {self.severity} not in 1..4")

    @classmethod
    def from_json(cls, doc) -> "InjuryScenario":
        steps = tuple((str(s["label"]), float(s["probability"])) for s in doc["steps"])
        return cls(
            description=str(doc.get("description", "")),
            steps=steps,
            severity=int(doc["severity"]),
        )

    def to_json(self) -> dict:
        return {
            "description": self.description,
            "steps": [{"label": l, "probability": p} for l, p in self.steps],
            "severity": self.severity,
        }


@dataclass(frozen=True)
class MatrixBand:
    label: str
    lower: float  # band covers [lower, upper of the previous band)
    classes: tuple[str, str, str, str]  # per severity 1..4


def _load_matrix() -> tuple[MatrixBand, ...]:
    with resources.files("riskbn.data").joinpath("rapex_matrix.json").open("r") as fh:
        doc = json.load(fh)
    bands = tuple(
        MatrixBand(label=row["label"], lower=float(row["lower"]), classes=tuple(row["classes"]))
        for row in doc["bands"]
    )
    return bands


MATRIX_BANDS = _load_matrix()


def scenario_probability(steps: Sequence[tuple[str, float]]) -> float:
    """Product of the step probabilities (steps are treated as independent)."""
    steps = tuple(steps)
    if not steps:
        raise EmptyScenario("no steps")
    out = 1.0
    for label, p in steps:
        if not 0.0 < p <= 1.0:
            raise BadProbability(f"step {label!r} probability {p} not in (0, 1]")
        out *= p
    return out


def probability_band(probability: float) -> MatrixBand:
    if not 0.0 < probability <= 1.0:
        raise OutOfRange(f"probability {probability} not in (0, 1]")
    for band in MATRIX_BANDS:  # descending lower bounds; boundary joins the higher band
        if probability >= band.lower:
            return band
    return MATRIX_BANDS[-1]


def risk_from_matrix(probability: float, severity: int) -> str:
    """Risk class for an overall injury probability and a severity level 1..4."""
    if severity not in (1, 2, 3, 4):
        raise OutOfRange(f"severity {severity} not in 1..4")
    band = probability_band(probability)
    return band.classes[severity - 1]


@dataclass(frozen=True)
class RapexAssessment:
    scenario: InjuryScenario
    total_probability: float
    band_label: str
    risk_class: str

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "total_probability": self.total_probability,
            "band": self.band_label,
            "risk_class": self.risk_class,
        }


def assess_scenario(scenario: InjuryScenario) -> RapexAssessment:
    p = scenario_probability(scenario.steps)
    band = probability_band(p)
    return RapexAssessment(
        scenario=scenario,
        total_probability=p,
        band_label=band.label,
        risk_class=band.classes[scenario.severity - 1],
    )


@dataclass(frozen=True)
class StabilityReport:
    baseline_class: str
    classes: tuple[str, ...]  # distinct classes seen across variants, sorted
    stable: bool
    variants: tuple[dict, ...]

    def to_json(self) -> dict:
        return {
            "baseline_class": self.baseline_class,
            "classes": list(self.classes),
            "stable": self.stable,
            "variants": list(self.variants),
        }


def sensitivity_analysis(
    scenario: InjuryScenario, factor: float, severity_shift: int = 1
) -> StabilityReport:
    """Re-run the assessment across every combination of each step probability
    multiplied or divided by ``factor`` (clamped to (0, 1]) and the severity
    shifted by up to ``severity_shift``; stable means every variant keeps the
    baseline class."""
    if factor <= 0:
        raise BadProbability(f"factor must be positive, got {factor}")
    baseline = assess_scenario(scenario).risk_class
    shifts = sorted({0, -severity_shift, severity_shift})
    variants = []
    seen = set()
    for directions in itertools.product((1, -1), repeat=len(scenario.steps)):
        probs = []
        for (label, p), d in zip(scenario.steps, directions):
            q = p * factor if d > 0 else p / factor
            probs.append((label, min(max(q, 1e-300), 1.0)))
        total = scenario_probability(probs)
        for shift in shifts:
            severity = min(max(scenario.severity + shift, 1), 4)
            cls = risk_from_matrix(total, severity)
            seen.add(cls)
            variants.append(
                {
                    "directions": list(directions),
                    "severity": severity,
                    "probability": total,
                    "risk_class": cls,
                }
            )
    return StabilityReport(
        baseline_class=baseline,
        classes=tuple(sorted(seen)),
        stable=all(v["risk_class"] == baseline for v in variants),
        variants=tuple(variants),
    )
