import itertools

import pytest
from hypothesis import given, strategies as st

from riskbn import errors, rapex
from riskbn.rapex import (
    InjuryScenario,
    MATRIX_BANDS,
    RISK_CLASSES,
    assess_scenario,
    risk_from_matrix,
    scenario_probability,
    sensitivity_analysis,
)

AXE = InjuryScenario(
    description="axe breaks and the ejected part strikes the user's head",
    steps=(
        ("axe breaking", 1 / 100),
        ("broken part hitting body", 1 / 10),
        ("broken part hitting head", 1 / 10),
    ),
    severity=2,
)


def test_axe_probability_is_exactly_1e4():
    assert scenario_probability(AXE.steps) == pytest.approx(1e-4, rel=1e-12)


def test_single_step_passthrough():
    assert scenario_probability((("major injury", 0.07),)) == 0.07


def test_unit_steps_are_neutral():
    with_units = (("a", 0.25), ("certain", 1.0), ("b", 0.5))
    assert scenario_probability(with_units) == scenario_probability((("a", 0.25), ("b", 0.5)))


def test_empty_scenario_rejected():
    with pytest.raises(errors.EmptyScenario):
        scenario_probability(())


def test_zero_probability_step_rejected():
    with pytest.raises(errors.BadProbability):
        scenario_probability((("impossible", 0.0),))
    with pytest.raises(errors.BadProbability):
        InjuryScenario("x", (("too big", 1.2),), 2)


@given(st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=1, max_size=6))
def test_probability_is_permutation_invariant_and_multiplicative(ps):
    steps = tuple((f"s{i}", p) for i, p in enumerate(ps))
    rev = tuple(reversed(steps))
    assert scenario_probability(steps) == pytest.approx(scenario_probability(rev))
    half = len(steps) // 2
    if half:
        combined = scenario_probability(steps[:half]) * scenario_probability(steps[half:])
        assert scenario_probability(steps) == pytest.approx(combined)


# ---------------------------------------------------------------------------
# Matrix
# ---------------------------------------------------------------------------

def test_matrix_anchor_high_probability_severity3():
    assert risk_from_matrix(0.07, 3) == "Serious"


def test_matrix_anchor_one_in_thousand_severity3():
    # boundary probability belongs to the higher band
    assert risk_from_matrix(0.001, 3) == "Serious"


def test_matrix_corner_low():
    assert risk_from_matrix(1e-9, 1) == "Low"


def test_matrix_monotone_in_probability_and_severity():
    rank = {c: i for i, c in enumerate(RISK_CLASSES)}
    probes = [b.lower * 1.0000001 for b in MATRIX_BANDS if b.lower > 0] + [
        b.lower for b in MATRIX_BANDS if b.lower > 0
    ] + [1e-9, 1.0]
    probes.sort()
    for severity in (1, 2, 3, 4):
        classes = [rank[risk_from_matrix(p, severity)] for p in probes]
        assert classes == sorted(classes)
    for p in probes:
        classes = [rank[risk_from_matrix(p, s)] for s in (1, 2, 3, 4)]
        assert classes == sorted(classes)


def test_matrix_rejects_out_of_range():
    with pytest.raises(errors.OutOfRange):
        risk_from_matrix(0.5, 5)
    with pytest.raises(errors.OutOfRange):
        risk_from_matrix(0.0, 2)
    with pytest.raises(errors.OutOfRange):
        risk_from_matrix(1.5, 2)


def test_band_boundary_ownership():
    assert rapex.probability_band(0.001).label == "> 1/1000"
    assert rapex.probability_band(0.00099999).label == "> 1/10000"


# ---------------------------------------------------------------------------
# Sensitivity analysis
# ---------------------------------------------------------------------------

def test_sensitivity_identity_is_stable():
    report = sensitivity_analysis(AXE, factor=1.0, severity_shift=0)
    assert report.stable
    assert report.classes == (report.baseline_class,)


def test_sensitivity_enumerates_all_variants():
    report = sensitivity_analysis(AXE, factor=2.0, severity_shift=1)
    assert len(report.variants) == 2 ** len(AXE.steps) * 3
    assert report.stable == all(v["risk_class"] == report.baseline_class for v in report.variants)


def test_sensitivity_is_deterministic():
    a = sensitivity_analysis(AXE, factor=2.0)
    b = sensitivity_analysis(AXE, factor=2.0)
    assert a == b


def test_high_probability_scenario_stays_serious_under_factor_10():
    # a single-step scenario at 0.07 / severity 3 divided by 10 is still above
    # the 1/1000 boundary, which the matrix keeps at Serious
    scenario = InjuryScenario("major injury", (("injury", 0.07),), 3)
    report = sensitivity_analysis(scenario, factor=10.0, severity_shift=0)
    down = min(v["probability"] for v in report.variants)
    assert down == pytest.approx(0.007)
    assert all(v["risk_class"] == "Serious" for v in report.variants if v["probability"] >= 0.001)


def test_assess_scenario_bundles_band_and_class():
    out = assess_scenario(AXE)
    assert out.total_probability == pytest.approx(1e-4, rel=1e-12)
    assert out.band_label == "> 1/10000"
    assert out.risk_class == "Medium"
