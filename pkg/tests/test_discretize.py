import numpy as np
import pytest
from scipy import stats

from riskbn import discretize, errors, graph
from riskbn.discretize import (
    BinnedSpace,
    DiscreteSpace,
    IntervalSet,
    count_ranges,
    expression_to_cpt,
    interval_count_bins,
    make_bins,
    summarize,
)
from riskbn.graph import (
    BetaCpd,
    BinomialCpd,
    DeterministicCpd,
    MixtureCpd,
    PartitionedCpd,
    TNormalCpd,
    UniformCpd,
    const,
    mul,
    ref,
)


def pspace(name="p", bins=100):
    return BinnedSpace(name, make_bins((0.0, 1.0), bins, "log", name))


# ---------------------------------------------------------------------------
# make_bins
# ---------------------------------------------------------------------------

def test_equal_width_quarters():
    b = make_bins((0.0, 1.0), 4, "equal")
    assert b.edges == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_log_bins_first_bin_and_constant_ratio():
    b = make_bins((0.0, 1.0), 50, "log", eps=1e-6)
    assert b.edges[0] == 0.0
    assert b.edges[1] == pytest.approx(1e-6)
    uppers = np.asarray(b.edges[1:])
    ratios = uppers[1:] / uppers[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-9)


def test_make_bins_rejects_single_bin():
    with pytest.raises(errors.BadCount):
        make_bins((0.0, 1.0), 1, "equal")


def test_make_bins_rejects_bad_support():
    with pytest.raises(errors.BadSupport):
        make_bins((1.0, 0.0), 4, "equal")
    with pytest.raises(errors.BadSupport):
        make_bins((-1.0, 1.0), 4, "log")


def test_bins_partition_support_exactly():
    for scheme in ("equal", "log"):
        b = make_bins((0.0, 1.0), 37, scheme)
        assert b.edges[0] == 0.0 and b.edges[-1] == 1.0
        assert all(hi > lo for lo, hi in b.intervals())


def test_count_ranges_singletons_then_growth():
    b = count_ranges(100000, 200)
    assert b.integer
    assert b.edges[0] == 0 and b.edges[-1] == 100001
    assert b.count <= 200
    # small counts resolved exactly
    assert b.locate(0) == 0 and b.locate(1) == 1 and b.locate(5) == 5


def test_interval_count_bins_focus():
    b = interval_count_bins(5000, (2000, 2500))
    assert b.locate(1999) < b.locate(2000) <= b.locate(2500) < b.locate(2600)
    assert b.edges[-1] == 5001


# ---------------------------------------------------------------------------
# summarize
# ---------------------------------------------------------------------------

def test_summarize_point_mass_bin():
    b = make_bins((0.0, 1.0), 5, "equal")  # [0.4, 0.6) is the middle bin
    mass = np.array([0.0, 0.0, 1.0, 0.0, 0.0])
    m = summarize(mass, b)
    assert m.mean == pytest.approx(0.5)
    assert m.variance <= 0.2**2 / 12 + 1e-12


def test_summarize_uniform_mass():
    b = make_bins((0.0, 1.0), 50, "equal")
    mass = np.full(50, 1 / 50)
    m = summarize(mass, b)
    assert m.mean == pytest.approx(0.5, abs=1e-3)
    assert m.p50 == pytest.approx(0.5, abs=1e-2)
    assert m.p5 == pytest.approx(0.05, abs=1e-2)
    assert m.p95 == pytest.approx(0.95, abs=1e-2)


def test_summarize_rejects_unnormalized():
    b = make_bins((0.0, 1.0), 4, "equal")
    with pytest.raises(errors.UnnormalizedPosterior):
        summarize(np.array([0.5, 0.1, 0.1, 0.1]), b)


def test_summarize_beta_posterior_against_closed_form():
    # oracle: Beta(2, 2001) mean = 2/2003
    b = make_bins((0.0, 1.0), 100, "log")
    edges = np.asarray(b.edges)
    mass = np.diff(stats.beta(2, 2001).cdf(edges))
    mass /= mass.sum()
    m = summarize(mass, b)
    assert m.mean == pytest.approx(2 / 2003, rel=0.02)


# ---------------------------------------------------------------------------
# expression_to_cpt
# ---------------------------------------------------------------------------

def test_uniform_on_equal_quarters():
    child = BinnedSpace("x", make_bins((0.0, 1.0), 4, "equal"))
    cpt = expression_to_cpt(UniformCpd(0.0, 1.0), {}, (), child)
    assert np.allclose(cpt, [0.25, 0.25, 0.25, 0.25])


def test_beta_column_mean_matches_closed_form():
    child = pspace(bins=100)
    cpt = expression_to_cpt(BetaCpd(2.0, 2001.0), {}, (), child)
    mean = float(np.dot(cpt, child.bins.representatives()))
    assert mean == pytest.approx(2 / 2003, rel=0.02)


def test_binomial_pmf_against_scipy():
    child = BinnedSpace("k", count_ranges(10, 50, "k"))
    cpt = expression_to_cpt(BinomialCpd(10.0, 0.5), {}, (), child)
    oracle = stats.binom(10, 0.5).pmf(np.arange(11))
    assert np.allclose(cpt, oracle, atol=1e-12)
    assert int(np.argmax(cpt)) == 5
    assert np.allclose(cpt, cpt[::-1], atol=1e-12)  # symmetry at p = 1/2


def test_every_column_is_a_distribution():
    p = pspace(bins=30)
    n = BinnedSpace("n", interval_count_bins(3000, (2000, 2400), "n"))
    child = BinnedSpace("s", count_ranges(3000, 64, "s"))
    cpt = expression_to_cpt(
        BinomialCpd(ref("n"), ref("p")), {"n": n, "p": p}, ("n", "p"), child
    )
    sums = cpt.reshape(cpt.shape[0], -1).sum(axis=0)
    assert np.allclose(sums, 1.0, atol=1e-9)
    assert (cpt >= 0).all()


def test_deterministic_mass_brackets_value_and_preserves_mean():
    p = BinnedSpace("p", make_bins((0.0, 1.0), 10, "equal", "p"))
    child = BinnedSpace("y", make_bins((0.0, 1.0), 10, "equal", "y"))
    cpt = expression_to_cpt(
        DeterministicCpd(mul(ref("p"), const(0.5))), {"p": p}, ("p",), child
    )
    child_reps = child.bins.representatives()
    for j, rep in enumerate(p.bins.representatives()):
        col = cpt[:, j]
        assert col.sum() == pytest.approx(1.0)
        assert (col > 0).sum() <= 2
        # mean preserved, except at the support edge where it clamps to the
        # boundary representative
        expected = min(max(rep * 0.5, child_reps[0]), child_reps[-1])
        assert float(col @ child_reps) == pytest.approx(expected, abs=1e-12)
        nz = np.flatnonzero(col)
        target = child.bins.locate(rep * 0.5)
        assert all(abs(int(k) - target) <= 1 for k in nz)


def test_deterministic_identity_is_exact_point_mass():
    p = BinnedSpace("p", make_bins((0.0, 1.0), 10, "log", "p"))
    child = BinnedSpace("y", make_bins((0.0, 1.0), 10, "log", "y"))
    cpt = expression_to_cpt(DeterministicCpd(ref("p")), {"p": p}, ("p",), child)
    assert np.allclose(cpt, np.eye(10))


def test_deterministic_outside_support_raises():
    p = BinnedSpace("p", make_bins((0.0, 1.0), 10, "equal", "p"))
    child = BinnedSpace("y", make_bins((0.0, 0.1), 10, "equal", "y"))
    with pytest.raises(errors.UnsupportedCombination):
        expression_to_cpt(DeterministicCpd(ref("p")), {"p": p}, ("p",), child)


def test_partitioned_dispatches_on_state():
    sw = DiscreteSpace("mode", ("lo", "hi"), None)
    child = BinnedSpace("y", make_bins((0.0, 1.0), 4, "equal", "y"))
    cpd = PartitionedCpd(
        "mode",
        (
            ("lo", DeterministicCpd(const(0.1))),
            ("hi", DeterministicCpd(const(0.9))),
        ),
    )
    cpt = expression_to_cpt(cpd, {"mode": sw}, ("mode",), child)
    assert cpt[0, 0] == 1.0  # lo -> first bin
    assert cpt[3, 1] == 1.0  # hi -> last bin


def test_mixture_blends_components():
    child = BinnedSpace("y", make_bins((0.0, 1.0), 4, "equal", "y"))
    cpd = MixtureCpd(
        (0.25, 0.75),
        (DeterministicCpd(const(0.1)), DeterministicCpd(const(0.9))),
    )
    cpt = expression_to_cpt(cpd, {}, (), child)
    assert cpt[0] == pytest.approx(0.25)
    assert cpt[3] == pytest.approx(0.75)


def test_tnormal_on_ranked_child_and_monotone_shift():
    child = DiscreteSpace("r", ("a", "b", "c", "d", "e"), (0.1, 0.3, 0.5, 0.7, 0.9))
    lo = expression_to_cpt(TNormalCpd(const(0.3), 0.01, 0.0, 1.0), {}, (), child)
    hi = expression_to_cpt(TNormalCpd(const(0.7), 0.01, 0.0, 1.0), {}, (), child)
    assert int(lo.argmax()) == 1
    assert int(hi.argmax()) == 3
    # stochastic dominance: higher mean -> more upper-tail mass
    assert np.cumsum(hi)[:-1].sum() < np.cumsum(lo)[:-1].sum()


def test_binomial_mass_beyond_support_rejected():
    child = BinnedSpace("s", count_ranges(5, 6, "s"))
    with pytest.raises(errors.UnsupportedCombination):
        expression_to_cpt(BinomialCpd(100.0, 0.9), {}, (), child)


# ---------------------------------------------------------------------------
# refinement and moment-recovery properties
# ---------------------------------------------------------------------------

def _beta_mean_at(bins):
    child = pspace(bins=bins)
    cpt = expression_to_cpt(BetaCpd(2.0, 50.0), {}, (), child)
    return float(np.dot(cpt, child.bins.representatives()))


def test_refinement_deltas_shrink():
    means = [_beta_mean_at(b) for b in (25, 50, 100, 200, 400)]
    deltas = [abs(b - a) for a, b in zip(means, means[1:])]
    assert all(d2 < d1 for d1, d2 in zip(deltas, deltas[1:]))
    assert means[-1] == pytest.approx(2 / 52, rel=0.005)


@pytest.mark.parametrize(
    "cpd,oracle",
    [
        (BetaCpd(2.0, 2001.0), 2 / 2003),
        (BetaCpd(5.0, 20.0), 5 / 25),
        (UniformCpd(0.0, 1.0), 0.5),
    ],
)
def test_summarize_recovers_closed_form_means(cpd, oracle):
    child = pspace(bins=100)
    cpt = expression_to_cpt(cpd, {}, (), child)
    m = summarize(cpt, child.bins)
    assert m.mean == pytest.approx(oracle, rel=0.02)


def test_binomial_mean_recovered():
    child = BinnedSpace("s", count_ranges(2000, 200, "s"))
    cpt = expression_to_cpt(BinomialCpd(2000.0, 0.01), {}, (), child)
    m = summarize(cpt, child.bins)
    assert m.mean == pytest.approx(20.0, rel=0.02)
