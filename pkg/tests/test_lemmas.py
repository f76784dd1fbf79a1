import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadineq import lemmas as L
from quadineq import transforms as T
from quadineq.errors import CapabilityError, DomainError, PreconditionError, SamplingError

SUITE = L.suite_transforms()
EXPECTED_IDS = (
    ["main_param", "first_reduction_a", "first_reduction_b", "ddr", "maxlhs_i", "maxlhs_ii", "maxlhs_iii",
     "reduii", "gaGbGsc", "gaGbLsc", "gaLb", "laLb_scb", "labGsc", "laGb_scb", "gbcs", "xabc"]
    + [f"mech_{k}" for k in range(1, 18) if k != 4]
    + ["aux_redistri", "aux_six", "aux_extreme", "f1", "f2", "merging_simple", "ccdiff_i", "ccdiff_ii",
       "ccpoly_i", "ccpoly_ii", "tranconcave_i", "tranconcave_ii", "tranconcave_iii", "transdtran", "ccsqrtprop"]
)


def test_registry_contents():
    assert set(L.LEMMA_IDS) == set(EXPECTED_IDS)
    for lid in L.LEMMA_IDS:
        lem = L.get_lemma(lid)
        assert lem.order in (0, 1, 2, 3)
        assert lem.variables


def test_unknown_lemma():
    with pytest.raises(DomainError):
        L.get_lemma("nope")


# --- single evaluations -----------------------------------------------------


def test_run_lemma_examples():
    assert L.run_lemma("mech_16", T.power(2), {"u": 1.0}) == pytest.approx(0.0, abs=1e-15)
    for t in SUITE:
        if L.applicable("main_param", t):
            r = L.run_lemma("main_param", t, dict(a=1.3, b=0.0, c=1.3, r=0.2, s=-0.7))
            assert r == pytest.approx(0.0, abs=1e-14)
    x = dict(x1=1.0, x2=1.0, x3=1.0, x4=1.0, x5=2.0, x6=2.0)
    assert L.run_lemma("aux_six", T.power(2), x) == pytest.approx(0.0, abs=1e-15)


def test_run_lemma_reports_failed_hypothesis():
    with pytest.raises(DomainError, match="x >= y"):
        L.run_lemma("ccdiff_i", T.power(2), {"x": 1.0, "y": 2.0})


def test_run_lemma_input_checks():
    with pytest.raises(DomainError, match="needs inputs"):
        L.run_lemma("mech_16", T.power(2), {})
    with pytest.raises(DomainError, match="nonnegative"):
        L.run_lemma("mech_16", T.power(2), {"u": -1.0})
    with pytest.raises(DomainError):
        L.run_lemma("main_param", T.power(2), dict(a=1, b=1, c=1, r=1.5, s=0))


def test_capability_and_precondition():
    with pytest.raises(CapabilityError):
        L.run_lemma("ccpoly_i", T.huber(1.0), {"x": 1.0, "y": 1.0})
    assert not L.applicable("ccpoly_i", T.huber(1.0))
    assert L.applicable("ccdiff_i", T.huber(1.0))
    with pytest.raises(PreconditionError):
        L.run_lemma("ccdiff_ii", T.power(3), {"x": 1.0, "y": 1.0})


@given(st.floats(0.01, 4), st.floats(0.01, 4), st.floats(1.0, 2.0))
def test_ccdiff_ii_power_property(x, y, alpha):
    assert L.run_lemma("ccdiff_ii", T.power(alpha), {"x": x, "y": y}) <= 1e-10 * max(1.0, (x + y) ** alpha)


@given(st.floats(0.0, 4), st.floats(0.0, 4), st.floats(0.0, 4), st.floats(-1, 1), st.floats(-1, 1))
def test_main_param_property_pseudo_huber(a, b, c, r, s):
    scale = max(1.0, 4 * (a + b + c))
    assert L.run_lemma("main_param", T.pseudo_huber(1.0), dict(a=a, b=b, c=c, r=r, s=s)) <= 1e-8 * scale


# --- sampling ---------------------------------------------------------------


@pytest.mark.parametrize("lemma_id,t", [
    ("mech_5", T.power(1.5)), ("ddr", T.power(2.0)), ("first_reduction_b", T.power(2.0)),
])
def test_sample_examples(lemma_id, t):
    rep = L.sample_lemma(lemma_id, t, n=10_000, seed=42)
    assert rep.worst_residual <= 1e-8
    assert rep.passed
    assert rep.n == 10_000 and rep.draws >= rep.n
    assert set(rep.worst_inputs) == set(L.get_lemma(lemma_id).variables)


def test_sampled_inputs_satisfy_hypotheses():
    for lid in ("laGb_scb", "f2", "ddr", "aux_six"):
        lem = L.get_lemma(lid)
        v, _ = L.draw_inputs(lem, 2000, seed=3)
        for label, fn in lem.hypotheses:
            assert np.all(fn(v) >= -1e-12 * 4), label
        for name in lem.variables:
            lo, hi = lem.bounds(name)
            col = getattr(v, name)
            assert np.all((col >= lo) & (col <= hi))


def test_sampling_error_on_low_acceptance():
    lem = L.get_lemma("f2")  # four ordered variables plus a linear constraint
    with pytest.raises(SamplingError):
        L.draw_inputs(lem, 100_000, seed=1, max_rejection=0.5)


def test_sample_rejects_bad_n():
    with pytest.raises(DomainError):
        L.sample_lemma("mech_16", T.power(2), n=0)


def test_sampling_is_deterministic():
    a = L.sample_lemma("gaLb", T.log_cosh(), n=2000, seed=7)
    b = L.sample_lemma("gaLb", T.log_cosh(), n=2000, seed=7)
    c = L.sample_lemma("gaLb", T.log_cosh(), n=2000, seed=8)
    assert a == b
    assert a.worst_inputs != c.worst_inputs


@pytest.mark.parametrize("lemma_id", ["main_param", "ccsqrtprop"])
def test_large_samples(lemma_id):
    for t in (T.power(1.0), T.power(1.5), T.power(2.0), T.pseudo_huber(1.0)):
        assert L.sample_lemma(lemma_id, t, n=100_000, seed=11).worst_residual <= 1e-8


@pytest.mark.parametrize("scale", [0.01, 100.0])
@pytest.mark.parametrize("lemma_id", ["main_param", "reduii", "mech_9", "f1", "transdtran"])
def test_scale_spot_checks(lemma_id, scale):
    for t in (T.power(1.5), T.pseudo_huber(1.0), T.huber(1.0)):
        if L.applicable(lemma_id, t):
            assert L.sample_lemma(lemma_id, t, n=3000, seed=5, scale=scale).passed


def test_suite_covers_applicable_pairs():
    reps = L.run_suite(n=200, seed=1)
    pairs = {(r.lemma_id, r.transform) for r in reps}
    for lid in L.LEMMA_IDS:
        for t in SUITE:
            assert ((lid, t.name) in pairs) == L.applicable(lid, t)
    assert all(r.passed for r in reps)


# --- derivative consistency -------------------------------------------------


def test_derivative_consistency_examples():
    sq = L.derivative_consistency(T.power(2.0))
    assert sq.pattern_ok and sq.consistent
    assert np.all(T.power(2.0).deriv(np.linspace(0.1, 4, 20), 3) == 0)
    ph = L.derivative_consistency(T.pseudo_huber(1.0))
    assert ph.second_nonneg and ph.second_nonincreasing and ph.consistent
    x = np.linspace(0.05, 4, 50)
    assert np.all(T.pseudo_huber(1.0).deriv(x, 2) > 0)
    lin = L.derivative_consistency(T.power(1.0))
    assert lin.pattern_ok
    assert np.all(T.power(1.0).deriv(x, 2) == 0)


@pytest.mark.parametrize("t", SUITE, ids=lambda t: t.name)
def test_derivative_consistency_suite(t):
    rep = L.derivative_consistency(t, n=500)
    assert rep.consistent, rep.max_rel_error
    assert rep.pattern_ok


def test_derivative_consistency_detects_cube():
    rep = L.derivative_consistency(T.power(3.0), n=200)
    assert not rep.second_nonincreasing
