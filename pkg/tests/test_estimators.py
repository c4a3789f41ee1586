import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbest.core import TimeToEventRecord
from gbest.estimators import (
    ConvergenceError,
    CoxModel,
    NoEventsError,
    WeibullAftModel,
    _weibull_terms,
    censoring_km,
    cox_fit,
    cox_partial_loglik,
    cox_survival,
    kaplan_meier,
    nelson_aalen,
    weibull_aft_fit,
    weibull_aft_loglik,
    weibull_survival,
)
from gbest.core import StepFunction

from conftest import make_dataset

small_data = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.lists(st.integers(1, 4), min_size=n, max_size=n),
    st.lists(st.booleans(), min_size=n, max_size=n),
))


def breslow_loglik(time, event, x, beta):
    """Direct transcription: one term per event, risk set by loop."""
    ll = 0.0
    for i in range(len(time)):
        if event[i]:
            denom = sum(math.exp(beta * x[j]) for j in range(len(time)) if time[j] >= time[i])
            ll += beta * x[i] - math.log(denom)
    return ll


def test_km_hand_example():
    recs = [TimeToEventRecord(2, True, ()), TimeToEventRecord(3, False, ()), TimeToEventRecord(5, True, ())]
    S = kaplan_meier(recs)
    assert S(2) == pytest.approx(2 / 3)
    assert S(3) == pytest.approx(2 / 3)
    assert S(5) == 0.0
    assert S(1.99) == 1.0


def test_km_no_events_and_weight_scale():
    S = kaplan_meier([1, 2, 3], [False, False, False])
    assert S.knots.size == 0 and S(10) == 1.0
    a = kaplan_meier([2, 3, 5], [True, False, True])
    b = kaplan_meier([2, 3, 5], [True, False, True], [0.5, 0.5, 0.5])
    np.testing.assert_array_equal(a.values, b.values)
    with pytest.raises(ValueError):
        kaplan_meier([1, 2], [True, True], [0, 0])


@given(small_data)
def test_km_without_censoring_is_empirical(data):
    times, _ = data
    S = kaplan_meier(times, [True] * len(times))
    for t in range(0, 6):
        assert S(t) == pytest.approx(np.mean(np.asarray(times) > t), abs=1e-12)


@given(small_data, st.floats(0.01, 100))
def test_km_and_na_weight_scale_invariance(data, c):
    times, events = data
    if not any(events):
        return
    for est in (kaplan_meier, nelson_aalen):
        a = est(times, events)
        b = est(times, events, np.full(len(times), c))
        np.testing.assert_allclose(a.values, b.values, rtol=1e-12)


def test_nelson_aalen_examples():
    H = nelson_aalen([2, 3, 5], [True, False, True])
    assert H(2) == pytest.approx(1 / 3)
    assert H(5) == pytest.approx(4 / 3)
    assert H(1) == 0.0
    assert nelson_aalen([1, 2], [False, False])(5) == 0.0
    assert nelson_aalen([1.0], [True])(1) == 1.0


def test_censoring_km_examples():
    assert censoring_km([1, 2, 3], [True, True, True])(10) == 1.0
    G = censoring_km([2, 4], [False, True])
    assert G(2) == pytest.approx(0.5)


def test_censoring_km_mirror_without_ties():
    t, e = [1, 2, 3, 4, 6], [True, False, False, True, False]
    np.testing.assert_allclose(censoring_km(t, e).values, kaplan_meier(t, np.logical_not(e)).values)


def test_censoring_km_tie_convention():
    # event and censoring both at 2: the event leaves the risk set first
    G = censoring_km([1, 2, 2, 3], [True, True, False, True])
    assert G(2) == pytest.approx(1 - 1 / 2)
    G = censoring_km([2, 2, 3, 4], [True, False, False, True])
    assert G(2) == pytest.approx(1 - 1 / 3)


@given(small_data)
def test_product_of_km_and_censoring_km_is_empirical_tail(data):
    times, events = data
    t = np.asarray(times, float)
    S = kaplan_meier(t, events) if any(events) else None
    G = censoring_km(t, events)
    for s in range(0, 6):
        sv = 1.0 if S is None else S(s)
        assert sv * G(s) == pytest.approx(np.mean(t > s), abs=1e-12)


def test_cox_binary_example_against_grid():
    d = make_dataset([1, 2, 3, 4], [True, True, False, True], [[1], [0], [1], [0]])
    m = cox_fit(d)
    grid = np.arange(-10, 10 + 1e-9, 1e-3)
    ll = [breslow_loglik(d.time, d.event, d.X[:, 0], b) for b in grid]
    coarse = grid[int(np.argmax(ll))]
    fine = np.arange(coarse - 2e-3, coarse + 2e-3, 1e-4)
    best = fine[int(np.argmax([breslow_loglik(d.time, d.event, d.X[:, 0], b) for b in fine]))]
    assert abs(m.coefficients[0] - best) <= 1e-3


def test_cox_loglik_matches_direct_transcription():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = rng.integers(2, 9)
        t = rng.integers(1, 5, n).astype(float)
        e = rng.random(n) < 0.7
        x = rng.normal(size=n)
        if not e.any():
            continue
        d = make_dataset(t, e, x[:, None])
        for b in (-1.3, 0.0, 0.7):
            assert cox_partial_loglik(d, b) == pytest.approx(breslow_loglik(t, e, x, b), abs=1e-10)


def test_cox_zero_covariate_and_errors():
    d = make_dataset([1, 2, 3], [True, False, True], np.zeros((3, 1)))
    assert cox_fit(d).coefficients[0] == 0.0
    with pytest.raises(NoEventsError):
        cox_fit(make_dataset([1, 2], [False, False]))


def test_cox_gradient_vanishes_at_optimum():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(60, 3))
    t = rng.exponential(np.exp(-X @ np.array([0.5, -0.3, 0.0])))
    e = rng.random(60) < 0.8
    d = make_dataset(t, e, X)
    m = cox_fit(d)
    h = 1e-6
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        g = (cox_partial_loglik(d, m.coefficients + step) - cox_partial_loglik(d, m.coefficients - step)) / (2 * h)
        assert abs(g) < 1e-5
    H = m.baseline_cumulative_hazard
    assert H.value_before_first_knot == 0.0 and np.all(np.diff(H.values) >= 0)


def test_cox_separation_reports_failure_with_model():
    d = make_dataset([1, 2, 3, 4], [True, True, True, True], [[4], [3], [2], [1]])
    with pytest.raises(ConvergenceError) as info:
        cox_fit(d)
    assert info.value.model is not None
    curve = cox_survival(info.value.model, np.array([2.5]))
    assert np.all(np.isfinite(curve.values))


def test_cox_survival_identities():
    H0 = StepFunction([1.0, 2.0], [0.2, 0.5], 0.0)
    flat = CoxModel(np.array([0.0]), H0, ("x",))
    for x in (-3.0, 0.0, 4.0):
        np.testing.assert_allclose(cox_survival(flat, [x]).values, np.exp(-H0.values))
    m = CoxModel(np.array([math.log(2.0)]), H0, ("x",))
    s0, s1 = cox_survival(m, [0.0]), cox_survival(m, [1.0])
    np.testing.assert_allclose(np.log(s1.values), 2 * np.log(s0.values))
    assert s0(0.5) == 1.0
    with pytest.raises(ValueError):
        cox_survival(m, [1.0, 2.0])


def test_cox_centering_leaves_predictions_unchanged():
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 10, (40, 2))
    t = rng.exponential(np.exp(-0.2 * X[:, 0]))
    d = make_dataset(t, np.ones(40, bool), X)
    shifted = make_dataset(t, np.ones(40, bool), X + 100.0)
    a, b = cox_fit(d), cox_fit(shifted)
    np.testing.assert_allclose(a.coefficients, b.coefficients, rtol=1e-8)
    np.testing.assert_allclose(cox_survival(a, X[0]).values, cox_survival(b, X[0] + 100).values, rtol=1e-8)


def test_weibull_exponential_consistency():
    rng = np.random.default_rng(0)
    t = rng.exponential(1.0, 5000)
    m = weibull_aft_fit(time=t, event=np.ones(5000, bool))
    assert abs(m.intercept) < 0.05
    assert abs(m.scale - 1.0) < 0.05


def test_weibull_recovery():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5000, 1))
    truth = WeibullAftModel(1.0, np.array([0.5]), math.log(0.8))
    t = truth.sample(x, rng)
    m = weibull_aft_fit(make_dataset(t, np.ones(5000, bool), x))
    assert abs(m.intercept - 1.0) < 0.05
    assert abs(m.coefficients[0] - 0.5) < 0.05
    assert abs(m.scale - 0.8) < 0.05


def test_weibull_degenerate_times_rejected():
    with pytest.raises(ConvergenceError):
        weibull_aft_fit(time=np.full(10, 3.0), event=np.ones(10, bool))
    with pytest.raises(NoEventsError):
        weibull_aft_fit(time=[1.0, 2.0], event=[False, False])


def test_weibull_gradient_and_hessian_by_finite_differences():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 2))
    t = rng.weibull(1.5, 30) * 2
    e = (rng.random(30) < 0.7).astype(float)
    Z = np.column_stack([np.ones(30), X])
    theta = np.array([0.3, -0.2, 0.1, -0.4])
    w = rng.uniform(0.5, 2, 30)
    _, g, H = _weibull_terms(theta, np.log(t), e, Z, w)
    h = 1e-6
    for j in range(4):
        step = np.zeros(4)
        step[j] = h
        up = _weibull_terms(theta + step, np.log(t), e, Z, w)
        dn = _weibull_terms(theta - step, np.log(t), e, Z, w)
        assert (up[0] - dn[0]) / (2 * h) == pytest.approx(g[j], rel=1e-6, abs=1e-6)
        np.testing.assert_allclose((up[1] - dn[1]) / (2 * h), H[:, j], rtol=1e-5, atol=1e-5)


def test_weibull_loglik_matches_density():
    # exponential(1): log f(t) = -t for events, log S(t) = -t for censorings
    t = np.array([0.5, 1.0, 2.0])
    e = np.array([True, False, True])
    assert weibull_aft_loglik(None, [0.0, 0.0], time=t, event=e) == pytest.approx(-t.sum())


def test_weibull_survival_examples():
    m = WeibullAftModel(0.0, np.zeros(2), 0.0)
    S = weibull_survival(m, [0.0, 0.0])
    assert S(0.0) == 1.0
    np.testing.assert_allclose(S(np.array([0.5, 1, 3])), np.exp(-np.array([0.5, 1, 3])))
    m = WeibullAftModel(0.4, np.array([0.3, -0.2]), math.log(0.6))
    x = np.array([1.0, 2.0])
    lam = math.exp(0.4 + 0.3 - 0.4)
    assert weibull_survival(m, x)(lam * math.log(2) ** 0.6) == pytest.approx(0.5)
    assert m.median(x[None, :])[0] == pytest.approx(lam * math.log(2) ** 0.6)
    with pytest.raises(ValueError):
        weibull_survival(m, [1.0])
    with pytest.raises(ValueError):
        S(-1.0)
