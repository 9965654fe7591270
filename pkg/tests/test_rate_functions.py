"""Boundary-function families: evaluation, envelopes, shifts, admissibility.

Frozen reference values were computed with mpmath at 40 significant digits,
independently of the package code; they appear here rounded to float64.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypescape import (
    AdmissibilityError,
    ConfigError,
    DomainError,
    EvaluationError,
    RateFunctionSpec,
    ShiftedRateFunction,
    check_admissibility,
    drift_coefficient,
    eval_g,
    rate_bounds,
    rate_lower,
    rate_upper,
    require_admissible,
)

E = math.e
E_TO_E = math.exp(math.e)           # 15.154262241479264
E_TO_E_TO_E = math.exp(E_TO_E)      # 3814279.1047602207

#: (d-1)t/2 + sqrt(t) * 2 sqrt(log log t) at d=3, t=1e6; mpmath 40-digit
#: value 1003240.859092571604416138 rounded to float64.
R_UPPER_ORACLE = 1003240.8590925717

#: sqrt(2 e + 3) — the sqrt(2 LL t + a LLL t) family at a=3, t = e^(e^e).
KE3_ORACLE = 2.9045763300209706


# -- evaluation ------------------------------------------------------------


def test_constant_family_is_constant():
    spec = RateFunctionSpec.constant(3.0)
    assert eval_g(spec, 100.0) == 3.0
    assert eval_g(spec, 1e9) == 3.0


def test_sqrt_loglog_at_e_to_e():
    # log log(e^e) = 1, so g = c exactly (up to float log/exp round trips).
    spec = RateFunctionSpec.sqrt_loglog(math.sqrt(2.0), t0=E_TO_E)
    assert eval_g(spec, E_TO_E) == pytest.approx(math.sqrt(2.0), rel=1e-13)


def test_kolmogorov_erdos_at_e_tower():
    # log log t = e and log log log t = 1 at t = e^(e^e).
    spec = RateFunctionSpec.kolmogorov_erdos(3.0)
    assert eval_g(spec, E_TO_E_TO_E) == pytest.approx(KE3_ORACLE, rel=1e-13)


def test_custom_family_interpolates_log_log():
    spec = RateFunctionSpec.custom([16.0, 1e6], [1.0, 3.0])
    assert eval_g(spec, 16.0) == pytest.approx(1.0)
    assert eval_g(spec, 1e6) == pytest.approx(3.0)
    # log g is linear in log t: the geometric midpoint in t maps to the
    # geometric mean of the knot values.
    assert eval_g(spec, 4000.0) == pytest.approx(math.sqrt(3.0), rel=1e-12)


def test_eval_g_array_matches_scalar():
    spec = RateFunctionSpec.sqrt_loglog(2.0)
    ts = np.geomspace(16.0, 1e10, 7)
    arr = eval_g(spec, ts)
    assert arr.shape == ts.shape
    for t, v in zip(ts, arr):
        assert eval_g(spec, float(t)) == v


def test_eval_g_below_t0_raises():
    spec = RateFunctionSpec.sqrt_loglog(2.0, t0=16.0)
    with pytest.raises(DomainError):
        eval_g(spec, 15.9)


def test_eval_g_tolerates_log_exp_round_trip():
    # exp(log(t0)) may round one ulp below t0; that must not raise.
    spec = RateFunctionSpec.sqrt_loglog(2.0, t0=16.0)
    assert eval_g(spec, 16.0 * (1.0 - 1e-13)) > 0


# -- envelopes --------------------------------------------------------------


def test_rate_upper_frozen_oracle():
    spec = RateFunctionSpec.sqrt_loglog(2.0)
    assert rate_upper(spec, 3, 1e6) == pytest.approx(R_UPPER_ORACLE, rel=1e-12)


def test_rate_upper_against_inline_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    t = mp.mpf(10) ** 6
    want = float(t + mp.sqrt(t) * 2 * mp.sqrt(mp.log(mp.log(t))))
    spec = RateFunctionSpec.sqrt_loglog(2.0)
    assert rate_upper(spec, 3, 1e6) == pytest.approx(want, rel=1e-13)


def test_rate_bounds_single_evaluation():
    # Both bounds come from one evaluation of sqrt(t) g(t): recomputing the
    # same expressions must reproduce them bitwise.
    spec = RateFunctionSpec.sqrt_loglog(2.0)
    for d in (2, 3, 5):
        for t in (16.0, 100.0, 1e6, 1e10):
            upper, lower = rate_bounds(spec, d, t)
            lin = drift_coefficient(d) * t
            swing = math.sqrt(t) * float(eval_g(spec, t))
            assert upper == lin + swing
            assert lower == lin - swing
            assert upper == rate_upper(spec, d, t)
            assert lower == rate_lower(spec, d, t)


def test_rate_bounds_array_form():
    spec = RateFunctionSpec.constant(1.0)
    ts = np.geomspace(16.0, 1e8, 9)
    upper, lower = rate_bounds(spec, 3, ts)
    assert upper.shape == ts.shape
    assert np.all(upper > lower)


def test_rate_upper_nondecreasing():
    spec = RateFunctionSpec.kolmogorov_erdos(4.0)
    ts = np.geomspace(16.0, 1e12, 400)
    upper = rate_upper(spec, 2, ts)
    assert np.all(np.diff(upper) > 0)


def test_drift_coefficient_values():
    assert drift_coefficient(2) == 0.5
    assert drift_coefficient(3) == 1.0
    assert drift_coefficient(7) == 3.0
    with pytest.raises(ConfigError):
        drift_coefficient(1)


# -- shifted functions -------------------------------------------------------


def test_shift_minus_plus_inverse():
    spec = RateFunctionSpec.sqrt_loglog(2.0)
    minus = ShiftedRateFunction(spec, 3.0, "minus")
    ts = np.geomspace(minus.effective_t0(), 1e10, 50)
    recovered = minus.eval(ts) + 3.0 / np.sqrt(ts)
    assert np.allclose(recovered, eval_g(spec, ts), rtol=1e-12)


def test_shift_plus_adds():
    spec = RateFunctionSpec.constant(1.0)
    plus = ShiftedRateFunction(spec, 2.0, "plus")
    assert plus.eval(100.0) == pytest.approx(1.0 + 2.0 / 10.0, rel=1e-15)
    assert plus.effective_t0() == spec.t0


def test_effective_t0_doubles_until_positive():
    spec = RateFunctionSpec.constant(1.0)
    # sqrt(t) * 1 > 10 first holds (on the probe ladder 16, 32, ...) at 128.
    assert ShiftedRateFunction(spec, 10.0, "minus").effective_t0() == 128.0
    # sqrt(16) = 4 > 3 already holds at t0.
    assert ShiftedRateFunction(spec, 3.0, "minus").effective_t0() == 16.0


def test_shift_minus_eval_guards_positivity():
    spec = RateFunctionSpec.constant(1.0)
    minus = ShiftedRateFunction(spec, 10.0, "minus")
    with pytest.raises(EvaluationError):
        minus.eval(16.0)  # sqrt(16) * 1 = 4 < 10: nonpositive here


def test_shift_minus_exhausted_domain():
    # Tabulated g bounded by 2 on a finite domain: sqrt(t) g tops out at
    # 2e3 < n, so the minus shift has no usable domain anywhere.
    spec = RateFunctionSpec.custom([16.0, 1e6], [2.0, 2.0])
    minus = ShiftedRateFunction(spec, 10000.0, "minus")
    with pytest.raises(EvaluationError):
        minus.effective_t0()


def test_shift_validation():
    spec = RateFunctionSpec.constant(1.0)
    with pytest.raises(ConfigError):
        ShiftedRateFunction(spec, 1.0, "sideways")
    with pytest.raises(ConfigError):
        ShiftedRateFunction(spec, -1.0, "minus")


# -- admissibility -----------------------------------------------------------


@pytest.mark.parametrize("spec", [
    RateFunctionSpec.constant(0.5),
    RateFunctionSpec.constant(5.0),
    RateFunctionSpec.sqrt_loglog(0.5),
    RateFunctionSpec.sqrt_loglog(3.0),
    RateFunctionSpec.kolmogorov_erdos(0.0),
    RateFunctionSpec.kolmogorov_erdos(5.0),
])
def test_builtin_families_admissible(spec):
    report = check_admissibility(spec)
    assert report.admissible
    assert report.violations == ()
    require_admissible(spec)  # must not raise


def test_decreasing_sqrt_t_g_flagged():
    # g = 1/t makes sqrt(t) g = 1/sqrt(t), strictly decreasing.
    ts = np.geomspace(16.0, 1e4, 33)
    spec = RateFunctionSpec.custom(ts, 1.0 / ts)
    report = check_admissibility(spec)
    assert not report.admissible
    assert any(v.check == "sqrt_t_g_nondecreasing" for v in report.violations)
    with pytest.raises(AdmissibilityError):
        require_admissible(spec)


def test_unbounded_ratio_flagged():
    # g = t makes g / sqrt(t) = sqrt(t), growing to the probe boundary.
    ts = np.geomspace(16.0, 1e4, 33)
    spec = RateFunctionSpec.custom(ts, ts)
    report = check_admissibility(spec)
    assert not report.admissible
    assert any(v.check == "g_over_sqrt_t_bounded" for v in report.violations)


def test_violation_report_shape():
    ts = np.geomspace(16.0, 1e4, 33)
    report = check_admissibility(RateFunctionSpec.custom(ts, 1.0 / ts))
    v = report.violations[0]
    assert v.t_pair[0] < v.t_pair[1]
    assert v.values[1] < v.values[0]
    d = report.to_dict()
    assert d["admissible"] is False
    assert d["violations"][0]["check"] == v.check


# -- construction and serialization ------------------------------------------


def test_factory_validation():
    with pytest.raises(ConfigError):
        RateFunctionSpec.constant(-1.0)
    with pytest.raises(ConfigError):
        RateFunctionSpec.sqrt_loglog(0.0)
    with pytest.raises(ConfigError):
        RateFunctionSpec.constant(1.0, t0=1.0)
    with pytest.raises(ConfigError):
        RateFunctionSpec("nonsense", param=1.0)
    with pytest.raises(ConfigError):
        RateFunctionSpec.custom([16.0], [1.0])            # too few knots
    with pytest.raises(ConfigError):
        RateFunctionSpec.custom([16.0, 8.0], [1.0, 1.0])  # not increasing
    with pytest.raises(ConfigError):
        RateFunctionSpec.custom([16.0, 32.0], [1.0, -1.0])
    with pytest.raises(ConfigError):
        RateFunctionSpec.custom([32.0, 64.0], [1.0, 1.0], t0=16.0)
    with pytest.raises(ConfigError):
        RateFunctionSpec.custom([4.0, 8.0], [1.0, 1.0], t0=16.0)


def test_sqrt_loglog_needs_t0_above_e():
    with pytest.raises(ConfigError):
        RateFunctionSpec.sqrt_loglog(1.0, t0=2.0)  # log log 2 < 0


def test_t_max():
    assert RateFunctionSpec.constant(1.0).t_max == math.inf
    assert RateFunctionSpec.custom([16.0, 99.0], [1.0, 1.0]).t_max == 99.0


@pytest.mark.parametrize("spec", [
    RateFunctionSpec.constant(2.5),
    RateFunctionSpec.sqrt_loglog(1.5, t0=100.0),
    RateFunctionSpec.kolmogorov_erdos(4.0),
    RateFunctionSpec.custom([16.0, 1e3, 1e6], [1.0, 2.0, 2.5]),
])
def test_config_round_trip(spec):
    assert RateFunctionSpec.from_config(spec.to_config()) == spec


def test_from_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RateFunctionSpec.from_config({"family": "constant", "param": 1.0,
                                      "slope": 2.0})
    with pytest.raises(ConfigError):
        RateFunctionSpec.from_config({"param": 1.0})
    with pytest.raises(ConfigError):
        RateFunctionSpec.from_config({"family": "constant"})


# -- properties ---------------------------------------------------------------


@given(
    c=st.floats(min_value=0.1, max_value=10.0),
    t=st.floats(min_value=16.0, max_value=1e12),
)
@settings(max_examples=200, deadline=None)
def test_sqrt_loglog_positive_and_bounded(c, t):
    spec = RateFunctionSpec.sqrt_loglog(c)
    g = eval_g(spec, t)
    assert 0 < g < c * 4.0  # sqrt(log log 1e12) < 4


@given(
    d=st.integers(min_value=2, max_value=10),
    t=st.floats(min_value=16.0, max_value=1e10),
    a=st.floats(min_value=0.1, max_value=5.0),
)
@settings(max_examples=200, deadline=None)
def test_upper_exceeds_lower(d, t, a):
    spec = RateFunctionSpec.constant(a)
    assert rate_upper(spec, d, t) > rate_lower(spec, d, t)


@given(st.floats(min_value=16.0, max_value=1e11))
@settings(max_examples=100, deadline=None)
def test_upper_monotone_pairs(t):
    spec = RateFunctionSpec.sqrt_loglog(2.0)
    assert rate_upper(spec, 3, 2.0 * t) > rate_upper(spec, 3, t)
