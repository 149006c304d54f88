import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from comonotone_flow.errors import DomainError
from comonotone_flow.schedules import (CONDITIONS, DynamicsParams, TikhonovSchedule,
                                       check_hypotheses, default_grid, delta_window,
                                       eval_schedule)


def test_power_half_at_four():
    e, de, dde, dinv = eval_schedule(TikhonovSchedule.power(0.5), 4.0)
    assert e == pytest.approx(0.5)
    assert de == pytest.approx(-1 / 16)
    assert dde == pytest.approx(3 / 128)
    assert dinv == pytest.approx(0.25 * 4 ** -0.75)
    assert dinv == pytest.approx(0.08839, abs=1e-5)


@pytest.mark.parametrize("q", [0.1, 1 / 3, 0.9])
def test_power_at_one(q):
    e, de, dde, _ = eval_schedule(TikhonovSchedule.power(q), 1.0)
    assert (e, de, dde) == pytest.approx((1.0, -q, q * (q + 1)))


def test_constant_schedule():
    assert eval_schedule(TikhonovSchedule.constant(0.7, 1.0), 3.0) == (0.7, 0.0, 0.0, 0.0)


def test_before_start_is_error():
    with pytest.raises(DomainError):
        eval_schedule(TikhonovSchedule.power(0.5, t0=1.0), 0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.2, 90.0))
def test_power_derivatives_match_finite_differences(q, t):
    s = TikhonovSchedule.power(q, t0=0.1)
    h = 1e-4 * t
    e = lambda u: eval_schedule(s, u)[0]
    de = lambda u: eval_schedule(s, u)[1]
    _, d1, d2, dinv = eval_schedule(s, t)
    fd1 = (e(t + h) - e(t - h)) / (2 * h)
    fd2 = (de(t + h) - de(t - h)) / (2 * h)
    fdinv = (e(t + h) ** -0.5 - e(t - h) ** -0.5) / (2 * h)
    assert fd1 == pytest.approx(d1, rel=1e-6)
    assert fd2 == pytest.approx(d2, rel=1e-6)
    assert fdinv == pytest.approx(dinv, rel=1e-6)


def test_delta_window_values():
    assert delta_window(1.0) == pytest.approx((1.0, 5 / 3))
    assert delta_window(2.0) == pytest.approx((2.0, 8 / 3))
    with pytest.raises(DomainError):
        delta_window(0.0)


@given(st.floats(1e-3, 1e3))
def test_delta_window_nonempty(gamma):
    lo, hi = delta_window(gamma)
    assert lo == gamma
    assert hi - gamma == pytest.approx(gamma / (gamma ** 2 / 2 + 1))
    assert hi > lo


def _report(q, gamma=1.0, delta=4 / 3, op=None):
    from comonotone_flow.operators import diagonal_example
    return check_hypotheses(TikhonovSchedule.power(q, 0.1), DynamicsParams(gamma, delta),
                            op or diagonal_example(), default_grid(0.1, 100.0))


def test_report_lists_every_condition_once():
    rep = _report(1 / 3)
    assert rep.names == list(CONDITIONS)


def test_report_all_pass_for_q_third():
    rep = _report(1 / 3)
    assert rep.failed() == []
    assert all(e.satisfied is True for e in rep.entries)
    t1 = rep["second_derivative_bound"].t1_estimate
    # closed form: (q+1) / ((delta-gamma)/4) <= t^(1-q/2)  ->  t >= 16^(6/5)
    assert t1 >= 16 ** 1.2
    grid = default_grid(0.1, 100.0)
    assert t1 == grid[np.searchsorted(grid, 16 ** 1.2)]


def test_ratio_condition_fails_for_q_06():
    rep = _report(0.6)
    assert rep.failed() == ["eps_derivative_ratio_vanishing"]
    assert rep["eps_derivative_ratio_vanishing"].evidence["exponent"] == pytest.approx(0.2)


def test_delta_outside_window():
    rep = _report(1 / 3, delta=1.0)
    assert rep["delta_window"].satisfied is False


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.3, 3.0))
def test_ratio_condition_threshold(q, gamma):
    threshold = gamma ** 2 / (gamma ** 2 + 1)
    if abs(q - threshold) < 1e-6:
        return
    lo, hi = delta_window(gamma)
    rep = _report(q, gamma, 0.5 * (lo + hi))
    assert rep["eps_derivative_ratio_vanishing"].satisfied is (q < threshold)


def test_constant_schedule_fails_vanishing():
    from comonotone_flow.operators import diagonal_example
    rep = check_hypotheses(TikhonovSchedule.constant(0.5, 0.1), DynamicsParams(), diagonal_example())
    assert rep["eps_vanishing"].satisfied is False
    assert not rep.ok()


def test_custom_schedule_trend_verdicts():
    from comonotone_flow.operators import diagonal_example
    q = 0.4
    s = TikhonovSchedule.custom(lambda t: t ** -q, lambda t: -q * t ** (-q - 1),
                                lambda t: q * (q + 1) * t ** (-q - 2), t0=0.1)
    rep = check_hypotheses(s, DynamicsParams(), diagonal_example(), default_grid(0.1, 1e7))
    assert rep["eps_vanishing"].satisfied in (True, "asymptotic-trend")
    assert rep["inv_sqrt_eps_rate_vanishing"].satisfied in (True, "asymptotic-trend")
    assert rep["sqrt_eps_integral_divergent"].satisfied == "asymptotic-trend"


def test_report_serialises():
    import json
    json.dumps(_report(0.5).to_dict())
