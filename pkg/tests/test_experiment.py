import dataclasses

import numpy as np
import pytest

from asa_sim import (
    ConfigError,
    ExperimentConfig,
    InsufficientDataError,
    InvalidParameterError,
    UserSpec,
    bound_check,
    decay_fit,
    detector_error_curve,
    estimate_bad_period_prob,
    geometric_channel,
    monte_carlo,
    period_schedule,
    realize,
    run_once,
    wilson_interval,
)
from asa_sim.experiment import _monte_carlo
from asa_sim.rng import CHANNEL, substream

HI = geometric_channel(3.23, 1.43)
NEAR_SURE = geometric_channel(1_000_000.0, 1.0)  # on essentially always


def _cfg(**kw):
    base = dict(
        channels=(HI,),
        users=(UserSpec(0.5),),
        horizon=600,
        runs=5,
        seed=3,
    )
    base.update(kw)
    return ExperimentConfig(**base)


# ------------------------------------------------------------------ run_once


def test_run_once_is_deterministic():
    cfg = _cfg(channels=(HI, HI), users=(UserSpec(0.5), UserSpec(0.5, 37)))
    a = run_once(cfg, 4)
    b = run_once(cfg, 4)
    assert np.array_equal(a.asa_cum, b.asa_cum)
    assert np.array_equal(a.good, b.good)
    assert np.array_equal(a.late_successes, b.late_successes)


def test_lone_user_on_near_sure_channel_settles_after_first_period():
    cfg = _cfg(channels=(NEAR_SURE,), horizon=200)
    for run in range(50):
        tr = run_once(cfg, run)
        assert not tr.good[:24].any(), f"run {run}: good before the first test"
        assert tr.good[24:].all(), f"run {run}: lost the channel after settling"


def test_two_users_two_good_channels_orthogonalize():
    cfg = _cfg(
        channels=(NEAR_SURE, NEAR_SURE),
        users=(UserSpec(0.5), UserSpec(0.5)),
        horizon=5000,
    )
    for run in range(100):
        tr = run_once(cfg, run)
        assert tr.good[-1] == 1, f"run {run} still colliding at the horizon"


def test_slot_successes_never_exceed_on_channels():
    cfg = _cfg(channels=(HI, HI, HI), users=(UserSpec(0.5), UserSpec(0.5)), horizon=400)
    tr = run_once(cfg, 2)
    on = np.vstack(
        [realize(ch, substream(cfg.seed, 2, CHANNEL, c), 400) for c, ch in enumerate(cfg.channels)]
    )
    increments = np.diff(np.concatenate([[0], tr.asa_cum]))
    assert np.all(increments >= 0)
    assert np.all(increments <= on.sum(axis=0))


def test_entry_slot_delays_participation():
    cfg = _cfg(channels=(NEAR_SURE,), users=(UserSpec(0.5, 100),), horizon=200)
    tr = run_once(cfg, 0)
    assert tr.asa_cum[:100].max() == 0  # nothing before entry
    assert not tr.good[:124].any()  # first period ends 24 slots after entry
    assert tr.good[124:].all()


# --------------------------------------------------------------- aggregation


def test_zero_user_config_has_zero_regret():
    cfg = _cfg(users=(), horizon=100, runs=3)
    tr = monte_carlo(cfg)
    assert np.all(tr.regret_mean == 0.0)
    assert np.all(tr.asa_cum_mean == 0.0)
    assert np.all(tr.good_frac == 1.0)  # vacuously good


def test_regret_identity_is_bit_exact():
    cfg = _cfg(runs=4, horizon=300)
    tr = monte_carlo(cfg)
    assert np.array_equal(tr.regret_mean, tr.centralized_cum - tr.asa_cum_mean)


def test_simulated_baseline_close_to_analytic():
    cfg = _cfg(runs=40, horizon=2000, channels=(HI, HI), users=(UserSpec(0.5), UserSpec(0.5)))
    sim = monte_carlo(dataclasses.replace(cfg, baseline="simulated"))
    ana = monte_carlo(cfg)
    # same channel paths, same policy draws: only the baseline differs
    assert np.array_equal(sim.asa_cum_mean, ana.asa_cum_mean)
    diff = abs(sim.centralized_cum[-1] - ana.centralized_cum[-1])
    # 40 runs of a binomial-like count with per-slot mean 1.0
    assert diff < 4 * np.sqrt(2000 * 0.5 / 40)


def test_aggregation_is_independent_of_thread_count_and_order():
    cfg = _cfg(runs=6, horizon=400, channels=(HI, HI), users=(UserSpec(0.5), UserSpec(0.5)))
    serial = monte_carlo(cfg, threads=1)
    pooled = monte_carlo(cfg, threads=2)
    for field in ("asa_cum_mean", "regret_mean", "regret_stderr", "good_frac", "pie"):
        assert np.array_equal(getattr(serial, field), getattr(pooled, field)), field


def test_user_late_rate_of_settled_user_matches_target():
    cfg = _cfg(channels=(NEAR_SURE,), horizon=2000, runs=30)
    tr = monte_carlo(cfg)
    assert tr.user_late_rate[0] == pytest.approx(0.5, abs=0.02)


# ------------------------------------------------------------- period views


def test_period_schedule_matches_direct_summation():
    lengths, ends = period_schedule(24, 12, 5000)
    assert list(lengths[:3]) == [24, 36, 48]
    assert list(ends[:3]) == [24, 60, 108]
    assert len(lengths) == 27
    # independent re-derivation
    s, k, exp_ends = 0, 0, []
    while s + 24 + 12 * k <= 5000:
        s += 24 + 12 * k
        exp_ends.append(s)
        k += 1
    assert list(ends) == exp_ends


def test_pie_starts_at_one_and_tracks_detector_false_alarms():
    # every user spends period 1 sensing, so the first period is never good;
    # period 2 is bad only on (false alarm, tails), i.e. half the FA rate
    cfg = _cfg(runs=1500, horizon=400, seed=11)
    est = estimate_bad_period_prob(cfg)
    assert est.pie[0] == 1.0
    curve = detector_error_curve(HI, 0.5, 0.2, [24], trials=10000, seed=2)
    fa24 = curve.fa[0]
    se = np.sqrt(max(est.pie[1] * (1 - est.pie[1]), 0.25 / 1500) / 1500)
    se_fa = np.sqrt(fa24 * (1 - fa24) / 10000) / 2
    tol = 3 * np.hypot(se, se_fa)
    assert est.pie[1] == pytest.approx(fa24 / 2, abs=tol)
    assert est.pie[1] >= est.pie[-1]


def test_pie_all_zero_after_settling_on_near_sure_channel():
    cfg = _cfg(channels=(NEAR_SURE,), horizon=400, runs=50)
    est = estimate_bad_period_prob(cfg)
    assert est.pie[0] == 1.0
    assert np.all(est.pie[1:] == 0.0)


def test_period_views_require_synchronized_entries():
    cfg = _cfg(users=(UserSpec(0.5, 5),))
    with pytest.raises(ConfigError):
        estimate_bad_period_prob(cfg)
    with pytest.raises(ConfigError):
        bound_check(cfg)


def test_bound_check_requires_analytic_baseline():
    cfg = _cfg(baseline="simulated")
    with pytest.raises(ConfigError):
        bound_check(cfg)


def test_bound_holds_for_single_user_single_channel():
    cfg = _cfg(runs=200, horizon=600)
    rep = bound_check(cfg)
    assert rep.all_hold
    assert rep.first_violation is None
    # period 1: everyone sensing, pie = 1, so the bound starts at N * L0
    assert rep.pie[0] == 1.0
    assert rep.bound_mean[0] == pytest.approx(24.0)
    assert rep.regret_mean[0] == pytest.approx(12.0, abs=1.0)
    assert np.all(np.diff(rep.bound_mean) >= 0)


def test_bound_rhs_flat_once_pie_vanishes():
    cfg = _cfg(channels=(NEAR_SURE,), horizon=400, runs=50)
    rep = bound_check(cfg)
    assert np.all(rep.pie[1:] == 0.0)
    assert np.all(rep.bound_mean == rep.bound_mean[0])
    # measured regret must be flat too, within noise
    assert rep.regret_mean[-1] - rep.regret_mean[0] <= 3 * rep.regret_stderr[-1] + 1e-9


# ------------------------------------------------------------------ fitting


def test_decay_fit_exact_geometric_series():
    fit = decay_fit([2.0**-i for i in range(1, 11)])
    assert fit.slope == pytest.approx(-np.log(2), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.points == 10


def test_decay_fit_constant_series():
    fit = decay_fit([0.25] * 6)
    assert fit.slope == 0.0
    assert fit.r_squared == 0.0
    assert fit.intercept == pytest.approx(np.log(0.25))


def test_decay_fit_excludes_zeros():
    # the zero is dropped; the rest stay on their original axis positions
    values = [0.5, 0.25, 0.0, 0.0625, 0.03125]
    fit = decay_fit(values)
    assert fit.points == 4
    assert fit.slope == pytest.approx(-np.log(2), abs=1e-12)


def test_decay_fit_needs_three_positive_points():
    with pytest.raises(InsufficientDataError):
        decay_fit([0.5, 0.0, 0.25])


def test_decay_fit_with_explicit_axis():
    xs = [12, 24, 48]
    fit = decay_fit([np.exp(-0.1 * x) for x in xs], x=xs)
    assert fit.slope == pytest.approx(-0.1, abs=1e-12)


# ----------------------------------------------------------- detector curve


def test_detector_curve_saturated_occupant_never_missed():
    # occupant transmitting every slot: availability is identically zero
    curve = detector_error_curve(HI, HI.eta, 0.2, [12, 24, 36], trials=1000, seed=0)
    assert np.all(curve.md == 0.0)
    assert np.all(curve.h1_mean == 0.0)


def test_detector_curve_validates_inputs():
    with pytest.raises(InvalidParameterError):
        detector_error_curve(HI, 0.5, 0.2, [24], trials=999)
    with pytest.raises(InvalidParameterError):
        detector_error_curve(HI, 0.8, 0.2, [24], trials=1000)  # rate above eta
    with pytest.raises(InvalidParameterError):
        detector_error_curve(HI, 0.5, 0.7, [24], trials=1000)  # epsilon above eta


def test_wilson_interval_behaves_at_zero():
    lo, hi = wilson_interval(0, 10000)
    assert lo == 0.0
    assert 0.0 < hi < 4 / 10000
    lo1, hi1 = wilson_interval(50, 10000)
    assert lo < lo1 < 50 / 10000 < hi1


# ----------------------------------------------------- internal boundary data


def test_boundary_regret_matches_trace():
    cfg = _cfg(runs=8, horizon=300)
    trace, bd = _monte_carlo(cfg, threads=1)
    assert bd is not None
    idx = bd.ends - 1
    assert np.allclose(bd.regret.mean(axis=0), trace.centralized_cum[idx] - trace.asa_cum_mean[idx])
    assert np.allclose(bd.bad.mean(axis=0), trace.pie)
