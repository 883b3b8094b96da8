"""Monte Carlo engine: full simulations, regret traces, detector curves.

A single run advances every channel and user slot by slot through the
arbiter and records cumulative successes plus a good-configuration flag
(all users in access mode on pairwise-distinct channels).  Runs are
aggregated into a regret trace against the centralized baseline; the
analytic baseline uses the exact expectation sum_u r_u * (t - entry_u)+,
which keeps baseline noise out of the regret curves.

When every user enters at slot 0 all users share the same period
boundaries, which enables the period-indexed views: the per-period
bad-configuration probability, and the cumulative regret bound
sum_i N * L_i * p_i checked against the measured regret.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import InitVar, dataclass
from functools import partial
from typing import Optional

import numpy as np
from scipy import stats as sps

from . import rng as rng_mod
from .arbiter import resolve_slot
from .channels import ChannelParams, realize
from .errors import (
    ConfigError,
    InsufficientDataError,
    InvalidParameterError,
    UnsupportedRegimeError,
)
from .oracle import (
    Allocation,
    centralized_cumulative,
    fixed_allocation,
    in_region,
    simulate_fixed_allocation,
)
from .policy import (
    Mode,
    OccupancyVerdict,
    PolicyConfig,
    default_epsilon,
    end_period_transition,
    enter,
    make_user,
    occupancy_test,
    record_outcome,
    slot_action,
)
from .rng import substream

ANALYTIC = "analytic"
SIMULATED = "simulated"


@dataclass(frozen=True)
class UserSpec:
    rate: float
    entry: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete, validated description of one experiment."""

    channels: tuple[ChannelParams, ...]
    users: tuple[UserSpec, ...]
    L0: int = 24
    C: int = 12
    epsilon: Optional[float] = None
    horizon: int = 5000
    runs: int = 20
    seed: int = 0
    baseline: str = ANALYTIC
    validate_region: InitVar[bool] = True

    def __post_init__(self, validate_region: bool) -> None:
        if not self.channels:
            raise ConfigError("config needs at least one channel")
        if self.L0 < 1:
            raise ConfigError(f"policy.L0 must be >= 1, got {self.L0}")
        if self.C < 0:
            raise ConfigError(f"policy.C must be >= 0, got {self.C}")
        if self.horizon < self.L0:
            raise ConfigError(
                f"experiment.horizon must be >= L0 ({self.L0}), got {self.horizon}"
            )
        if self.runs < 1:
            raise ConfigError(f"experiment.runs must be >= 1, got {self.runs}")
        if self.seed < 0:
            raise ConfigError(f"experiment.seed must be >= 0, got {self.seed}")
        if self.baseline not in (ANALYTIC, SIMULATED):
            raise ConfigError(
                f"experiment.baseline must be '{ANALYTIC}' or '{SIMULATED}', got {self.baseline!r}"
            )
        for i, spec in enumerate(self.users):
            if not 0.0 < spec.rate < 1.0:
                raise ConfigError(f"user.rate must be in (0,1), got {spec.rate} (user {i})")
            if spec.entry < 0:
                raise ConfigError(f"user.entry must be >= 0, got {spec.entry} (user {i})")
        if len(self.users) > len(self.channels):
            raise ConfigError(
                f"{len(self.users)} users exceed {len(self.channels)} channels; "
                "only K <= N is supported"
            )
        if self.users:
            r_min = self.r_min()
            eps = self.resolved_epsilon()
            if not 0.0 < eps < r_min / 2.0:
                raise ConfigError(
                    f"policy.epsilon must be in (0, r_min/2) = (0, {r_min / 2.0}), got {eps}"
                )
            if validate_region:
                rates = [s.rate for s in self.users]
                try:
                    feasible = in_region(rates, self.eta())
                except (UnsupportedRegimeError, InvalidParameterError) as exc:
                    raise ConfigError(str(exc)) from exc
                if not feasible:
                    r_sorted = sorted(rates, reverse=True)
                    e_sorted = sorted(self.eta(), reverse=True)
                    bad = next(
                        i for i, (r, e) in enumerate(zip(r_sorted, e_sorted)) if r > e
                    )
                    raise ConfigError(
                        "user rates are infeasible: sorted rate "
                        f"#{bad + 1} ({r_sorted[bad]}) exceeds sorted eta #{bad + 1} "
                        f"({e_sorted[bad]})"
                    )

    def eta(self) -> tuple[float, ...]:
        return tuple(ch.eta for ch in self.channels)

    def r_min(self) -> float:
        if not self.users:
            raise ConfigError("r_min is undefined without users")
        return min(s.rate for s in self.users)

    def resolved_epsilon(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return default_epsilon(self.r_min())

    def policy(self) -> PolicyConfig:
        return PolicyConfig(
            L0=self.L0,
            C=self.C,
            epsilon=self.resolved_epsilon(),
            r_min=self.r_min(),
            eta=self.eta(),
        )

    def allocation(self) -> Allocation:
        return fixed_allocation([s.rate for s in self.users], self.eta())

    def synchronized(self) -> bool:
        return all(s.entry == 0 for s in self.users)


@dataclass
class RunTrace:
    """Raw per-run output (one Monte Carlo run)."""

    asa_cum: np.ndarray  # (horizon,) cumulative distributed successes
    good: np.ndarray  # (horizon,) good-configuration flag per slot
    late_successes: np.ndarray  # (K,) per-user successes in the final half
    cent_cum: Optional[np.ndarray]  # (horizon,) simulated baseline, if enabled


@dataclass
class RegretTrace:
    """Aggregated Monte Carlo trace.

    regret_mean equals centralized_cum - asa_cum_mean slot by slot; the
    period-indexed fields are populated only when all users enter at slot 0
    so period boundaries align across users.
    """

    horizon: int
    runs: int
    slots: np.ndarray  # 1..horizon (number of elapsed slots)
    centralized_cum: np.ndarray
    asa_cum_mean: np.ndarray
    regret_mean: np.ndarray
    regret_stderr: np.ndarray
    good_frac: np.ndarray
    user_late_rate: np.ndarray  # (K,) mean success rate over the final half
    period_index: Optional[np.ndarray] = None  # 1..P
    period_length: Optional[np.ndarray] = None
    period_end_slot: Optional[np.ndarray] = None
    pie: Optional[np.ndarray] = None  # per-period bad-configuration frequency


@dataclass
class _BoundaryData:
    """Per-run values at the shared period boundaries (synchronized entry)."""

    lengths: np.ndarray  # (P,)
    ends: np.ndarray  # (P,) boundary as "after s slots"
    bad: np.ndarray  # (runs, P) bad-configuration flags
    regret: np.ndarray  # (runs, P) per-run regret at each boundary


@dataclass
class PeriodErrorEstimate:
    """Per-period probability that the configuration is not good."""

    period: np.ndarray  # 1..P
    length: np.ndarray
    end_slot: np.ndarray
    pie: np.ndarray
    runs: int


@dataclass
class BoundReport:
    """Cumulative regret vs the per-period bound sum_i N * L_i * p_i.

    margin is bound_mean - regret_mean + 3 * paired stderr; the inequality
    is declared violated at the first period with negative margin.
    """

    period: np.ndarray
    length: np.ndarray
    end_slot: np.ndarray
    regret_mean: np.ndarray
    regret_stderr: np.ndarray
    pie: np.ndarray
    bound_mean: np.ndarray
    bound_stderr: np.ndarray
    margin: np.ndarray
    holds: np.ndarray
    runs: int

    @property
    def all_hold(self) -> bool:
        return bool(np.all(self.holds))

    @property
    def first_violation(self) -> Optional[int]:
        bad = np.nonzero(~self.holds)[0]
        return int(self.period[bad[0]]) if bad.size else None


def period_schedule(L0: int, C: int, horizon: int):
    """Lengths and end slots of the complete detection periods in `horizon`
    when all users enter at slot 0 (period i has length L0 + (i-1)*C)."""
    lengths: list[int] = []
    ends: list[int] = []
    s, k = 0, 0
    while True:
        n = L0 + k * C
        if s + n > horizon:
            break
        s += n
        lengths.append(n)
        ends.append(s)
        k += 1
    return np.asarray(lengths, dtype=np.int64), np.asarray(ends, dtype=np.int64)


def _good_configuration(users, n_users: int) -> int:
    chans = [st.channel for st in users if st.entered and st.mode is Mode.ACCESS]
    if len(chans) != n_users:
        return 0
    return 1 if len(set(chans)) == n_users else 0


def run_once(config: ExperimentConfig, run_index: int) -> RunTrace:
    """One deterministic run: all streams derive from (seed, run_index)."""
    horizon = config.horizon
    n_users = len(config.users)
    seed = config.seed

    on = np.vstack(
        [
            realize(ch, substream(seed, run_index, rng_mod.CHANNEL, c), horizon)
            for c, ch in enumerate(config.channels)
        ]
    )
    on_cols = on.T.tolist()

    asa_cum = np.empty(horizon, dtype=np.int64)
    good_flags = np.empty(horizon, dtype=np.uint8)
    late_start = horizon - horizon // 2
    late = np.zeros(n_users, dtype=np.int64)

    if n_users:
        pol = config.policy()
        users = [make_user(spec.rate, pol) for spec in config.users]
        tx_rngs = [substream(seed, run_index, rng_mod.USER_TX, u) for u in range(n_users)]
        pol_rngs = [
            substream(seed, run_index, rng_mod.USER_POLICY, u) for u in range(n_users)
        ]
        entry_map: dict[int, list[int]] = {}
        for u, spec in enumerate(config.users):
            if spec.entry < horizon:
                entry_map.setdefault(spec.entry, []).append(u)
    else:
        pol, users, tx_rngs, pol_rngs, entry_map = None, [], [], [], {}

    user_range = range(n_users)
    total = 0
    good = _good_configuration(users, n_users)
    dirty = False
    for t in range(horizon):
        if entry_map and t in entry_map:
            for u in entry_map.pop(t):
                enter(users[u], pol, pol_rngs[u])
            dirty = True
        actions = [slot_action(users[u], tx_rngs[u]) for u in user_range]
        out = resolve_slot(on_cols[t], actions)
        total += out.successes_total
        asa_cum[t] = total
        if dirty:
            good = _good_configuration(users, n_users)
            dirty = False
        good_flags[t] = good
        avail = out.availability
        succ = out.success
        count_late = t >= late_start
        for u in user_range:
            a = avail[u]
            if a is None:
                continue
            if count_late and succ[u]:
                late[u] += 1
            st = users[u]
            record_outcome(st, a)
            if st.slots_in_period == st.period_length:
                end_period_transition(st, pol, pol_rngs[u])
                dirty = True

    cent_cum = None
    if config.baseline == SIMULATED and n_users:
        alloc = config.allocation()
        base_rngs = [substream(seed, run_index, rng_mod.BASELINE, u) for u in user_range]
        cent_cum = simulate_fixed_allocation(
            on,
            alloc,
            [s.rate for s in config.users],
            config.eta(),
            [s.entry for s in config.users],
            base_rngs,
        )
    return RunTrace(asa_cum=asa_cum, good=good_flags, late_successes=late, cent_cum=cent_cum)


def _resolve_workers(threads: Optional[int], runs: int) -> int:
    if threads is None or threads == 0:
        threads = os.cpu_count() or 1
    return max(1, min(threads, runs))


def _iter_traces(config: ExperimentConfig, threads: Optional[int]):
    """Per-run traces in run-index order, regardless of parallelism."""
    workers = _resolve_workers(threads, config.runs)
    if workers == 1:
        for i in range(config.runs):
            yield run_once(config, i)
        return
    chunk = max(1, config.runs // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        yield from ex.map(partial(run_once, config), range(config.runs), chunksize=chunk)


def _monte_carlo(config: ExperimentConfig, threads: Optional[int] = 1):
    horizon, n_runs = config.horizon, config.runs
    n_users = len(config.users)

    analytic = config.baseline == ANALYTIC
    rates = [s.rate for s in config.users]
    entries = [s.entry for s in config.users]
    slots = np.arange(1, horizon + 1, dtype=np.int64)
    cent_exact = np.asarray(centralized_cumulative(rates, entries, slots), dtype=float)

    sync = config.synchronized()
    lengths, ends = period_schedule(config.L0, config.C, horizon)
    n_periods = len(ends)
    boundary_idx = ends - 1  # cumulative value after ends[i] slots

    sum_asa = np.zeros(horizon)
    sum_good = np.zeros(horizon)
    sum_regret = np.zeros(horizon)
    sumsq_regret = np.zeros(horizon)
    sum_cent = np.zeros(horizon)
    late_sum = np.zeros(n_users)
    bad = np.empty((n_runs, n_periods), dtype=np.uint8) if sync else None
    reg_b = np.empty((n_runs, n_periods)) if sync else None

    for r, tr in enumerate(_iter_traces(config, threads)):
        asa = tr.asa_cum.astype(float)
        cent_r = cent_exact if analytic or tr.cent_cum is None else tr.cent_cum.astype(float)
        regret_r = cent_r - asa
        sum_asa += asa
        sum_good += tr.good
        sum_regret += regret_r
        sumsq_regret += regret_r * regret_r
        sum_cent += cent_r
        late_sum += tr.late_successes
        if sync:
            bad[r] = 1 - tr.good[boundary_idx]
            reg_b[r] = regret_r[boundary_idx]

    asa_mean = sum_asa / n_runs
    cent_mean = cent_exact if analytic else sum_cent / n_runs
    # regret is the difference of the stored columns, so the identity
    # regret_mean == centralized_cum - asa_cum_mean is bit-exact on re-read
    regret_mean = cent_mean - asa_mean
    if n_runs > 1:
        run_mean = sum_regret / n_runs
        var = np.clip((sumsq_regret - n_runs * run_mean**2) / (n_runs - 1), 0.0, None)
        regret_stderr = np.sqrt(var / n_runs)
    else:
        regret_stderr = np.zeros(horizon)
    late_window = horizon // 2
    user_late_rate = late_sum / (n_runs * late_window) if n_users else late_sum

    trace = RegretTrace(
        horizon=horizon,
        runs=n_runs,
        slots=slots,
        centralized_cum=cent_mean,
        asa_cum_mean=asa_mean,
        regret_mean=regret_mean,
        regret_stderr=regret_stderr,
        good_frac=sum_good / n_runs,
        user_late_rate=user_late_rate,
        period_index=np.arange(1, n_periods + 1) if sync else None,
        period_length=lengths if sync else None,
        period_end_slot=ends if sync else None,
        pie=bad.mean(axis=0) if sync else None,
    )
    boundary = (
        _BoundaryData(lengths=lengths, ends=ends, bad=bad, regret=reg_b) if sync else None
    )
    return trace, boundary


def monte_carlo(config: ExperimentConfig, threads: Optional[int] = 1) -> RegretTrace:
    """Average `config.runs` independent runs into a regret trace.

    Per-run seeds derive from (master seed, run index), and aggregation
    happens in run-index order, so the result is byte-identical for any
    thread count.
    """
    trace, _ = _monte_carlo(config, threads)
    return trace


def estimate_bad_period_prob(
    config: ExperimentConfig, threads: Optional[int] = 1
) -> PeriodErrorEstimate:
    """Per-period probability that some user is not in access mode or not
    alone on its channel, estimated at each period's final slot.

    Requires synchronized entry (all users enter at slot 0) so that every
    user's i-th period spans the same slots.
    """
    if not config.synchronized():
        raise ConfigError("period-indexed estimation requires all entry slots to be 0")
    trace, bd = _monte_carlo(config, threads)
    return PeriodErrorEstimate(
        period=trace.period_index,
        length=bd.lengths,
        end_slot=bd.ends,
        pie=trace.pie,
        runs=config.runs,
    )


def bound_check(config: ExperimentConfig, threads: Optional[int] = 1) -> BoundReport:
    """Check measured regret against the cumulative per-period bound.

    For every period n the mean regret at the period's end must not exceed
    sum_{i<=n} N * L_i * p_i plus three paired standard errors, where p_i
    is the estimated bad-configuration probability of period i.
    """
    if not config.synchronized():
        raise ConfigError("the regret bound check requires all entry slots to be 0")
    if config.baseline != ANALYTIC:
        raise ConfigError("the regret bound check requires the analytic baseline")
    trace, bd = _monte_carlo(config, threads)
    n_chan = len(config.channels)
    per_period = (n_chan * bd.lengths)[None, :] * bd.bad.astype(float)
    bound_runs = np.cumsum(per_period, axis=1)  # (runs, P)
    diff = bound_runs - bd.regret
    n_runs = config.runs
    bound_mean = bound_runs.mean(axis=0)
    regret_mean = bd.regret.mean(axis=0)
    if n_runs > 1:
        bound_stderr = bound_runs.std(axis=0, ddof=1) / np.sqrt(n_runs)
        regret_stderr = bd.regret.std(axis=0, ddof=1) / np.sqrt(n_runs)
        diff_stderr = diff.std(axis=0, ddof=1) / np.sqrt(n_runs)
    else:
        bound_stderr = np.zeros_like(bound_mean)
        regret_stderr = np.zeros_like(bound_mean)
        diff_stderr = np.zeros_like(bound_mean)
    margin = bound_mean - regret_mean + 3.0 * diff_stderr
    return BoundReport(
        period=trace.period_index,
        length=bd.lengths,
        end_slot=bd.ends,
        regret_mean=regret_mean,
        regret_stderr=regret_stderr,
        pie=trace.pie,
        bound_mean=bound_mean,
        bound_stderr=bound_stderr,
        margin=margin,
        holds=margin >= 0.0,
        runs=n_runs,
    )


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log(value) against an index or length axis."""

    slope: float
    intercept: float
    r_squared: float
    points: int


def decay_fit(values, x=None) -> DecayFit:
    """Fit log(values) ~ intercept + slope * x by ordinary least squares.

    Non-positive values are excluded (with their x).  Needs at least three
    positive points; a constant series yields slope 0 with r_squared 0.
    """
    v = np.asarray(values, dtype=float)
    xs = np.arange(1, len(v) + 1, dtype=float) if x is None else np.asarray(x, dtype=float)
    if len(v) != len(xs):
        raise InvalidParameterError("values and x must have equal length")
    mask = v > 0
    n = int(mask.sum())
    if n < 3:
        raise InsufficientDataError(f"need >= 3 positive points for a decay fit, got {n}")
    log_v = np.log(v[mask])
    if np.all(log_v == log_v[0]):
        return DecayFit(slope=0.0, intercept=float(log_v[0]), r_squared=0.0, points=n)
    res = sps.linregress(xs[mask], log_v)
    return DecayFit(
        slope=float(res.slope),
        intercept=float(res.intercept),
        r_squared=float(res.rvalue**2),
        points=n,
    )


@dataclass
class DetectorCurve:
    """Per-length false-alarm and miss-detection estimates with fits."""

    lengths: np.ndarray
    trials: int
    eta: float
    occupant_rate: float
    epsilon: float
    fa: np.ndarray
    md: np.ndarray
    fa_ci: np.ndarray  # (P, 2) Wilson 95% intervals
    md_ci: np.ndarray
    h0_mean: np.ndarray  # mean availability fraction, free channel
    h1_mean: np.ndarray  # mean availability fraction, occupied channel
    fa_fit: Optional[DecayFit]
    md_fit: Optional[DecayFit]


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """95% score interval for a binomial proportion; behaves sanely at 0."""
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * np.sqrt(p * (1.0 - p) / trials + z2 / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def detector_error_curve(
    channel: ChannelParams,
    occupant_rate: float,
    epsilon: float,
    lengths,
    trials: int,
    seed: int = 0,
) -> DetectorCurve:
    """Monte Carlo error rates of the occupancy test as the period grows.

    False alarm: a lone sensor on a free channel is declared occupied.
    Miss detection: a channel whose occupant transmits with probability
    occupant_rate / eta is declared unoccupied.  The same channel window
    feeds both hypotheses (the occupant's transmissions are independent of
    the channel, so availability under occupation is a thinning of the
    free-channel window).  Zero estimates are kept in the arrays, shown by
    their intervals as <= 1/trials, but excluded from the decay fits.
    """
    if trials < 1000:
        raise InvalidParameterError(f"need >= 1000 trials per length, got {trials}")
    eta = channel.eta
    if not 0.0 < occupant_rate <= eta:
        raise InvalidParameterError(
            f"occupant rate must be in (0, eta], got {occupant_rate} with eta {eta}"
        )
    if not 0.0 < epsilon < eta:
        raise InvalidParameterError(f"epsilon must be in (0, eta), got {epsilon}")
    lengths = np.asarray(sorted(int(L) for L in lengths), dtype=np.int64)
    if len(lengths) == 0 or lengths[0] < 1:
        raise InvalidParameterError("lengths must be positive integers")
    q = occupant_rate / eta
    rng = np.random.default_rng(seed)

    fa = np.zeros(len(lengths))
    md = np.zeros(len(lengths))
    fa_ci = np.zeros((len(lengths), 2))
    md_ci = np.zeros((len(lengths), 2))
    h0_mean = np.zeros(len(lengths))
    h1_mean = np.zeros(len(lengths))
    for j, L in enumerate(lengths):
        L = int(L)
        fa_hits = md_hits = 0
        h0_sum = h1_sum = 0.0
        for _ in range(trials):
            n_on = int(realize(channel, rng, L).sum())
            h0_sum += n_on / L
            if occupancy_test(n_on, L, eta, epsilon) is OccupancyVerdict.OCCUPIED:
                fa_hits += 1
            occupied_avail = int(rng.binomial(n_on, 1.0 - q)) if n_on else 0
            h1_sum += occupied_avail / L
            if occupancy_test(occupied_avail, L, eta, epsilon) is OccupancyVerdict.UNOCCUPIED:
                md_hits += 1
        fa[j] = fa_hits / trials
        md[j] = md_hits / trials
        fa_ci[j] = wilson_interval(fa_hits, trials)
        md_ci[j] = wilson_interval(md_hits, trials)
        h0_mean[j] = h0_sum / trials
        h1_mean[j] = h1_sum / trials

    def _fit(rates) -> Optional[DecayFit]:
        try:
            return decay_fit(rates, x=lengths)
        except InsufficientDataError:
            return None

    return DetectorCurve(
        lengths=lengths,
        trials=trials,
        eta=eta,
        occupant_rate=occupant_rate,
        epsilon=epsilon,
        fa=fa,
        md=md,
        fa_ci=fa_ci,
        md_ci=md_ci,
        h0_mean=h0_mean,
        h1_mean=h1_mean,
        fa_fit=_fit(fa),
        md_fit=_fit(md),
    )
