"""Simulator for distributed multiaccess of slotted on-off channels.

K independent users share N alternating-renewal on-off channels with no
coordination, each running the alternating sensing and access (ASA)
policy: sense or access one channel for a whole detection period, test the
period's availability fraction against the channel's stationary
on-fraction, and hop between qualified channels until everyone settles
alone on a channel.  A centralized fixed-allocation baseline provides the
regret reference, and the experiment module measures regret traces,
detector error decay, and the per-period regret bound.
"""

__version__ = "0.1.0"

from .arbiter import ABSENT, SENSE, TRANSMIT, SlotOutcome, resolve_slot
from .channels import (
    DETERMINISTIC,
    GEOMETRIC,
    STATIONARY_BERNOULLI,
    ChannelParams,
    ChannelProcess,
    PeriodDistribution,
    geometric_channel,
    realize,
    sample_period,
    stationary_fraction,
)
from .config import manifest_lines, parse_config
from .errors import (
    ConfigError,
    InfeasibleError,
    InsufficientDataError,
    InternalLogicError,
    InvalidActionError,
    InvalidParameterError,
    SimulationError,
    UnsupportedRegimeError,
)
from .experiment import (
    ANALYTIC,
    SIMULATED,
    BoundReport,
    DecayFit,
    DetectorCurve,
    ExperimentConfig,
    PeriodErrorEstimate,
    RegretTrace,
    RunTrace,
    UserSpec,
    bound_check,
    decay_fit,
    detector_error_curve,
    estimate_bad_period_prob,
    monte_carlo,
    period_schedule,
    run_once,
    wilson_interval,
)
from .oracle import (
    Allocation,
    centralized_cumulative,
    fixed_allocation,
    in_region,
    separation_prob_bound,
    simulate_fixed_allocation,
)
from .policy import (
    Mode,
    OccupancyVerdict,
    PolicyConfig,
    UserState,
    default_epsilon,
    detection_length,
    end_period_transition,
    enter,
    make_user,
    occupancy_test,
    qualified_channels,
    record_outcome,
    slot_action,
)
