"""Per-user alternating sensing and access (ASA) state machine.

A user targeting rate r may settle on any channel whose stationary on
fraction is at least r (its qualified set).  It works in whole detection
periods: a period of consecutive slots spent sensing or accessing one
channel, closed by a threshold test on the fraction of available slots
seen during the period.  While accessing channel c the user transmits with
probability r / eta[c], so a settled user consumes exactly its target rate
and leaves the rest of the channel observable.

Period lengths grow linearly with the user's own period counter
(L0 + k * C), which drives detector error probabilities down and makes a
settled user ever harder to dislodge.  On a positive occupancy verdict the
user either abandons the channel for a fresh uniform draw from its
qualified set, or (from sensing, on a fair coin) enters access anyway to
make its presence known to the competing user.  Channel selection itself
takes no slots; it happens inside the boundary transition.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .arbiter import ABSENT, SENSE, TRANSMIT
from .errors import InfeasibleError, InternalLogicError, InvalidParameterError

DEFAULT_EPSILON_FACTOR = 0.4


class Mode(Enum):
    SELECTING = "selecting"
    SENSING = "sensing"
    ACCESS = "access"


class OccupancyVerdict(Enum):
    UNOCCUPIED = "unoccupied"
    OCCUPIED = "occupied"


def default_epsilon(r_min: float) -> float:
    """Detector margin used when none is configured; keeps epsilon < r_min/2."""
    return DEFAULT_EPSILON_FACTOR * r_min


@dataclass(frozen=True)
class PolicyConfig:
    """Shared policy parameters: period schedule, detector margin, channels.

    epsilon must sit strictly below half the smallest rate any user
    targets, so the detection threshold eta - epsilon separates a free
    channel (availability mean eta) from one held by any occupant
    (availability mean at most eta - r_min).
    """

    L0: int
    C: int
    epsilon: float
    r_min: float
    eta: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.L0 < 1:
            raise InvalidParameterError(f"L0 must be >= 1 slot, got {self.L0}")
        if self.C < 0:
            raise InvalidParameterError(f"C must be >= 0 slots, got {self.C}")
        if not 0.0 < self.r_min < 1.0:
            raise InvalidParameterError(f"r_min must be in (0,1), got {self.r_min}")
        if not 0.0 < self.epsilon < self.r_min / 2.0:
            raise InvalidParameterError(
                f"epsilon must be in (0, r_min/2) = (0, {self.r_min / 2.0}), got {self.epsilon}"
            )
        if not self.eta:
            raise InvalidParameterError("eta vector must be nonempty")
        for i, e in enumerate(self.eta):
            if not 0.0 < e < 1.0:
                raise InvalidParameterError(f"eta[{i}] must be in (0,1), got {e}")


@dataclass
class UserState:
    """Mutable per-user state, advanced one slot at a time by its owner."""

    rate: float
    qualified: tuple[int, ...]
    mode: Mode = Mode.SELECTING
    channel: int = -1
    tx_prob: float = 0.0
    period_index: int = 0
    period_length: int = 0
    slots_in_period: int = 0
    avail_count: int = 0
    entered: bool = False


def qualified_channels(rate: float, eta) -> tuple[int, ...]:
    """Indices of channels whose stationary on fraction can carry `rate`."""
    if not 0.0 < rate < 1.0:
        raise InvalidParameterError(f"rate must be in (0,1), got {rate}")
    if len(eta) == 0:
        raise InvalidParameterError("eta vector must be nonempty")
    out = tuple(i for i, e in enumerate(eta) if e >= rate)
    if not out:
        raise InfeasibleError(f"no channel can carry rate {rate} (max eta {max(eta)})")
    return out


def detection_length(k: int, L0: int, C: int) -> int:
    """Length in slots of a user's k-th detection period (k counts from 0)."""
    if k < 0:
        raise InvalidParameterError(f"period index must be >= 0, got {k}")
    return L0 + k * C


def occupancy_test(
    avail_count: int, length: int, eta: float, epsilon: float
) -> OccupancyVerdict:
    """Threshold test on the availability fraction seen over one period.

    A lone user on a free channel sees mean availability eta; a channel
    held by a rate-r occupant shows eta - r.  The threshold eta - epsilon
    lies between the two whenever epsilon < r.  Ties resolve to unoccupied.
    """
    if length < 1:
        raise InvalidParameterError(f"period length must be >= 1, got {length}")
    if not 0 <= avail_count <= length:
        raise InvalidParameterError(
            f"availability count {avail_count} outside [0, {length}]"
        )
    if not 0.0 < epsilon < eta:
        raise InvalidParameterError(f"epsilon must be in (0, eta)=(0, {eta}), got {epsilon}")
    if avail_count / length >= eta - epsilon:
        return OccupancyVerdict.UNOCCUPIED
    return OccupancyVerdict.OCCUPIED


def make_user(rate: float, policy: PolicyConfig) -> UserState:
    """Fresh user for the given target rate; not yet entered."""
    return UserState(rate=rate, qualified=qualified_channels(rate, policy.eta))


def _select_channel(state: UserState, policy: PolicyConfig, rng: np.random.Generator) -> None:
    # uniform over the qualified set, with replacement (may redraw the same)
    state.channel = state.qualified[rng.integers(0, len(state.qualified))]
    state.tx_prob = state.rate / policy.eta[state.channel]


def enter(state: UserState, policy: PolicyConfig, rng: np.random.Generator) -> UserState:
    """Bring a user into the system: pick a channel, start sensing it."""
    state.entered = True
    _select_channel(state, policy, rng)
    state.mode = Mode.SENSING
    state.period_index = 0
    state.period_length = detection_length(0, policy.L0, policy.C)
    state.slots_in_period = 0
    state.avail_count = 0
    return state


def slot_action(state: UserState, rng: np.random.Generator):
    """Action for the upcoming slot.

    Sensing users always sense their channel.  Accessing users transmit
    with probability tx_prob and otherwise sense, so every slot of every
    period yields one availability observation either way.
    """
    if not state.entered:
        return (ABSENT, -1)
    mode = state.mode
    if mode is Mode.ACCESS:
        if rng.random() < state.tx_prob:
            return (TRANSMIT, state.channel)
        return (SENSE, state.channel)
    if mode is Mode.SENSING:
        return (SENSE, state.channel)
    raise InternalLogicError("channel selection is instantaneous and never spans a slot")


def record_outcome(state: UserState, available) -> UserState:
    """Fold one slot's availability bit into the running period counters."""
    if state.slots_in_period >= state.period_length:
        raise InternalLogicError("period already complete; transition before recording more")
    if available:
        state.avail_count += 1
    state.slots_in_period += 1
    return state


def end_period_transition(
    state: UserState, policy: PolicyConfig, rng: np.random.Generator
) -> UserState:
    """Close a completed period: test occupancy, move, reset counters.

    From sensing, an unoccupied verdict enters access; an occupied verdict
    flips a fair coin, heads entering access anyway (to show presence) and
    tails redrawing a channel to sense.  From access, an occupied verdict
    abandons the channel for a fresh draw; otherwise the user stays put.
    The period counter always advances, so the next period is longer by C.
    """
    if state.slots_in_period != state.period_length:
        raise InternalLogicError(
            f"transition at {state.slots_in_period}/{state.period_length} slots"
        )
    verdict = occupancy_test(
        state.avail_count, state.period_length, policy.eta[state.channel], policy.epsilon
    )
    if state.mode is Mode.SENSING:
        if verdict is OccupancyVerdict.UNOCCUPIED:
            state.mode = Mode.ACCESS
        elif rng.random() < 0.5:  # heads: claim the channel anyway
            state.mode = Mode.ACCESS
        else:  # tails: instantaneous reselection
            _select_channel(state, policy, rng)
            state.mode = Mode.SENSING
    elif state.mode is Mode.ACCESS:
        if verdict is OccupancyVerdict.OCCUPIED:
            _select_channel(state, policy, rng)
            state.mode = Mode.SENSING
    else:
        raise InternalLogicError("cannot close a period while selecting a channel")
    state.period_index += 1
    state.period_length = detection_length(state.period_index, policy.L0, policy.C)
    state.slots_in_period = 0
    state.avail_count = 0
    return state
