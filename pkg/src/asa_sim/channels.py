"""On-off channels as alternating renewal sequences in discrete slots.

A channel is a binary slot process: an on period of random integer length,
then an off period, and so on.  Period lengths come from per-channel
distributions; the long-run fraction of on slots is
mean_on / (mean_on + mean_off).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

GEOMETRIC = "geometric"
DETERMINISTIC = "deterministic"
_KINDS = (GEOMETRIC, DETERMINISTIC)

# the only start rule shipped: draw the initial state from the stationary
# on-fraction, then a full fresh period of that state
STATIONARY_BERNOULLI = "stationary-bernoulli"


def stationary_fraction(on_mean: float, off_mean: float) -> float:
    """Long-run fraction of on slots for the given mean period lengths."""
    if on_mean <= 0 or off_mean <= 0:
        raise InvalidParameterError(
            f"period means must be positive, got on={on_mean}, off={off_mean}"
        )
    return on_mean / (on_mean + off_mean)


@dataclass(frozen=True)
class PeriodDistribution:
    """Distribution of a single period length, in whole slots (always >= 1)."""

    kind: str
    mean: float

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown period distribution kind {self.kind!r}")
        if not self.mean >= 1.0:
            raise InvalidParameterError(f"period mean must be >= 1 slot, got {self.mean}")


def sample_period(dist: PeriodDistribution, rng: np.random.Generator) -> int:
    """Draw one period length.

    Geometric periods live on {1, 2, ...} with success probability 1/mean so
    the requested mean is hit exactly; deterministic periods are the mean
    rounded to the nearest whole slot.
    """
    if dist.kind == GEOMETRIC:
        return int(rng.geometric(1.0 / dist.mean))
    return max(1, round(dist.mean))


@dataclass(frozen=True)
class ChannelParams:
    on: PeriodDistribution
    off: PeriodDistribution

    @property
    def eta(self) -> float:
        """Stationary on fraction, mean_on / (mean_on + mean_off)."""
        return stationary_fraction(self.on.mean, self.off.mean)


def geometric_channel(on_mean: float, off_mean: float) -> ChannelParams:
    """Convenience constructor for the common geometric/geometric channel."""
    return ChannelParams(
        PeriodDistribution(GEOMETRIC, on_mean), PeriodDistribution(GEOMETRIC, off_mean)
    )


class ChannelProcess:
    """Stateful slot-by-slot view of one channel.

    The initial state is on with probability eta, and a full fresh period of
    that state is then sampled.  For geometric periods this start rule is
    exactly stationary (memorylessness); for deterministic periods it is an
    approximation.  Two processes built from the same seed replay
    identically, slot for slot.
    """

    __slots__ = ("params", "state", "remaining", "rng")

    def __init__(
        self, params: ChannelParams, seed, start_rule: str = STATIONARY_BERNOULLI
    ) -> None:
        if start_rule != STATIONARY_BERNOULLI:
            raise InvalidParameterError(f"unknown start rule {start_rule!r}")
        self.params = params
        self.rng = np.random.default_rng(seed)
        self.state = bool(self.rng.random() < params.eta)
        self.remaining = sample_period(params.on if self.state else params.off, self.rng)

    def next_slot(self) -> bool:
        """State for the next slot; True means on."""
        if self.remaining == 0:
            self.state = not self.state
            self.remaining = sample_period(
                self.params.on if self.state else self.params.off, self.rng
            )
        self.remaining -= 1
        return self.state


def realize(params: ChannelParams, seed, length: int) -> np.ndarray:
    """Boolean vector of `length` slot states.

    Draw-for-draw identical to a fresh ChannelProcess advanced `length`
    times, but built period-wise so long horizons stay cheap.  `seed` may be
    anything numpy's default_rng accepts, including an existing Generator.
    """
    if length < 1:
        raise InvalidParameterError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    state = bool(rng.random() < params.eta)
    states: list[bool] = []
    lengths: list[int] = []
    covered = 0
    while covered < length:
        period = sample_period(params.on if state else params.off, rng)
        states.append(state)
        lengths.append(period)
        covered += period
        state = not state
    return np.repeat(np.array(states, dtype=bool), lengths)[:length]
