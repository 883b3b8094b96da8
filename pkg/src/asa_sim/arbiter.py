"""Slot resolution: who saw what, who got through.

A channel is *available* to a user in a slot when it is on and nobody else
transmits on it.  A transmission succeeds exactly when the channel was
available to the transmitter; a sensing user passively observes the same
bit it would have received as feedback had it transmitted (sensing never
interferes).  The single feedback bit does not distinguish an off channel
from a collision.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

from .errors import InvalidActionError

TRANSMIT = "transmit"
SENSE = "sense"
ABSENT = "absent"

# an action is (kind, channel); channel is ignored for ABSENT
Action = tuple


class SlotOutcome(NamedTuple):
    channel_on: Sequence[bool]
    availability: list  # per user: 0/1, or None for absent users
    success: list  # per user: 0/1 for transmitters, None otherwise
    successes_total: int


def resolve_slot(channel_on: Sequence[bool], actions: Sequence[Action]) -> SlotOutcome:
    """Resolve one slot given channel states and every user's action.

    Per channel at most one transmission can succeed; two or more
    transmitters on the same channel all fail regardless of channel state.
    """
    n = len(channel_on)
    tx_count = [0] * n
    for kind, ch in actions:
        if kind == ABSENT:
            continue
        if not 0 <= ch < n:
            raise InvalidActionError(f"action targets channel {ch}, valid range is 0..{n - 1}")
        if kind == TRANSMIT:
            tx_count[ch] += 1

    availability: list[Optional[int]] = []
    success: list[Optional[int]] = []
    total = 0
    for kind, ch in actions:
        if kind == ABSENT:
            availability.append(None)
            success.append(None)
            continue
        transmitted = kind == TRANSMIT
        others = tx_count[ch] - 1 if transmitted else tx_count[ch]
        avail = 1 if (channel_on[ch] and others == 0) else 0
        availability.append(avail)
        if transmitted:
            success.append(avail)
            total += avail
        else:
            success.append(None)
    return SlotOutcome(channel_on, availability, success, total)
