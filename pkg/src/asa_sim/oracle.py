"""Centralized fixed-allocation baseline.

The reference scheme a coordinator could run: give each user its own
channel once and for all, and let user u transmit there with probability
r_u / eta of the assigned channel, for an expected r_u successes per slot.
A rate vector is supportable exactly when the rates, sorted descending,
are dominated componentwise by the sorted channel on-fractions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InvalidParameterError, UnsupportedRegimeError


@dataclass(frozen=True)
class Allocation:
    """Injective user -> channel map; assignment[u] is user u's channel."""

    assignment: tuple[int, ...]
    feasible: bool = True


def _validate_rates(rates) -> None:
    for i, r in enumerate(rates):
        if not 0.0 < r < 1.0:
            raise InvalidParameterError(f"rate[{i}] must be in (0,1), got {r}")


def in_region(rates, eta) -> bool:
    """Whether some injective assignment supports every user's rate.

    Checked by the sorted componentwise comparison, which is equivalent to
    exhaustive search over injective assignments (greedy pairing of the
    largest rate with the largest on-fraction is optimal here).
    """
    if len(rates) > len(eta):
        raise UnsupportedRegimeError(
            f"{len(rates)} users exceed {len(eta)} channels; only K <= N is supported"
        )
    _validate_rates(rates)
    r_sorted = sorted(rates, reverse=True)
    e_sorted = sorted(eta, reverse=True)
    return all(r <= e for r, e in zip(r_sorted, e_sorted))


def fixed_allocation(rates, eta) -> Allocation:
    """Deterministic feasible assignment: i-th largest rate gets the i-th
    best channel, ties broken by original index."""
    if not in_region(rates, eta):
        raise InfeasibleError(
            f"rates {tuple(rates)} are not supportable by on-fractions {tuple(eta)}"
        )
    users = sorted(range(len(rates)), key=lambda u: (-rates[u], u))
    chans = sorted(range(len(eta)), key=lambda c: (-eta[c], c))
    assignment = [0] * len(rates)
    for u, c in zip(users, chans):
        assignment[u] = c
    return Allocation(assignment=tuple(assignment))


def centralized_cumulative(rates, entries, t):
    """Expected centralized success count after `t` slots (exact).

    Each allocated user succeeds with per-slot probability equal to its
    rate, so the expectation is sum_u r_u * max(0, t - entry_u).  `t` may
    be a scalar or an array of slot counts.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidParameterError("slot count must be >= 0")
    total = np.zeros_like(t_arr)
    for r, e in zip(rates, entries):
        total = total + r * np.clip(t_arr - e, 0.0, None)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(total)
    return total


def simulate_fixed_allocation(on, allocation: Allocation, rates, eta, entries, rngs):
    """Realized centralized success counts on given channel sample paths.

    `on` is the (channels x horizon) boolean matrix the distributed users
    saw; allocated users transmit independently on their own channels, so
    there are never collisions and a success is simply an on slot with a
    transmission.  Returns the cumulative total as an int64 horizon vector.
    """
    horizon = on.shape[1]
    total = np.zeros(horizon, dtype=np.int64)
    for u, ch in enumerate(allocation.assignment):
        entry = int(entries[u])
        if entry >= horizon:
            continue
        q = rates[u] / eta[ch]
        tx = rngs[u].random(horizon - entry) < q
        hits = tx & on[ch, entry:]
        total[entry:] += np.cumsum(hits)
    return total


def separation_prob_bound(num_users: int, qualified_counts) -> float:
    """Lower bound on the chance one round of fair coins plus uniform
    channel draws lands every user alone on a qualified channel.

    With counts sorted ascending the bound is
    (1/2^K) * prod_k (n_k - k + 1) / n_k; it is 0 whenever some user has
    fewer qualified channels than its rank.
    """
    counts = sorted(int(n) for n in qualified_counts)
    if len(counts) != num_users:
        raise InvalidParameterError(
            f"expected {num_users} qualified counts, got {len(counts)}"
        )
    prob = 0.5**num_users
    for k, n in enumerate(counts, start=1):
        if n < k:
            return 0.0
        prob *= (n - k + 1) / n
    return prob
