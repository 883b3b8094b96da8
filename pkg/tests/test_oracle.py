import itertools

import numpy as np
import pytest

from asa_sim import (
    Allocation,
    InfeasibleError,
    InvalidParameterError,
    UnsupportedRegimeError,
    centralized_cumulative,
    fixed_allocation,
    geometric_channel,
    in_region,
    realize,
    separation_prob_bound,
    simulate_fixed_allocation,
)

ETA_HI = 3.23 / (3.23 + 1.43)
ETA_LO = 3.23 / (3.23 + 4.3)


def brute_force_feasible(rates, eta):
    """Exhaustive search over all injective user -> channel assignments."""
    for perm in itertools.permutations(range(len(eta)), len(rates)):
        if all(r <= eta[c] for r, c in zip(rates, perm)):
            return True
    return False


# ------------------------------------------------------------------- region


def test_in_region_examples():
    rates = (0.5, 0.5, 0.4)
    eta = (ETA_HI, ETA_HI, ETA_LO, ETA_LO)
    assert brute_force_feasible(rates, eta) is True  # the independent oracle
    assert in_region(rates, eta) is True

    assert in_region((0.5, 0.5, 0.5), eta) is False  # fails at the third slot
    assert in_region((0.5,) * 6, (ETA_HI,) * 6) is True


def test_in_region_rejects_more_users_than_channels():
    with pytest.raises(UnsupportedRegimeError):
        in_region((0.5, 0.5), (0.9,))


def test_in_region_rejects_rates_outside_unit_interval():
    with pytest.raises(InvalidParameterError):
        in_region((0.5, 1.0), (0.9, 0.9))


def test_in_region_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, n + 1))
        rates = tuple(rng.uniform(0.05, 0.95, size=k))
        eta = tuple(rng.uniform(0.05, 0.95, size=n))
        assert in_region(rates, eta) == brute_force_feasible(rates, eta)


# --------------------------------------------------------------- allocation


def test_fixed_allocation_pairs_by_rank():
    alloc = fixed_allocation((0.4, 0.6), (0.5, 0.7))
    assert alloc.assignment == (0, 1)  # 0.6-user must take the 0.7 channel
    assert alloc.feasible


def test_fixed_allocation_breaks_ties_by_index():
    alloc = fixed_allocation((0.5, 0.5, 0.5), (ETA_HI, ETA_HI, ETA_HI))
    assert alloc.assignment == (0, 1, 2)


def test_fixed_allocation_rejects_infeasible():
    with pytest.raises(InfeasibleError):
        fixed_allocation((0.8, 0.8), (0.9, 0.7))


def test_fixed_allocation_always_feasible_when_region_holds():
    rng = np.random.default_rng(99)
    checked = 0
    while checked < 200:
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, n + 1))
        rates = tuple(rng.uniform(0.05, 0.95, size=k))
        eta = tuple(rng.uniform(0.05, 0.95, size=n))
        if not in_region(rates, eta):
            continue
        alloc = fixed_allocation(rates, eta)
        assert len(set(alloc.assignment)) == k  # injective
        assert all(rates[u] <= eta[c] for u, c in enumerate(alloc.assignment))
        checked += 1


# ----------------------------------------------------------------- baseline


def test_centralized_cumulative_examples():
    assert centralized_cumulative((0.5, 0.5), (0, 0), 100) == pytest.approx(100.0)
    assert centralized_cumulative((0.5,), (40,), 30) == 0.0


def test_centralized_cumulative_rejects_negative_time():
    with pytest.raises(InvalidParameterError):
        centralized_cumulative((0.5,), (0,), -1)


def test_centralized_cumulative_piecewise_linear():
    rates, entries = (0.5, 0.25), (10, 40)
    t = np.arange(0, 200)
    vals = centralized_cumulative(rates, entries, t)
    diffs = np.diff(vals)
    assert np.all(diffs >= 0)
    assert np.allclose(diffs[40:], 0.75)  # slope is the sum of entered rates
    assert np.allclose(diffs[10:40], 0.5)
    assert np.allclose(diffs[:10], 0.0)


def test_simulated_baseline_hits_target_rate():
    params = geometric_channel(3.23, 1.43)
    horizon = 100_000
    on = realize(params, 17, horizon)[None, :]
    alloc = Allocation(assignment=(0,))
    rngs = [np.random.default_rng(18)]
    cum = simulate_fixed_allocation(on, alloc, [0.5], [params.eta], [0], rngs)
    assert cum[-1] / horizon == pytest.approx(0.5, abs=0.01)
    assert np.all(np.diff(cum) >= 0)


# -------------------------------------------------------- separation bound


def test_separation_prob_bound_values():
    assert separation_prob_bound(2, (2, 2)) == pytest.approx(0.125)
    assert separation_prob_bound(1, (5,)) == pytest.approx(0.5)
    assert separation_prob_bound(3, (3, 3, 3)) == pytest.approx(1 / 8 * 6 / 27)


def test_separation_prob_bound_zero_when_short_of_channels():
    assert separation_prob_bound(2, (1, 1)) == 0.0
    assert separation_prob_bound(3, (1, 2, 2)) == 0.0


def test_separation_prob_bound_range_and_monotonicity():
    pool = 6
    vals = [separation_prob_bound(k, (pool,) * k) for k in range(1, 9)]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0  # more users than channels


def test_separation_prob_bound_sorts_its_input():
    assert separation_prob_bound(3, (5, 3, 4)) == separation_prob_bound(3, (3, 4, 5))
