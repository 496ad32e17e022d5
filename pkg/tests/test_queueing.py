"""Finite-buffer queue formulas against frozen birth-death oracle values.

The frozen numbers were produced by solving the balance equations as a
linear system and assembling on-time probabilities from scipy's Erlang
cdf; the same construction is re-run live in test_certify.
"""

import math

import numpy as np
import pytest

from leadquote import (
    mm1_ontime_prob,
    mm1k_blocking,
    mm1k_mean_number,
    mm1k_mean_sojourn,
    mm1k_metrics,
    mm1k_ontime_prob,
    mm1k_throughput,
)

# (lam, mu, K) -> (block, mean number, throughput), from the linear solve
BD_FROZEN = {
    (5.0, 10.0, 1): (1.0 / 3.0, 1.0 / 3.0, 10.0 / 3.0),
    (5.0, 10.0, 3): (0.0666666666666666, 0.733333333333333, 4.66666666666667),
    (12.0, 10.0, 4): (0.278649752741346, 2.35949258224038, 8.65620296710385),
    (10.0, 10.0, 4): (0.2, 2.0, 8.0),
}

# (lam, mu, K, l) -> P(W <= l), from stationary law + scipy erlang cdf
ONTIME_FROZEN = {
    (5.0, 10.0, 1, 0.2): 0.864664716763388,
    (5.0, 10.0, 3, 0.3): 0.854195014065542,
    (10.0, 10.0, 4, 0.5): 0.890789109056491,
    (12.0, 10.0, 2, 0.25): 0.805980912343511,
    (5.0, 10.0, 20, 2.0): 0.999955205326681,
}


@pytest.mark.parametrize("key,want", sorted(BD_FROZEN.items()))
def test_metrics_match_birth_death_values(key, want):
    lam, mu, K = key
    assert mm1k_blocking(lam, mu, K) == pytest.approx(want[0], abs=1e-12)
    assert mm1k_mean_number(lam, mu, K) == pytest.approx(want[1], abs=1e-12)
    assert mm1k_throughput(lam, mu, K) == pytest.approx(want[2], abs=1e-12)


@pytest.mark.parametrize("key,want", sorted(ONTIME_FROZEN.items()))
def test_ontime_matches_erlang_assembly(key, want):
    lam, mu, K, l = key
    assert mm1k_ontime_prob(lam, mu, K, l) == pytest.approx(want, abs=1e-12)


def test_single_slot_identities():
    """K = 1 collapses to rho/(1+rho) everywhere and W = 1/mu."""
    for lam, mu in ((5.0, 10.0), (2.0, 7.0), (30.0, 10.0)):
        rho = lam / mu
        assert mm1k_blocking(lam, mu, 1) == pytest.approx(rho / (1 + rho), rel=1e-14)
        assert mm1k_mean_number(lam, mu, 1) == pytest.approx(rho / (1 + rho), rel=1e-14)
        assert mm1k_mean_sojourn(lam, mu, 1) == pytest.approx(1.0 / mu, rel=1e-12)
        want = 1.0 - math.exp(-mu * 0.3)
        assert mm1k_ontime_prob(lam, mu, 1, 0.3) == pytest.approx(want, rel=1e-14)


def test_critical_load_values():
    for K in (1, 2, 5, 20):
        assert mm1k_blocking(10.0, 10.0, K) == pytest.approx(1.0 / (K + 1), rel=1e-13)
        assert mm1k_mean_number(10.0, 10.0, K) == pytest.approx(K / 2.0, rel=1e-13)


def test_continuity_through_critical_load():
    """Approaching rho = 1 from both sides lands on the K/2 limit."""
    for K in (1, 2, 5, 20):
        for lam in (10.0 * (1 - 1e-6), 10.0 * (1 + 1e-6)):
            assert abs(mm1k_mean_number(lam, 10.0, K) - K / 2.0) < 1e-4
    # the limit derivative grows ~K^2/6, so scale the window for K = 200
    for lam in (10.0 * (1 - 1e-6), 10.0 * (1 + 1e-6)):
        assert abs(mm1k_mean_number(lam, 10.0, 200) - 100.0) < 200**2 * 1e-6


def test_accept_all_limit_at_large_buffer():
    """K = 50 at rho = 0.5 is the plain M/M/1 to near machine precision."""
    ls = mm1k_mean_number(5.0, 10.0, 50)
    w = mm1k_mean_sojourn(5.0, 10.0, 50)
    assert abs(ls - 1.0) < 1e-9
    assert abs(w - 0.2) < 1e-9
    assert mm1k_blocking(5.0, 10.0, 50) < 1e-12


def test_heavy_traffic_saturates():
    # far above capacity the server never idles: throughput -> mu
    assert mm1k_throughput(500.0, 10.0, 3) == pytest.approx(10.0, rel=1e-3)
    assert mm1k_blocking(500.0, 10.0, 3) > 0.9


def test_ontime_monotone_in_lead_time_and_load():
    ls = np.linspace(0.0, 1.5, 40)
    for K in (1, 3, 10):
        vals = mm1k_ontime_prob(5.0, 10.0, K, ls)
        assert np.all(np.diff(vals) >= -1e-14)
        assert vals[0] == 0.0
    lams = np.linspace(0.1, 30.0, 60)
    for K in (2, 10):
        vals = mm1k_ontime_prob(lams, 10.0, K, 0.4)
        assert np.all(np.diff(vals) <= 1e-14)


def test_ontime_limits():
    assert mm1k_ontime_prob(5.0, 10.0, 4, 0.0) == 0.0
    assert mm1k_ontime_prob(5.0, 10.0, 4, 50.0) == pytest.approx(1.0, abs=1e-12)


def test_zero_arrival_rate():
    assert mm1k_blocking(0.0, 10.0, 3) == 0.0
    assert mm1k_mean_number(0.0, 10.0, 3) == 0.0
    assert mm1k_throughput(0.0, 10.0, 3) == 0.0
    # an arrival to an empty system just faces its own service time
    assert mm1k_ontime_prob(0.0, 10.0, 3, 0.2) == pytest.approx(1 - math.exp(-2.0), rel=1e-14)
    with pytest.raises(ValueError):
        mm1k_mean_sojourn(0.0, 10.0, 3)


def test_vectorized_matches_scalar():
    # numpy routes 0-d pow through libm but arrays through its simd kernel,
    # which may round the last ulp differently, hence rel and not ==
    lams = np.array([0.0, 2.0, 9.999999999, 10.0, 17.5])
    for K in (1, 4, 37):
        blocks = mm1k_blocking(lams, 10.0, K)
        numbers = mm1k_mean_number(lams, 10.0, K)
        ontimes = mm1k_ontime_prob(lams, 10.0, K, 0.35)
        for i, lam in enumerate(lams):
            assert blocks[i] == pytest.approx(mm1k_blocking(float(lam), 10.0, K), rel=5e-16, abs=0.0)
            assert numbers[i] == pytest.approx(mm1k_mean_number(float(lam), 10.0, K), rel=5e-16, abs=0.0)
            assert ontimes[i] == pytest.approx(mm1k_ontime_prob(float(lam), 10.0, K, 0.35), rel=5e-16, abs=0.0)


def test_broadcasting_column_against_row():
    lams = np.linspace(0.5, 20.0, 7)[:, None]
    leads = np.linspace(0.01, 1.0, 5)[None, :]
    grid = mm1k_ontime_prob(lams, 10.0, 6, leads)
    assert grid.shape == (7, 5)
    assert grid[3, 2] == mm1k_ontime_prob(float(lams[3, 0]), 10.0, 6, float(leads[0, 2]))


def test_large_buffer_stays_finite():
    # running-product Erlang terms must not overflow at K = 500
    for lam in (1.0, 10.0, 40.0):
        b = mm1k_blocking(lam, 10.0, 500)
        v = mm1k_ontime_prob(lam, 10.0, 500, 2.0)
        assert 0.0 <= b <= 1.0 and np.isfinite(b)
        assert 0.0 <= v <= 1.0 and np.isfinite(v)


def test_mm1_ontime():
    assert mm1_ontime_prob(5.0, 10.0, 0.3) == pytest.approx(1 - math.exp(-1.5), rel=1e-14)
    with pytest.raises(ValueError):
        mm1_ontime_prob(10.0, 10.0, 0.3)


def test_input_validation():
    with pytest.raises(ValueError):
        mm1k_blocking(-1.0, 10.0, 2)
    with pytest.raises(ValueError):
        mm1k_blocking(5.0, 0.0, 2)
    with pytest.raises(ValueError):
        mm1k_blocking(5.0, 10.0, 0)
    with pytest.raises(ValueError):
        mm1k_ontime_prob(5.0, 10.0, 2, -0.1)


def test_metrics_bundle_consistency():
    m = mm1k_metrics(5.0, 10.0, 3, 0.3)
    assert m.rho == 0.5
    assert m.block_prob == mm1k_blocking(5.0, 10.0, 3)
    assert m.mean_sojourn == pytest.approx(m.mean_number / m.throughput, rel=1e-14)
    assert m.ontime_prob == pytest.approx(ONTIME_FROZEN[(5.0, 10.0, 3, 0.3)], abs=1e-12)
    with pytest.raises(ValueError):
        mm1k_metrics(0.0, 10.0, 3, 0.3)
