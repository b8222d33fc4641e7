"""Property-based checks of invariants across the package."""
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cavityspin import experiments as exp
from cavityspin import io, rates, readout, stream
from cavityspin.config import TWO_PI, ExperimentConfig, config_from_dict
from cavityspin.rng import Stream, substream
from cavityspin.stream import Timeline

event_times = st.lists(st.integers(0, 200_000), max_size=40).map(sorted)


def _tl(times):
    return Timeline(np.asarray(times, dtype=np.int64), np.zeros(len(times), int), np.zeros(len(times), int))


@given(event_times, st.integers(1, 5000), st.integers(1, 60_000))
def test_coincidence_windows_are_well_formed(times, t_coin, t_win):
    coins = readout.detect_coincidences(_tl(times), t_coin * 1e-9, t_win * 1e-9)
    t = np.asarray(times)
    for a, b in zip(coins, coins[1:]):
        assert b.t0 >= a.window_end
    for c in coins:
        assert c.window_end - c.t0 == t_win
        i = int(np.searchsorted(t, c.t0, "right")) - 1
        # the trigger is the later photon of a close consecutive pair
        assert i >= 1 and t[i] == c.t0 and t[i] - t[i - 1] < t_coin


@settings(max_examples=60)
@given(st.lists(st.integers(0, 3000), max_size=7).map(sorted), st.sampled_from([300, 600]),
       st.sampled_from([1000, 2000]))
def test_coincidences_match_brute_force(times, t_coin, t_win):
    got = [(c.t0, c.window_end) for c in readout.detect_coincidences(_tl(times), t_coin * 1e-9, t_win * 1e-9)]
    assert got == oracles.brute_force_windows(times, t_coin, t_win)


@given(event_times, event_times)
def test_merge_is_sorted_and_complete(a, b):
    m = stream.merge_timelines(_tl(a), _tl(b))
    assert stream.is_sorted(m) and len(m) == len(a) + len(b)
    assert sorted(m.t_ns.tolist()) == sorted(a + b)


@given(st.floats(1e-3, 1 - 1e-3), st.floats(1e3, 1e7), st.floats(1e5, 1e8))
def test_flip_rate_symmetry_and_sign(frac, gamma, omega):
    a = TWO_PI * 5.9e9
    r1 = rates.spin_flip_rate(frac * a, a, gamma, omega)
    r2 = rates.spin_flip_rate((1 - frac) * a, a, gamma, omega)
    assert r1 > 0 and math.isclose(r1, r2, rel_tol=1e-9)


@settings(max_examples=40)
@given(st.floats(1e8, 1e11), st.floats(1e5, 1e7), st.floats(1e6, 3e7), st.floats(0.05, 1.0))
def test_sn_curve_below_bound(a, gamma, g, q):
    c = ExperimentConfig().with_values(atom__hyperfine=a, atom__gamma=gamma, cavity__g_max=g,
                                       detection__q=q)
    grid = rates.design_grid(c, 101)
    curve = rates.sn_curve(grid, c)
    assert np.all(curve.sn <= curve.bound * (1 + 1e-12))
    assert abs(curve.argmax_delta - a / 2) <= grid[1] - grid[0]


@given(st.floats(0, 50), st.floats(0, 50))
def test_readout_error_monotone(m1, m2):
    lo, hi = sorted((m1, m2))
    assert 0 < rates.readout_error(hi) <= rates.readout_error(lo) <= 1


@given(st.floats(1e-3, 20), st.floats(1e-3, 20))
def test_multi_atom_fraction_increasing(m1, m2):
    lo, hi = sorted((m1, m2))
    assert 0 <= rates.multi_atom_fraction(lo) <= rates.multi_atom_fraction(hi)


@given(st.floats(0, 1e8), st.floats(0, 1e9))
def test_saturating_rate_bounded(g, omega):
    kappa, gamma = TWO_PI * 4.5e6, TWO_PI * 182e3
    r = rates.saturating_rate(g, omega, kappa, gamma)
    assert 0 <= r <= 2 * g**2 / kappa * (1 + 1e-12) + 1e-300


@given(st.integers(0, 200), st.integers(1, 200), st.floats(0.05, 1.0))
def test_beta2_estimate_nonnegative(n_suc, n_in, eta0):
    n_suc = min(n_suc, n_in)
    b, s = exp.estimate_beta2(n_suc, n_in, eta0)
    assert b >= 0 and s >= 0


@settings(max_examples=30)
@given(st.floats(0.01, 0.99), st.floats(1e-7, 1e-5), st.floats(1, 1e4), st.integers(0, 2**63))
def test_config_round_trip(q, p, r_dark, seed):
    c = ExperimentConfig().with_values(detection__q=q, drive__p_total=p, detection__r_dark=r_dark,
                                       sim__seed=seed)
    assert config_from_dict(c.to_dict()).digest() == c.digest()


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), max_size=10))
def test_plain_rounding_is_idempotent(xs):
    once = io.to_plain(xs)
    assert io.to_plain(once) == once


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(1e4, 1e6), st.floats(1e-6, 1e-3))
def test_thinning_output_in_interval(seed, bound, length):
    rng = substream(seed, Stream.MISC)
    t = stream.sample_inhomogeneous_poisson(lambda x: 0.5 * bound * (1 + np.cos(x * 1e5)), bound,
                                            (1e-3, 1e-3 + length), rng)
    assert np.all(np.diff(t) >= 0)
    assert np.all((t >= 1_000_000) & (t <= int((1e-3 + length) * 1e9)))
