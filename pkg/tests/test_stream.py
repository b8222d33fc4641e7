import numpy as np
import pytest
from scipy import stats

import oracles
from cavityspin import stream
from cavityspin.errors import BoundViolation, UsageError
from cavityspin.kinematics import Spin, Trajectory
from cavityspin.rng import Stream, substream
from cavityspin.stream import ATOMIC, DARK, Timeline


def _rate(t):
    return 1e6 * (1.0 + 0.5 * np.sin(2 * np.pi * t / 20e-6))


def test_thinning_matches_bernoulli_oracle():
    t_stop = 10e-3
    a = stream.sample_inhomogeneous_poisson(_rate, 1.5e6, (0.0, t_stop), substream(11, Stream.MISC))
    b = oracles.bernoulli_events_ns(_rate, t_stop, substream(12, Stream.MISC))
    assert a.size > 9000 and b.size > 9000
    res = stats.ks_2samp(np.diff(a), np.diff(b))
    assert res.pvalue > 0.01


def test_constant_rate_counts_are_poisson():
    lam, n = 10.0, 4000
    rng = substream(5, Stream.MISC)
    counts = np.array([stream.sample_inhomogeneous_poisson(lambda t: np.full(np.shape(t), 1e6), 1e6,
                                                           (0.0, 10e-6), rng).size for _ in range(n)])
    assert abs(counts.mean() - lam) < 4 * np.sqrt(lam / n)
    assert abs(counts.var(ddof=1) - lam) < 4 * np.sqrt((lam + 2 * lam**2) / n)


def test_bound_violation_and_bad_bound():
    rng = substream(1, Stream.MISC)
    with pytest.raises(BoundViolation):
        stream.sample_inhomogeneous_poisson(lambda t: np.full(np.shape(t), 2e6), 1e6, (0.0, 1e-3), rng)
    with pytest.raises(UsageError):
        stream.sample_inhomogeneous_poisson(_rate, 0.0, (0.0, 1e-3), rng)


def test_dark_stream_rate_and_labels():
    rng = substream(2, Stream.MISC)
    tl = stream.dark_stream(200.0, 2, (0.0, 50.0), rng)
    assert len(tl) == pytest.approx(20000, abs=4 * np.sqrt(20000))
    assert np.all(tl.origin == DARK) and set(np.unique(tl.detector)) == {0, 1}
    assert stream.is_sorted(tl)
    with pytest.raises(UsageError):
        stream.dark_stream(-1.0, 2, (0.0, 1.0), rng)


def test_timeline_validation_and_merge():
    a = Timeline([1, 5, 9], [0, 1, 0], [ATOMIC] * 3)
    b = Timeline([2, 5, 30], [1, 0, 1], [DARK] * 3)
    m = stream.merge_timelines(a, b)
    assert list(m.t_ns) == [1, 2, 5, 5, 9, 30]
    assert list(m.detector[2:4]) == [0, 1]
    assert stream.is_sorted(m)
    with pytest.raises(UsageError):
        Timeline([5, 1], [0, 0], [0, 0])
    assert len(m.window(2, 9)) == 3
    assert m.counts_by_origin() == {"atomic": 3, "dark": 3}


def test_beam_state():
    sched = [(True, 0.0), (False, 1.0), (True, 2.0)]
    assert list(stream.beam_state(sched, np.array([-1.0, 0.5, 1.5, 2.5]))) == [False, True, False, True]
    with pytest.raises(UsageError):
        stream.beam_state([(True, 1.0), (False, 0.0)], 0.5)


def _bright_transit(config):
    return Trajectory(x0=0.0, y0=3 * config.cavity.waist, z0=0.0, vx=0.0, vy=-0.05, vz=0.0,
                      phase=np.pi / 2, t_entry=0.0)


def test_dead_time_enforced_per_atom(config):
    rec = stream.simulate_transit(_bright_transit(config), Spin.DOWN, stream.ALWAYS_ON, None,
                                  config.with_values(detection__r_dark=0.0), substream(4, Stream.MISC))
    t = rec.events.t_ns
    assert t.size > 100
    assert np.all(np.diff(t) >= 100)


def test_beam_off_suppresses_emission(config):
    c = config.with_values(detection__r_dark=0.0)
    sched = [(True, -np.inf), (False, 100e-6), (True, 300e-6)]
    rec = stream.simulate_transit(_bright_transit(c), Spin.DOWN, sched, None, c, substream(6, Stream.MISC))
    t = rec.events.t_ns
    assert t.size > 0
    assert not np.any((t >= 100_000) & (t < 300_000))


def test_up_atom_silent_until_flip(config):
    c = config.with_values(detection__r_dark=0.0)
    for i in range(30):
        rec = stream.simulate_transit(_bright_transit(c), Spin.UP, stream.ALWAYS_ON, None, c,
                                      substream(i, Stream.MISC))
        if rec.flip_time is None:
            assert len(rec.events) == 0
        else:
            assert np.all(rec.events.t_ns >= rec.flip_time)


def test_preparation_pulse_switches_spin(config):
    c = config.with_values(detection__r_dark=0.0)
    rec = stream.simulate_transit(_bright_transit(c), Spin.UP, stream.ALWAYS_ON, (500e-6, Spin.DOWN), c,
                                  substream(8, Stream.MISC))
    assert np.count_nonzero(rec.events.t_ns >= 500_000) > 10


def test_simulate_drops_frames(config):
    drops = stream.simulate_drops(substream(9, Stream.MISC), config, 20)
    hold_ns = int(config.detection.t_hold * 1e9)
    for d in drops:
        tl = d.events
        assert stream.is_sorted(tl)
        assert np.all((tl.t_ns >= 0) & (tl.t_ns <= hold_ns))
        atomic = tl.origin == ATOMIC
        assert np.all((tl.source[atomic] >= 0) & (tl.source[atomic] < len(d.atoms)))
        assert np.all(tl.source[~atomic] == -1)


def test_same_seed_same_timeline(config):
    a = stream.simulate_drops(substream(9, Stream.MISC), config, 5)
    b = stream.simulate_drops(substream(9, Stream.MISC), config, 5)
    assert all(x.events == y.events for x, y in zip(a, b))
