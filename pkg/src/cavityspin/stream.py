"""Timestamped detector events from falling atoms.

Atomic photons are drawn from an inhomogeneous Poisson process by thinning,
with the detection efficiency folded into the intensity. Each atom obeys a
non-paralyzable refractory interval (single-emitter antibunching); dark
counts are homogeneous per detector. Timestamps are integer nanoseconds.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kinematics as kin
from .errors import BoundViolation, UsageError
from .kinematics import Spin

ATOMIC = 0
DARK = 1
ORIGIN_NAMES = ("atomic", "dark")


class PhotonEvent(NamedTuple):
    t: int
    detector: int
    origin: str


class Timeline:
    """Sorted detector events.

    Parallel arrays ``t_ns`` (int64), ``detector``, ``origin`` (ATOMIC/DARK)
    and ``source`` (emitting atom index, -1 for dark counts). Events are
    ordered by time, ties by detector.
    """

    def __init__(self, t_ns, detector, origin, source=None, check=True):
        self.t_ns = np.asarray(t_ns, dtype=np.int64).reshape(-1)
        self.detector = np.asarray(detector, dtype=np.int64).reshape(-1)
        self.origin = np.asarray(origin, dtype=np.int64).reshape(-1)
        if source is None:
            source = np.where(self.origin == ATOMIC, 0, -1)
        self.source = np.asarray(source, dtype=np.int64).reshape(-1)
        n = self.t_ns.size
        if not (self.detector.size == self.origin.size == self.source.size == n):
            raise UsageError("timeline columns differ in length")
        if check and not is_sorted(self):
            raise UsageError("timeline is not sorted by (t, detector)")

    @classmethod
    def empty(cls):
        return cls([], [], [])

    @classmethod
    def from_events(cls, events):
        events = sorted(events, key=lambda e: (e.t, e.detector))
        return cls([e.t for e in events], [e.detector for e in events],
                   [ORIGIN_NAMES.index(e.origin) for e in events])

    def __len__(self):
        return self.t_ns.size

    def __iter__(self):
        for t, d, o in zip(self.t_ns, self.detector, self.origin):
            yield PhotonEvent(int(t), int(d), ORIGIN_NAMES[o])

    def __eq__(self, other):
        return (isinstance(other, Timeline) and len(self) == len(other)
                and np.array_equal(self.t_ns, other.t_ns)
                and np.array_equal(self.detector, other.detector)
                and np.array_equal(self.origin, other.origin))

    def select(self, mask):
        return Timeline(self.t_ns[mask], self.detector[mask], self.origin[mask],
                        self.source[mask], check=False)

    def window(self, start_ns, stop_ns):
        """Events with ``start_ns <= t < stop_ns``."""
        lo, hi = np.searchsorted(self.t_ns, [start_ns, stop_ns], side="left")
        return self.select(slice(lo, hi))

    def shifted(self, offset_ns):
        return Timeline(self.t_ns + offset_ns, self.detector, self.origin, self.source, check=False)

    def counts_by_origin(self):
        return {name: int(np.count_nonzero(self.origin == k)) for k, name in enumerate(ORIGIN_NAMES)}


def is_sorted(tl):
    if len(tl) < 2:
        return True
    dt = np.diff(tl.t_ns)
    return bool(np.all((dt > 0) | ((dt == 0) & (np.diff(tl.detector) >= 0))))


def merge_timelines(a, b):
    """Sorted union of two sorted timelines, tags preserved.

    The result does not depend on argument order.
    """
    for tl in (a, b):
        if not is_sorted(tl):
            raise UsageError("merge_timelines needs sorted inputs")
    t = np.concatenate([a.t_ns, b.t_ns])
    det = np.concatenate([a.detector, b.detector])
    org = np.concatenate([a.origin, b.origin])
    src = np.concatenate([a.source, b.source])
    order = np.lexsort((src, org, det, t))
    return Timeline(t[order], det[order], org[order], src[order], check=False)


def to_ns(t_seconds):
    return np.floor(np.asarray(t_seconds) * 1e9).astype(np.int64)


# -- thinning -----------------------------------------------------------------

def _thin(rate_fn, bounds, starts, stops, rng):
    """Thinning for many independent processes at once.

    ``rate_fn(owner, t)`` gives the intensity of process ``owner`` at ``t``
    (vectorized). Returns accepted (times, owner) sorted by owner, then time.
    """
    bounds = np.asarray(bounds, dtype=float)
    lengths = np.clip(np.asarray(stops, dtype=float) - starts, 0.0, None)
    n = rng.poisson(bounds * lengths)
    owner = np.repeat(np.arange(bounds.size), n)
    t = np.asarray(starts, dtype=float)[owner] + rng.random(owner.size) * lengths[owner]
    u = rng.random(owner.size)
    if owner.size == 0:
        return t, owner
    r = np.asarray(rate_fn(owner, t), dtype=float)
    if np.any(r > bounds[owner] * (1.0 + 1e-9)):
        worst = np.max(r / bounds[owner])
        raise BoundViolation(f"intensity exceeds thinning bound by factor {worst:.6g}")
    keep = u * bounds[owner] < r
    t, owner = t[keep], owner[keep]
    order = np.lexsort((t, owner))
    return t[order], owner[order]


def sample_inhomogeneous_poisson(rate_fn, bound, interval, rng):
    """Event times (integer ns) of a Poisson process with intensity ``rate_fn``.

    Parameters
    ----------
    rate_fn : callable
        Vectorized intensity in events/s as a function of time in s.
    bound : float
        Upper bound of ``rate_fn`` on the interval.
    interval : (float, float)
        Start and stop in seconds.

    Raises
    ------
    BoundViolation
        If ``rate_fn`` exceeds ``bound`` at any candidate point.
    """
    if bound <= 0:
        raise UsageError("thinning bound must be > 0")
    t0, t1 = interval
    t, _ = _thin(lambda _, t: rate_fn(t), [bound], [t0], [t1], rng)
    return to_ns(t)


def dark_stream(r_dark, n_det, interval, rng):
    """Homogeneous dark counts on each of ``n_det`` detectors, merged.

    ``interval`` is ``(start, stop)`` in seconds; starts and stops may also be
    arrays of disjoint intervals.
    """
    if r_dark < 0:
        raise UsageError("dark rate must be >= 0")
    starts = np.atleast_1d(np.asarray(interval[0], dtype=float))
    lengths = np.clip(np.atleast_1d(np.asarray(interval[1], dtype=float)) - starts, 0.0, None)
    counts = rng.poisson(np.repeat(r_dark * lengths, n_det))
    slot = np.repeat(np.arange(counts.size), counts)
    det = slot % n_det
    iv = slot // n_det
    t = to_ns(starts[iv] + rng.random(slot.size) * lengths[iv])
    order = np.lexsort((det, t))
    return Timeline(t[order], det[order], np.full(det.size, DARK), np.full(det.size, -1), check=False)


# -- beam schedule --------------------------------------------------------------

def beam_state(schedule, t):
    """Vectorized on/off state from a list of ``(on, t)`` transitions.

    Before the first transition the beam is off.
    """
    if not schedule:
        return np.zeros(np.shape(t), dtype=bool)
    times = np.array([s[1] for s in schedule], dtype=float)
    states = np.array([bool(s[0]) for s in schedule])
    if np.any(np.diff(times) < 0):
        raise UsageError("beam schedule times must be sorted")
    idx = np.searchsorted(times, t, side="right") - 1
    return np.where(idx >= 0, states[np.clip(idx, 0, None)], False)


ALWAYS_ON = [(True, -np.inf)]


# -- atom emission ----------------------------------------------------------------

def _closest_abs(p0, v, t_a, t_b, t_entry):
    """Minimum of |p0 + v (t - t_entry)| for t in [t_a, t_b]."""
    pa = p0 + v * (t_a - t_entry)
    pb = p0 + v * (t_b - t_entry)
    return np.where(pa * pb <= 0, 0.0, np.minimum(np.abs(pa), np.abs(pb)))


def _saturating_peak(g_hi, omega, config):
    # the steady-state rate is not monotone in g: it peaks at
    # Gamma_c = sqrt(gamma^2 + 2 Omega^2)
    from . import rates
    kappa, gamma = config.cavity.kappa, config.atom.gamma
    gc_star = np.sqrt(gamma**2 + 2.0 * omega**2)
    gc = np.minimum(4.0 * g_hi**2 / kappa, gc_star)
    g_best = np.sqrt(gc * kappa / 4.0)
    return rates.saturating_rate(g_best, omega, kappa, gamma, config.drive.laser_detuning)


@functools.lru_cache(maxsize=64)
def _constants(config):
    from . import rates
    return (kin.peak_emission_rate(config), kin.beam_flip_rate(config),
            rates.rabi_from_power(config.drive.p_total, config.drive))


def _rate_bounds(atoms, t_a, t_b, config, model):
    """Per-atom upper bounds on (detected emission rate, flip hazard)."""
    from . import rates
    w_c, w_l = config.cavity.waist, config.drive.waist
    xm = _closest_abs(atoms.x0, atoms.vx, t_a, t_b, atoms.t_entry)
    zm = _closest_abs(atoms.z0, atoms.vz, t_a, t_b, atoms.t_entry)
    gx = np.exp(-xm**2 / w_c**2)
    oz = np.exp(-zm**2 / w_l**2)
    q, zeta = config.detection.q, config.detection.zeta
    peak, flip_rate, omega = _constants(config)
    if model == "paper_empirical":
        emit = q * zeta * peak * gx**2 * oz**2
    else:
        emit = q * zeta * _saturating_peak(config.cavity.g_max * gx, omega * oz, config)
    flip = flip_rate * oz**2
    return emit * (1 + 1e-9) + 1e-300, flip * (1 + 1e-9) + 1e-300


def flip_times(atoms, spin_down, interval, schedule, config, rng):
    """First spin-flip time of each UP atom within ``interval`` (inf if none)."""
    out = np.full(len(atoms), np.inf)
    up = np.flatnonzero(~np.asarray(spin_down, dtype=bool))
    if up.size == 0:
        return out
    sub = _subset(atoms, up)
    lo, hi = (np.asarray(b)[up] if np.ndim(b) else b for b in interval)
    start, stop = _clip_spans(sub, (lo, hi))
    _, hazard_bound = _rate_bounds(sub, start, stop, config, config.sim.model)

    def hazard(owner, t):
        x, y, z = sub.position(owner, t)
        _, o_rel = kin.coupling_profile(x, y, z, sub.phase[owner], config)
        return _constants(config)[1] * o_rel**2 * beam_state(schedule, t)

    t, owner = _thin(hazard, hazard_bound, start, stop, rng)
    if owner.size:
        first = np.concatenate([[True], owner[1:] != owner[:-1]])
        out[up[owner[first]]] = t[first]
    return out


def _subset(atoms, idx):
    return kin.TrajectoryBatch.wrap({f: getattr(atoms, f)[idx] for f in kin.TrajectoryBatch._FIELDS})


def _clip_spans(atoms, interval):
    """Per-atom emission window: passage intersected with ``interval``.

    ``interval`` bounds may be scalars or per-atom arrays.
    """
    a, b = atoms.spans()
    return np.maximum(a, interval[0]), np.minimum(b, interval[1])


def _dead_time(t, owner, tau):
    """Non-paralyzable dead time per owner; inputs sorted by (owner, t)."""
    if tau <= 0 or t.size < 2:
        return np.ones(t.size, dtype=bool)
    close = (np.diff(t) < tau) & (owner[1:] == owner[:-1])
    if not close.any():
        return np.ones(t.size, dtype=bool)
    keep = np.ones(t.size, dtype=bool)
    last_t, last_o = -np.inf, -1
    for i in range(t.size):
        if owner[i] == last_o and t[i] - last_t < tau:
            keep[i] = False
        else:
            last_t, last_o = t[i], owner[i]
    return keep


def _emission(g_rel, o_rel, config, model):
    if model == "paper_empirical":
        return config.detection.zeta * _constants(config)[0] * g_rel**2 * o_rel**2
    return kin.emission_from_profile(g_rel, o_rel, config, model)


def atomic_emission(atoms, spin_down, flip_at, interval, schedule, config, rng):
    """Detected atomic photons from a batch of atoms.

    An atom emits while the beam is on and it is DOWN, either from the start
    or after its flip time. Returns ``(times_s, owner)`` sorted by time.
    """
    if len(atoms) == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    model = config.sim.model
    start, stop = _clip_spans(atoms, interval)
    emit_bound, _ = _rate_bounds(atoms, start, stop, config, model)
    spin_down = np.asarray(spin_down, dtype=bool)
    q = config.detection.q

    def intensity(owner, t):
        x, y, z = atoms.position(owner, t)
        g_rel, o_rel = kin.coupling_profile(x, y, z, atoms.phase[owner], config)
        bright = spin_down[owner] | (t >= flip_at[owner])
        return q * _emission(g_rel, o_rel, config, model) * bright * beam_state(schedule, t)

    t, owner = _thin(intensity, emit_bound, start, stop, rng)
    keep = _dead_time(t, owner, config.detection.tau_dead)
    t, owner = t[keep], owner[keep]
    order = np.argsort(t, kind="stable")
    return t[order], owner[order]


def simulate_atoms(atoms, spin_down, interval, schedule, config, rng, with_dark=True):
    """All detector events in ``interval`` from a batch of atoms plus dark counts.

    ``with_dark`` may also be a ``(starts, stops)`` pair of intervals over
    which dark counts are drawn (default: ``interval``).

    Returns
    -------
    timeline : Timeline
        Event times relative to the same origin as ``interval``.
    flip_at : ndarray
        Flip time of each atom (inf for DOWN atoms and UP atoms that did not flip).
    """
    flip_at = flip_times(atoms, spin_down, interval, schedule, config, rng)
    t, owner = atomic_emission(atoms, spin_down, flip_at, interval, schedule, config, rng)
    det = rng.integers(0, config.detection.n_det, t.size)
    ts = to_ns(t)
    order = np.lexsort((det, ts))
    atomic = Timeline(ts[order], det[order], np.full(t.size, ATOMIC), owner[order], check=False)
    if with_dark is True:
        with_dark = interval
    if with_dark is not False and config.detection.r_dark > 0:
        dark = dark_stream(config.detection.r_dark, config.detection.n_det, with_dark, rng)
        return merge_timelines(atomic, dark), flip_at
    return atomic, flip_at


def atom_arrivals(rng, config, interval):
    """Atoms whose passage overlaps ``interval``, arriving at flux ``F``."""
    src, cav = config.source, config.cavity
    passage = 2.0 * kin.ENTRY_WAISTS * cav.waist / src.v_fall
    t0 = interval[0] - passage
    n = rng.poisson(src.flux * (interval[1] - t0))
    t_entry = np.sort(t0 + rng.random(n) * (interval[1] - t0))
    return kin.sample_trajectories(rng, src, cav, t_entry)


@dataclass
class TrialRecord:
    trajectory: kin.Trajectory
    spin_initial: Spin
    flip_time: Optional[int]
    events: Timeline
    beam_schedule: list = field(default_factory=list)


def simulate_transit(traj, spin_initial, beam_schedule, prepared_pulse, config, rng, interval=None):
    """Detector record for a single atom crossing the mode.

    Parameters
    ----------
    traj : Trajectory
    spin_initial : Spin
    beam_schedule : list of (bool, float)
        On/off transitions in seconds.
    prepared_pulse : (float, Spin) or None
        Time of a preparation pulse and the spin it leaves behind.
    interval : (float, float), optional
        Defaults to the full passage of the atom.
    """
    atoms = kin.TrajectoryBatch.from_trajectories([traj])
    if interval is None:
        a, b = atoms.spans()
        interval = (float(a[0]), float(b[0]))
    if any(t1 < t0 for (_, t0), (_, t1) in zip(beam_schedule, beam_schedule[1:])):
        raise UsageError("beam schedule times must be sorted")
    segments = [(interval, Spin(spin_initial))]
    if prepared_pulse is not None:
        t_p, spin_p = prepared_pulse
        segments = [((interval[0], t_p), Spin(spin_initial)), ((t_p, interval[1]), Spin(spin_p))]
    timeline = Timeline.empty()
    flip = None
    for seg, spin in segments:
        if seg[1] <= seg[0]:
            continue
        down = np.array([spin is Spin.DOWN])
        tl, flip_at = simulate_atoms(atoms, down, seg, beam_schedule, config, rng)
        timeline = merge_timelines(timeline, tl)
        if flip is None and np.isfinite(flip_at[0]):
            flip = int(to_ns(flip_at[0]))
    return TrialRecord(traj, Spin(spin_initial), flip, timeline, list(beam_schedule))


@dataclass
class Drop:
    """One hold period of observation, in its own time frame (t=0 at start)."""
    atoms: kin.TrajectoryBatch
    spin_down: np.ndarray
    flip_at: np.ndarray
    events: Timeline


class DropBlock:
    """Drops simulated together on one shared clock.

    Drop ``k`` occupies ``[k period_ns, k period_ns + t_hold]``; the gaps
    between drops are longer than any coincidence window, so ``events`` can
    be processed as a whole. Per-drop frames are split off on demand.
    """

    def __init__(self, period_ns, gap_ns, events, atoms, spin_down, flip_at, first_atom, edges):
        self.period_ns = period_ns
        self.gap_ns = gap_ns
        self.events = events
        self.atoms = atoms
        self.spin_down = spin_down
        self.flip_at = flip_at
        self.first_atom = first_atom
        self.edges = edges

    def __len__(self):
        return self.edges.size - 1

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def drop_of(self, t_ns):
        """Index of the drop that holds shared-clock time ``t_ns``."""
        return (t_ns + self.gap_ns // 2) // self.period_ns

    def __getitem__(self, k):
        if not 0 <= k < len(self):
            raise IndexError(k)
        lo, hi = self.first_atom[k], self.first_atom[k + 1]
        period = self.period_ns * 1e-9
        local = _subset(self.atoms, slice(lo, hi))
        local.t_entry = local.t_entry - k * period
        ev = self.events.select(slice(self.edges[k], self.edges[k + 1]))
        src = np.where(ev.source >= 0, ev.source - lo, -1)
        return Drop(local, self.spin_down[lo:hi], self.flip_at[lo:hi] - k * period,
                    Timeline(ev.t_ns - k * self.period_ns, ev.detector, ev.origin, src, check=False))


def simulate_drop_block(rng, config, n_drops, p_down=0.5, with_dark=True):
    """Independent drops of atoms observed with the beam on for ``t_hold``.

    Each drop has its own Poisson arrivals; atoms start DOWN with
    probability ``p_down``. All drops are simulated in one vectorized pass
    on a common clock.
    """
    hold = config.detection.t_hold
    passage = 2.0 * kin.ENTRY_WAISTS * config.cavity.waist / config.source.v_fall
    period_ns = int(round((hold + passage) * 1e9)) + 1_000_000
    period = period_ns * 1e-9
    src, cav = config.source, config.cavity
    span = hold + passage
    per_drop = rng.poisson(src.flux * span, n_drops)
    drop_of = np.repeat(np.arange(n_drops), per_drop)
    t_entry = -passage + rng.random(drop_of.size) * span
    # time-ordered within each drop
    order = np.lexsort((t_entry, drop_of))
    atoms = kin.sample_trajectories(rng, src, cav, t_entry[order] + drop_of * period)
    down = rng.random(len(atoms)) < p_down
    starts = drop_of * period
    dark_starts = np.arange(n_drops) * period
    tl, flip_at = simulate_atoms(atoms, down, (starts, starts + hold), ALWAYS_ON, config, rng,
                                 with_dark=(dark_starts, dark_starts + hold) if with_dark else False)
    hold_ns = int(round(hold * 1e9))
    gap = period_ns - hold_ns
    # float rounding on the shared clock can put an event 1 ns before its drop starts
    owner = (tl.t_ns + gap // 2) // period_ns
    t = np.maximum(tl.t_ns, owner * period_ns)
    order = np.lexsort((tl.source, tl.origin, tl.detector, t))
    tl = Timeline(t[order], tl.detector[order], tl.origin[order], tl.source[order], check=False)
    edges = np.searchsorted(tl.t_ns, np.arange(n_drops + 1) * period_ns - gap // 2)
    first_atom = np.concatenate([[0], np.cumsum(per_drop)])
    return DropBlock(period_ns, gap, tl, atoms, down, flip_at, first_atom, edges)


def simulate_drops(rng, config, n_drops, p_down=0.5, with_dark=True):
    """List of per-drop frames; see :func:`simulate_drop_block`."""
    return list(simulate_drop_block(rng, config, n_drops, p_down, with_dark))
