"""Coincidence circuit and the coincidence-triggered spin measurement."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import kinematics as kin
from . import stream
from .config import PULSE_OFFSET
from .errors import UsageError
from .kinematics import Spin


def ns(seconds):
    return int(round(seconds * 1e9))


@dataclass(frozen=True)
class CoincidenceEvent:
    t0: int
    window_end: int


def detect_coincidences(timeline, t_coin, t_win):
    """Non-retriggerable coincidence windows on the merged detector stream.

    A coincidence fires at the second photon of any consecutive pair closer
    than ``t_coin`` seconds, unless a window is still open; it then holds a
    window ``[t0, t0 + t_win)``.
    """
    if not stream.is_sorted(timeline):
        raise UsageError("timeline is not sorted")
    t = timeline.t_ns
    coin_ns, win_ns = ns(t_coin), ns(t_win)
    out = []
    busy_until = None
    for i in np.flatnonzero(np.diff(t) < coin_ns) + 1:
        t0 = int(t[i])
        if busy_until is None or t0 >= busy_until:
            busy_until = t0 + win_ns
            out.append(CoincidenceEvent(t0, busy_until))
    return out


class PulseKind(str, Enum):
    SIGMA_MINUS = "sigma_minus"
    SIGMA_PERP = "sigma_perp"
    SIGMA_PLUS = "sigma_plus"
    NONE = "none"


# nominal |<down|psi>|^2 left by each preparation pulse
PREPARED_BETA2 = {PulseKind.SIGMA_MINUS: 1.0, PulseKind.SIGMA_PERP: 0.5, PulseKind.SIGMA_PLUS: 0.0}


def apply_preparation_pulse(pulse_kind, rng, pol_error=0.0, current=Spin.DOWN):
    """Prepare a spin and realize its projection onto DOWN.

    The measurement that follows only sees the DOWN population, so the
    superposition is replaced by a DOWN/UP draw with probability beta**2.
    ``pol_error`` is the residual DOWN admixture of an imperfect sigma+ pulse.

    Returns
    -------
    (spin_after_pulse, prepared_beta2)
    """
    kind = PulseKind(pulse_kind)
    if not 0 <= pol_error <= 1:
        raise UsageError("pol_error must lie in [0, 1]")
    if kind is PulseKind.NONE:
        current = Spin(current)
        return current, 1.0 if current is Spin.DOWN else 0.0
    beta2 = pol_error if kind is PulseKind.SIGMA_PLUS else PREPARED_BETA2[kind]
    spin = Spin.DOWN if rng.random() < beta2 else Spin.UP
    return spin, beta2


@dataclass(frozen=True)
class ProtocolSchedule:
    """Beam-off gap, preparation pulse and measurement window, all in ns."""
    beam_off: tuple
    pulse: tuple
    measure: tuple

    @classmethod
    def after(cls, t0, detection):
        gap, meas = ns(detection.t_gap), ns(detection.t_meas)
        p0 = t0 + ns(PULSE_OFFSET)
        return cls((t0, t0 + gap), (p0, p0 + ns(detection.t_pulse)), (t0 + gap, t0 + gap + meas))

    def beam_transitions(self):
        """On/off transitions in seconds, for the stream simulator."""
        return [(True, -np.inf), (False, self.beam_off[0] * 1e-9), (True, self.beam_off[1] * 1e-9)]


@dataclass
class ProtocolContext:
    """State of one drop at the moment a coincidence fires."""
    atoms: kin.TrajectoryBatch
    spin_down: np.ndarray
    herald: int = -1
    events: Optional[stream.Timeline] = None


@dataclass
class MeasurementOutcome:
    prepared_beta2: float
    spin_after_pulse: Optional[Spin]
    n_count: int
    projected: bool
    expected_counts: float = float("nan")
    events: Optional[stream.Timeline] = None


def run_measurement_protocol(coincidence, context, pulse_kind, config, rng):
    """Gate the beam, prepare the spin and count photons in the measure window.

    Every atom in flight is re-prepared by the pulse; the outcome reports
    the heralding atom's spin. ``expected_counts`` is the mean count in the
    window assuming no further spin flips (exact for DOWN preparations).
    """
    det = config.detection
    kind = PulseKind(pulse_kind)
    sched = ProtocolSchedule.after(coincidence.t0, det)
    n_atoms = len(context.atoms)
    spin_down = np.array(context.spin_down, dtype=bool, copy=True)
    herald_spin, beta2 = None, PREPARED_BETA2.get(kind, float("nan"))
    for k in range(n_atoms):
        current = Spin.DOWN if spin_down[k] else Spin.UP
        spin, b2 = apply_preparation_pulse(kind, rng, det.pol_error, current)
        spin_down[k] = spin is Spin.DOWN
        if k == context.herald:
            herald_spin, beta2 = spin, b2
    if kind is PulseKind.SIGMA_PLUS:
        beta2 = det.pol_error

    interval = (sched.beam_off[0] * 1e-9, sched.measure[1] * 1e-9)
    events, _ = stream.simulate_atoms(context.atoms, spin_down, interval,
                                      sched.beam_transitions(), config, rng)
    window = events.window(*sched.measure)
    n_count = len(window)
    expected = expected_window_counts(context.atoms, spin_down, sched.measure, config)
    return MeasurementOutcome(beta2, herald_spin, n_count, n_count >= 1, expected, events)


def expected_window_counts(atoms, spin_down, window_ns, config, n_grid=2001):
    """Integrated detected intensity of the DOWN atoms plus dark counts."""
    t = np.linspace(window_ns[0] * 1e-9, window_ns[1] * 1e-9, n_grid)
    total = config.detection.r_dark * config.detection.n_det * (t[-1] - t[0])
    a, b = atoms.spans()
    for k in np.flatnonzero(np.asarray(spin_down, dtype=bool)):
        inside = (t >= a[k]) & (t <= b[k])
        if not inside.any():
            continue
        x, y, z = atoms.position(np.full(t.size, k), t)
        g_rel, o_rel = kin.coupling_profile(x, y, z, atoms.phase[k], config)
        r = config.detection.q * kin.emission_from_profile(g_rel, o_rel, config) * inside
        total += np.trapezoid(r, t)
    return float(total)
