"""Atom trajectories through the crossed cavity-mode / excitation-beam region.

Axes: atoms fall along -y, the cavity (standing-wave) axis is z and the
excitation beam propagates along x. The cavity mode is a Gaussian of waist
``w_c`` in (x, y); the excitation beam a Gaussian of waist ``w_l`` in (y, z).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import rates
from .errors import UsageError

# trajectories start and stop this many cavity waists from the mode axis
ENTRY_WAISTS = 3.0


class Spin(Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class Trajectory:
    x0: float
    y0: float
    z0: float
    vx: float
    vy: float
    vz: float
    phase: float = 0.0
    t_entry: float = 0.0

    @property
    def entry(self):
        return (self.x0, self.y0, self.z0)

    @property
    def velocity(self):
        return (self.vx, self.vy, self.vz)

    def duration(self):
        """Time spent between entry and the symmetric exit plane ``y = -y0``."""
        return 2.0 * abs(self.y0) / abs(self.vy)


class TrajectoryBatch:
    """Column-wise store of many trajectories for vectorized rate evaluation."""

    _FIELDS = ("x0", "y0", "z0", "vx", "vy", "vz", "phase", "t_entry")

    def __init__(self, **columns):
        n = None
        for name in self._FIELDS:
            col = np.atleast_1d(np.asarray(columns[name], dtype=float))
            if n is not None and col.shape != (n,):
                raise UsageError("trajectory columns must share one length")
            n = col.shape[0]
            setattr(self, name, col)

    @classmethod
    def wrap(cls, columns):
        """Build from already-validated float arrays without copying."""
        obj = cls.__new__(cls)
        obj.__dict__.update(columns)
        return obj

    @classmethod
    def from_trajectories(cls, trajs):
        trajs = list(trajs)
        return cls(**{f: [getattr(t, f) for t in trajs] for f in cls._FIELDS})

    @classmethod
    def empty(cls):
        return cls(**{f: np.empty(0) for f in cls._FIELDS})

    def __len__(self):
        return self.x0.shape[0]

    def __getitem__(self, k):
        return Trajectory(**{f: float(getattr(self, f)[k]) for f in self._FIELDS})

    def position(self, idx, t):
        """Positions of atoms ``idx`` at times ``t`` (arrays broadcast together)."""
        dt = t - self.t_entry[idx]
        return (self.x0[idx] + self.vx[idx] * dt,
                self.y0[idx] + self.vy[idx] * dt,
                self.z0[idx] + self.vz[idx] * dt)

    def spans(self):
        """(start, stop) of each atom's passage through the interaction region."""
        return self.t_entry, self.t_entry + 2.0 * np.abs(self.y0) / np.abs(self.vy)


def sample_trajectory(rng, source, cavity):
    """One atom entering the interaction region from above."""
    return sample_trajectories(rng, source, cavity, np.zeros(1))[0]


def sample_trajectories(rng, source, cavity, t_entry):
    """Trajectories for atoms entering at times ``t_entry``.

    Transverse entry points are uniform over ``+-src_halfwidth``, transverse
    velocities normal with spread ``v_spread``, the standing-wave phase
    uniform on ``[0, pi)``.
    """
    t_entry = np.atleast_1d(np.asarray(t_entry, dtype=float))
    n = t_entry.size
    h = source.src_halfwidth
    x0 = rng.uniform(-h, h, n)
    z0 = rng.uniform(-h, h, n)
    vx = rng.normal(0.0, source.v_spread, n)
    vz = rng.normal(0.0, source.v_spread, n)
    phase = rng.uniform(0.0, np.pi, n)
    return TrajectoryBatch(x0=x0, y0=np.full(n, ENTRY_WAISTS * cavity.waist), z0=z0,
                           vx=vx, vy=np.full(n, -source.v_fall), vz=vz,
                           phase=phase, t_entry=t_entry)


def position_at(traj, t):
    """Straight-line position; gravity during the transit is neglected."""
    if t < traj.t_entry:
        raise UsageError("t precedes the trajectory entry time")
    dt = t - traj.t_entry
    return (traj.x0 + traj.vx * dt, traj.y0 + traj.vy * dt, traj.z0 + traj.vz * dt)


@dataclass(frozen=True)
class LocalField:
    g_local: float
    omega_local: float
    beam_on: bool


def coupling_profile(x, y, z, phase, config):
    """Field-amplitude envelopes ``(|g|/g_max, |Omega|/Omega_beam)`` at a point."""
    w_c = config.cavity.waist
    w_l = config.drive.waist
    standing = np.abs(np.sin(2.0 * np.pi * z / config.atom.wavelength + phase))
    g_rel = standing * np.exp(-(x**2 + y**2) / w_c**2)
    o_rel = np.exp(-(y**2 + z**2) / w_l**2)
    return g_rel, o_rel


def local_fields(traj, t, config, beam_on=True):
    """Coupling strength and Rabi frequency seen by the atom at time ``t``."""
    x, y, z = position_at(traj, t)
    g_rel, o_rel = coupling_profile(x, y, z, traj.phase, config)
    omega = rates.rabi_from_power(config.drive.p_total, config.drive)
    return LocalField(
        g_local=float(config.cavity.g_max * g_rel),
        omega_local=float(omega * o_rel) if beam_on else 0.0,
        beam_on=bool(beam_on),
    )


def peak_emission_rate(config):
    """Emission rate at the antinode on both beam axes, before calibration."""
    omega = rates.rabi_from_power(config.drive.p_total, config.drive)
    return rates.emission_rate(config.cavity.kappa,
                               rates.intracavity_photon_number(omega, config.cavity.g_max))


def beam_flip_rate(config):
    """Spin-flip rate at the excitation-beam center."""
    omega = rates.rabi_from_power(config.drive.p_total, config.drive)
    return rates.spin_flip_rate(config.field.delta, config.atom.hyperfine, config.atom.gamma, omega)


def emission_from_profile(g_rel, o_rel, config, model=None):
    """Calibrated emission rate (no detection efficiency) from envelopes.

    ``paper_empirical`` scales the peak rate by both intensity envelopes;
    ``saturating`` evaluates the adiabatic-elimination steady state.
    """
    model = model or config.sim.model
    zeta = config.detection.zeta
    if model == "paper_empirical":
        return zeta * peak_emission_rate(config) * g_rel**2 * o_rel**2
    if model == "saturating":
        omega = rates.rabi_from_power(config.drive.p_total, config.drive)
        return zeta * rates.saturating_rate(config.cavity.g_max * g_rel, omega * o_rel,
                                            config.cavity.kappa, config.atom.gamma,
                                            config.drive.laser_detuning)
    raise UsageError(f"unknown rate model {model!r}")


def local_rates(fields, spin, config, model=None):
    """Emission rate and spin-flip hazard for a bright or dark spin.

    Returns
    -------
    (emit_rate, flip_hazard) : tuple of float
        A ``DOWN`` atom emits and never flips; an ``UP`` atom does not emit
        and flips with a hazard that follows the local drive intensity.
    """
    model = model or config.sim.model
    if model not in ("paper_empirical", "saturating"):
        raise UsageError(f"unknown rate model {model!r}")
    if not fields.beam_on or fields.omega_local == 0.0:
        return 0.0, 0.0
    omega = rates.rabi_from_power(config.drive.p_total, config.drive)
    o_rel = fields.omega_local / omega
    if Spin(spin) is Spin.DOWN:
        g_rel = fields.g_local / config.cavity.g_max
        return float(emission_from_profile(g_rel, o_rel, config, model)), 0.0
    return 0.0, float(beam_flip_rate(config) * o_rel**2)
