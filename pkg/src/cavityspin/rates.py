"""Closed-form rate formulas and derived setup quantities.

All frequencies are angular (rad/s); rates are events per second.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import TWO_PI, ExperimentConfig
from .errors import DomainError, UsageError

SPEED_OF_LIGHT = 299_792_458.0
STANDARD_GRAVITY = 9.80665
BOHR_HZ_PER_GAUSS = 1.3996e6


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def intracavity_photon_number(omega, g):
    """Mean intracavity photon number ``Omega**2 / (4 g**2)``.

    Valid in the strong-coupling, weak-drive limit (g**2 >> kappa*gamma,
    Omega**2 << g**2 kappa/gamma).
    """
    g = np.asarray(g, dtype=float)
    if np.any(g <= 0):
        raise DomainError("coupling g must be > 0")
    return _scalar(np.asarray(omega, dtype=float) ** 2 / (4.0 * g**2))


def emission_rate(kappa, n_bar):
    """Photon emission rate into the cavity output mode, ``2 kappa <n>``."""
    if kappa <= 0:
        raise DomainError("kappa must be > 0")
    if np.any(np.asarray(n_bar) < 0):
        raise DomainError("photon number must be >= 0")
    return 2.0 * kappa * n_bar


def free_space_rate(delta, gamma, omega):
    """Photon scattering rate of a free-space atom driven at detuning ``delta``.

    ``(gamma/2) * (Omega**2/2) / (delta**2 + gamma**2/4 + Omega**2/2)``
    """
    if gamma <= 0:
        raise DomainError("gamma must be > 0")
    s = np.asarray(omega, dtype=float) ** 2 / 2.0
    return _scalar(0.5 * gamma * s / (np.asarray(delta, dtype=float) ** 2 + gamma**2 / 4.0 + s))


def spin_flip_rate(delta, hyperfine, gamma, omega):
    """Off-resonant excitation rate of the bright-state partner.

    Sum of the free-space rates through the two excited hyperfine manifolds,
    detuned by ``delta`` and ``hyperfine - delta``.
    """
    d = np.asarray(delta, dtype=float)
    if np.any(d <= 0) or np.any(d >= hyperfine):
        raise DomainError("Zeeman shift must lie strictly between 0 and the hyperfine splitting")
    return free_space_rate(delta, gamma, omega) + free_space_rate(hyperfine - d, gamma, omega)


def signal_to_noise(q, gamma_eff, gamma_flip):
    """Detected photons expected before an unwanted spin flip, ``q Gamma / Gamma_flip``.

    Returns ``math.inf`` when the flip rate vanishes (and ``nan`` for 0/0).
    """
    if gamma_flip == 0:
        return math.inf if q * gamma_eff > 0 else math.nan
    return q * gamma_eff / gamma_flip


def kappa_from_mirrors(transmittance, loss, length):
    """Cavity field decay rate (half linewidth, angular) from mirror data.

    Finesse ``pi / (T + L)``; FWHM ``FSR / finesse`` with ``FSR = c / 2L``.
    """
    total = transmittance + loss
    if not 0 < total < 1:
        raise DomainError("mirror losses T+L must lie in (0, 1)")
    if length <= 0:
        raise DomainError("mirror spacing must be > 0")
    finesse = math.pi / total
    fwhm = SPEED_OF_LIGHT / (2.0 * length) / finesse
    return math.pi * fwhm


def zeeman_shift(b_gauss, g_f, m_f):
    """Angular Zeeman shift ``2 pi |gF mF| mu_B B``."""
    if b_gauss < 0:
        raise DomainError("B must be >= 0")
    return TWO_PI * abs(g_f * m_f) * BOHR_HZ_PER_GAUSS * b_gauss


def rabi_from_power(p_total, drive):
    """Beam-center Rabi frequency at power ``p_total``; Omega scales as sqrt(P)."""
    p_total = np.asarray(p_total, dtype=float)
    if np.any(p_total < 0):
        raise DomainError("power must be >= 0")
    return _scalar(drive.omega_ref * np.sqrt(p_total / drive.p_ref))


def fall_kinematics(drop_height):
    """Free-fall time and arrival speed after dropping ``drop_height`` metres."""
    if drop_height <= 0:
        raise DomainError("drop height must be > 0")
    t_fall = math.sqrt(2.0 * drop_height / STANDARD_GRAVITY)
    return t_fall, STANDARD_GRAVITY * t_fall


def mean_atom_spacing(v_fall, flux):
    """Mean vertical spacing of neighbouring atoms in the falling beam."""
    return v_fall / flux


def free_space_background(q, wavelength, waist, gamma, omega, t_transit):
    """Counts collected from ordinary spontaneous emission during one transit.

    Returns
    -------
    theta : float
        Far-field divergence half-angle of the cavity mode, ``lambda/(pi w)``.
    q_free : float
        Detection efficiency for isotropic emission, ``q theta**2 / 4``.
    expected_counts : float
        ``q_free * Gamma_free(0) * t_transit``.
    """
    theta = wavelength / (math.pi * waist)
    q_free = q * theta**2 / 4.0
    return theta, q_free, q_free * free_space_rate(0.0, gamma, omega) * t_transit


def readout_error(mean_counts):
    """Probability of zero counts for Poisson-distributed counts."""
    if np.any(np.asarray(mean_counts) < 0):
        raise DomainError("mean counts must be >= 0")
    return _scalar(np.exp(-np.asarray(mean_counts, dtype=float)))


def multi_atom_fraction(n_atom):
    """P(two or more atoms) / P(exactly one) for Poisson occupancy ``n_atom``."""
    if n_atom < 0:
        raise DomainError("mean occupancy must be >= 0")
    if n_atom == 0:
        return 0.0
    if n_atom < 1e-4:
        return n_atom / 2.0 + n_atom**2 / 6.0
    return math.expm1(n_atom) / n_atom - 1.0


def saturating_rate(g, omega, kappa, gamma, laser_detuning=0.0):
    """Cavity output rate with the cavity adiabatically eliminated.

    The cavity acts as an extra decay channel ``Gamma_c = 4 g**2 / kappa``;
    the excited-state population follows the two-level steady state with
    total width ``gamma + Gamma_c``. Saturates at ``Gamma_c / 2``.
    """
    if kappa <= 0:
        raise DomainError("kappa must be > 0")
    g = np.asarray(g, dtype=float)
    omega = np.asarray(omega, dtype=float)
    gamma_c = 4.0 * g**2 / kappa
    p_exc = (omega**2 / 4.0) / ((gamma + gamma_c) ** 2 / 4.0 + laser_detuning**2 + omega**2 / 2.0)
    return _scalar(gamma_c * p_exc)


def sn_bound(q, kappa, hyperfine, gamma, g):
    """Upper bound on the signal-to-noise reached at ``delta = A/2``."""
    return q * kappa * hyperfine**2 / (2.0 * gamma * g**2)


@dataclass(frozen=True)
class RateReport:
    n_bar: float
    gamma_max: float
    gamma_eff: float
    gamma_flip: float
    sn: float
    sn_bound: float
    kappa_derived: float
    delta_zeeman: float
    theta: float
    q_free: float
    readout_error_4: float

    def to_dict(self):
        return dict(self.__dict__)


def rate_report(config: ExperimentConfig) -> RateReport:
    """Evaluate the whole analytic rate chain for one configuration."""
    atom, cav, det = config.atom, config.cavity, config.detection
    omega = rabi_from_power(config.drive.p_total, config.drive)
    n_bar = intracavity_photon_number(omega, cav.g_max)
    g_max = emission_rate(cav.kappa, n_bar)
    # standing-wave average of sin^2
    g_eff = g_max / 2.0
    g_flip = spin_flip_rate(config.field.delta, atom.hyperfine, atom.gamma, omega)
    theta, q_free, _ = free_space_background(det.q, atom.wavelength, cav.waist, atom.gamma,
                                             omega, config.source.t_transit)
    return RateReport(
        n_bar=n_bar,
        gamma_max=g_max,
        gamma_eff=g_eff,
        gamma_flip=g_flip,
        sn=signal_to_noise(det.q, g_eff, g_flip),
        sn_bound=sn_bound(det.q, cav.kappa, atom.hyperfine, atom.gamma, cav.g_max),
        kappa_derived=kappa_from_mirrors(cav.transmittance, cav.loss, cav.length),
        delta_zeeman=zeeman_shift(config.field.b_gauss, atom.g_f, atom.m_f),
        theta=theta,
        q_free=q_free,
        readout_error_4=readout_error(4.0),
    )


@dataclass(frozen=True)
class SNCurve:
    deltas: np.ndarray
    sn: np.ndarray
    argmax_delta: float
    bound: float


def sn_curve(deltas, config: ExperimentConfig) -> SNCurve:
    """Signal-to-noise as a function of the Zeeman shift.

    The cavity emission rate does not depend on the shift; only the flip
    rate does, so the curve peaks where the two flip channels balance.
    """
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size == 0:
        raise UsageError("empty detuning grid")
    atom, cav = config.atom, config.cavity
    omega = rabi_from_power(config.drive.p_total, config.drive)
    gamma_eff = emission_rate(cav.kappa, intracavity_photon_number(omega, cav.g_max)) / 2.0
    flips = spin_flip_rate(deltas, atom.hyperfine, atom.gamma, omega)
    sn = config.detection.q * gamma_eff / flips
    return SNCurve(
        deltas=deltas,
        sn=sn,
        argmax_delta=float(deltas[np.argmax(sn)]),
        bound=sn_bound(config.detection.q, cav.kappa, atom.hyperfine, atom.gamma, cav.g_max),
    )


def design_grid(config: ExperimentConfig, n_points):
    """Evenly spaced Zeeman shifts strictly inside ``(0, A)``."""
    a = config.atom.hyperfine
    return np.linspace(0.0, a, n_points + 2)[1:-1]
