import math

import numpy as np
import pytest

import oracles
from cavityspin import rates
from cavityspin.config import TWO_PI, ExperimentConfig
from cavityspin.errors import DomainError, UsageError

# frozen from the oracle module (independent formulas, plain math)
FROZEN = {
    "n_bar": 0.18367346938775514,
    "gamma_max": 10386489.997582583,
    "gamma_eff": 5193244.998791291,
    "gamma_flip": 326.52223128781657,
    "sn": 4771.416309060117,
    "sn_bound": 16467222.191074234,
}


def test_oracle_matches_frozen_values():
    chain = oracles.rate_chain()
    for key, value in FROZEN.items():
        assert chain[key] == pytest.approx(value, rel=1e-12), key


def test_rate_report_matches_oracle(config):
    report = rates.rate_report(config).to_dict()
    for key, value in FROZEN.items():
        assert report[key] == pytest.approx(value, rel=1e-9), key
    assert report["readout_error_4"] == pytest.approx(math.exp(-4))


def test_photon_number_examples():
    assert rates.intracavity_photon_number(TWO_PI * 2.4e6, TWO_PI * 2.8e6) == pytest.approx(0.18367, rel=1e-4)
    assert rates.intracavity_photon_number(0.0, 1.0) == 0.0
    with pytest.raises(DomainError):
        rates.intracavity_photon_number(1.0, 0.0)


def test_emission_rate_scales_with_kappa():
    assert rates.emission_rate(2.0, 0.5) == 2.0
    with pytest.raises(DomainError):
        rates.emission_rate(0.0, 0.1)
    with pytest.raises(DomainError):
        rates.emission_rate(1.0, -0.1)


def test_free_space_rate_matches_two_level_scattering():
    gamma, omega = TWO_PI * 182e3, TWO_PI * 2.4e6
    for delta in (0.0, TWO_PI * 1e6, TWO_PI * 71e6):
        assert rates.free_space_rate(delta, gamma, omega) == pytest.approx(
            oracles.lorentzian_scatter(delta, gamma, omega), rel=1e-12)
    # strong drive saturates at gamma/2
    assert rates.free_space_rate(0.0, gamma, 1e6 * gamma) == pytest.approx(gamma / 2, rel=1e-9)
    assert rates.free_space_rate(0.0, gamma, omega) == pytest.approx(5.7013e5, rel=1e-4)


def test_spin_flip_rate_domain():
    a, gamma, omega = TWO_PI * 5.9e9, TWO_PI * 182e3, TWO_PI * 2.4e6
    with pytest.raises(DomainError):
        rates.spin_flip_rate(0.0, a, gamma, omega)
    with pytest.raises(DomainError):
        rates.spin_flip_rate(a, a, gamma, omega)
    # symmetric under delta -> A - delta
    d = TWO_PI * 1e9
    assert rates.spin_flip_rate(d, a, gamma, omega) == pytest.approx(rates.spin_flip_rate(a - d, a, gamma, omega))


def test_signal_to_noise_limits():
    assert rates.signal_to_noise(0.3, 1.0, 0.0) == math.inf
    assert rates.signal_to_noise(0.3, 10.0, 1.0) == pytest.approx(3.0)


def test_derived_setup_values(config):
    cav = config.cavity
    kappa = rates.kappa_from_mirrors(cav.transmittance, cav.loss, cav.length)
    assert kappa == pytest.approx(oracles.kappa_from_finesse(cav.transmittance, cav.loss, cav.length), rel=1e-12)
    assert kappa / TWO_PI == pytest.approx(4.4533e6, rel=1e-4)
    delta = rates.zeeman_shift(34.0, 1.0, -1.5)
    assert delta / TWO_PI == pytest.approx(71.38e6, rel=1e-4)
    t, v = rates.fall_kinematics(7e-3)
    t_o, v_o = oracles.free_fall(7e-3)
    assert (t, v) == pytest.approx((t_o, v_o), rel=1e-12)
    assert rates.mean_atom_spacing(0.3, 1e3) == pytest.approx(3e-4, rel=1e-15)


def test_kappa_domain():
    with pytest.raises(DomainError):
        rates.kappa_from_mirrors(0.0, 0.0, 1e-4)
    with pytest.raises(DomainError):
        rates.kappa_from_mirrors(1e-5, 0.0, 0.0)


def test_free_space_background_matches_cone_oracle(config):
    omega = rates.rabi_from_power(config.drive.p_total, config.drive)
    got = rates.free_space_background(0.3, 556e-9, 19e-6, config.atom.gamma, omega, 120e-6)
    want = oracles.background_counts(0.3, 556e-9, 19e-6, config.atom.gamma, omega, 120e-6)
    # the package uses the small-angle cone; the oracle integrates the exact cap
    assert got == pytest.approx(want, rel=1e-4)
    assert got[2] == pytest.approx(4.452e-4, rel=1e-3)


def test_rabi_from_power_scaling(config):
    d = config.drive
    assert rates.rabi_from_power(d.p_ref, d) == pytest.approx(d.omega_ref)
    assert rates.rabi_from_power(4 * d.p_ref, d) == pytest.approx(2 * d.omega_ref)
    assert rates.rabi_from_power(0.0, d) == 0.0
    with pytest.raises(DomainError):
        rates.rabi_from_power(-1.0, d)


def test_readout_error_and_multi_atom():
    assert rates.readout_error(4.0) == pytest.approx(0.018316, rel=1e-4)
    assert rates.readout_error(0.0) == 1.0
    for mu in (1e-2, 0.12, 1.0, 3.0):
        assert rates.multi_atom_fraction(mu) == pytest.approx(oracles.multi_atom_ratio(mu), rel=1e-9)
    # small occupancy: the ratio tends to mu/2 (the direct formula cancels badly here)
    assert rates.multi_atom_fraction(1e-6) == pytest.approx(5e-7, rel=1e-6)
    assert rates.multi_atom_fraction(0.0) == 0.0
    with pytest.raises(DomainError):
        rates.multi_atom_fraction(-0.1)


def test_saturating_rate_matches_oracle(config):
    cav, atom = config.cavity, config.atom
    omega = config.drive.omega_ref
    got = rates.saturating_rate(cav.g_max, omega, cav.kappa, atom.gamma)
    assert got == pytest.approx(oracles.saturating_cavity_rate(cav.g_max, omega, cav.kappa, atom.gamma), rel=1e-12)
    assert got == pytest.approx(4.0254e6, rel=1e-4)
    # saturates at half the Purcell rate
    big = rates.saturating_rate(cav.g_max, 1e4 * omega, cav.kappa, atom.gamma)
    assert big == pytest.approx(2 * cav.g_max**2 / cav.kappa, rel=1e-6)


def test_sn_curve_peaks_at_half_hyperfine(config):
    grid = rates.design_grid(config, 512)
    curve = rates.sn_curve(grid, config)
    step = grid[1] - grid[0]
    assert abs(curve.argmax_delta - config.atom.hyperfine / 2) <= step
    assert np.all(curve.sn <= curve.bound)
    with pytest.raises(UsageError):
        rates.sn_curve([], config)


def test_sn_bound_zero_g_limit():
    with pytest.raises(ZeroDivisionError):
        rates.sn_bound(0.3, 1.0, 1.0, 1.0, 0.0)


def test_paper_rounded_values(config):
    r = rates.rate_report(ExperimentConfig())
    assert r.n_bar == pytest.approx(0.16, rel=0.15)
    assert r.gamma_max == pytest.approx(9.3e6, rel=0.15)
    assert r.gamma_flip == pytest.approx(3e2, rel=0.10)
    assert r.sn == pytest.approx(5e3, rel=0.10)
