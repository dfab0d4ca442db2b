import numpy as np
import pytest

from tunneltimes import (PacketSet, UnitSystem, build_profile,
                         clock_times_per_k, larmor_times, make_rectangular,
                         perturbation_field, precession_time_extrapolated,
                         rectangular_oracle, spinor_simulation)
from tunneltimes.larmor import larmor_time, larmor_time_direct

GAAS = UnitSystem(mass=0.067)
NAT = UnitSystem(natural=True)
E0 = 0.05
BARRIER = make_rectangular(200.0, 215.0, 0.2)


def narrow_profile(l0=200.0, n=256):
    return build_profile(GAAS.wavenumber(E0), l0, n, 8.0)


def test_per_k_clock_times_match_closed_forms():
    bar = make_rectangular(1.0, 3.0, 1.0)
    ks = np.array([0.6, 1.0, 1.4])
    per = clock_times_per_k(bar, ks, NAT)
    for i, k in enumerate(ks):
        rec = rectangular_oracle(bar, k, NAT)
        assert abs(per["tau0"][i] - rec.tau0) < 1e-6 * abs(rec.tau0)
        assert abs(per["tau_end"][i] - rec.tau_end) < 1e-6 * abs(rec.tau_end)
        assert abs(per["tau_int"][i] - rec.tau_int) < 1e-6 * abs(rec.tau_int)


def test_per_k_identity_via_closed_forms():
    # tau_end = tau0 + tau_dwell + tau_int holds exactly per wavenumber
    bar = make_rectangular(1.0, 3.0, 1.0)
    for k in (0.5, 0.9, 1.3):
        rec = rectangular_oracle(bar, k, NAT)
        resid = rec.tau_end - (rec.tau0 + rec.tau_dwell + rec.tau_int)
        assert abs(resid) < 1e-12 * max(abs(rec.tau_dwell), abs(rec.tau_end))


def test_packet_identity_residual_small():
    lt = larmor_times(narrow_profile(), BARRIER, GAAS)
    scale = max(abs(lt.tau_L), abs(lt.tau_end))
    assert abs(lt.identity_residual) < 1e-6 * scale


def test_spectral_vs_direct_larmor_time():
    p = narrow_profile()
    spectral = larmor_time(p, BARRIER, GAAS)
    pset = PacketSet(BARRIER, p, GAAS, domain=(-2600.0, 3000.0))
    direct = larmor_time_direct(pset, np.linspace(-2.0, 2.5, 121))
    assert abs(direct - spectral) < 1e-4 * spectral


def test_perturbation_field_rejects_hopeless_step():
    with pytest.raises(RuntimeError):
        perturbation_field(BARRIER, np.array([GAAS.wavenumber(E0)]), GAAS,
                           h_rel=0.8, check_tol=1e-14)


def test_richardson_precession_matches_clock_sum():
    p = narrow_profile()
    lt = larmor_times(p, BARRIER, GAAS)
    omega = 1e-5 * BARRIER.v0 / GAAS.hbar
    reading = precession_time_extrapolated(BARRIER, p, GAAS, omega)
    target = lt.tau_L + lt.tau_int
    assert abs(reading - target) < 1e-3 * abs(target)


def test_spinor_simulation_spin_projections():
    p = build_profile(GAAS.wavenumber(E0), 10.0, 1024, 4.0)
    omega = 5e-7 * BARRIER.v0 / GAAS.hbar
    times = np.linspace(0.0, 1.2, 13)
    series = spinor_simulation(BARRIER, p, GAAS, omega, times)
    hbar = GAAS.hbar
    # asymptotic z-projection equals the transmission asymmetry formula
    sz_formula = 0.5 * hbar * (series.T_up - series.T_down) \
        / (series.T_up + series.T_down)
    assert abs(series.Sz_asymptotic - sz_formula) == 0.0
    assert abs(series.Sz[-1] / (0.5 * hbar)
               - sz_formula / (0.5 * hbar)) < 1e-8
    # spin vector stays in (slightly below) the hbar/2 sphere
    r = np.sqrt(series.Sx**2 + series.Sy**2 + series.Sz**2)
    assert np.all(r <= 0.5 * hbar * (1 + 1e-12))


def test_spinor_rejects_strong_field():
    p = narrow_profile()
    with pytest.raises(ValueError):
        spinor_simulation(BARRIER, p, GAAS, 0.1 * BARRIER.v0 / GAAS.hbar,
                          np.array([0.0, 0.5]))
