"""Larmor-clock times for the transmission subprocess.

A weak magnetic field confined to the barrier region splits the barrier
height seen by the two spin components; the in-plane spin rotation of the
transmitted sub-ensemble then reads out time.  The first-order machinery
works with the height-derivative field psi_tilde = (hbar/2) d(psi)/dV0,
obtained by Richardson-refined central differences of the amplitude pipeline.
The decomposition reads tau_end = tau0 + tau_L + tau_int: final reading =
initial reading + in-barrier precession + a non-unitarity correction sourced
at the barrier centre.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .potential import Barrier, make_piecewise, make_rectangular
from .stationary import (amplitudes_from_basis, gfun, hfun,
                         rectangular_amplitudes, solve_basis)
from .units import UnitSystem
from .wavepacket import PacketSet, SpectralProfile

__all__ = ["PerturbationField", "LarmorTimes", "SpinSeries",
           "perturbation_field", "larmor_time", "larmor_time_direct",
           "interference_time", "clock_readings", "larmor_times",
           "spinor_simulation", "shifted_barrier"]


def shifted_barrier(barrier: Barrier, delta: float) -> Barrier:
    """The same barrier with a uniform height offset on [a, b]."""
    if barrier.kind == "rectangular":
        return make_rectangular(barrier.a, barrier.b, barrier.v0 + delta)
    if barrier.kind == "piecewise":
        return make_piecewise(barrier.a,
                              [(w, h + delta) for w, h in barrier.segments])
    base = barrier.profile
    return Barrier(a=barrier.a, b=barrier.b, kind="sampled",
                   profile=lambda x: base(x) + delta)


def _amplitude_grid(barrier: Barrier, k: NDArray[np.float64],
                    units: UnitSystem) -> dict[str, NDArray]:
    if barrier.kind == "rectangular":
        return rectangular_amplitudes(barrier, k, units)
    records = [amplitudes_from_basis(solve_basis(barrier, kk, units), barrier)
               for kk in k]
    out = {name: np.asarray([getattr(r, name) for r in records])
           for name in ("a_out", "b_out", "a_full", "b_full", "A_tr_in",
                        "A_ref_in", "a_tr", "T", "R", "lam", "J")}
    out["k"] = k
    return out


@dataclass(frozen=True)
class PerturbationField:
    """Height derivatives (hbar/2) d(.)/dV0 of the transmission amplitudes.

    ``djump_tilde`` is the derivative of the one-sided slope jump of psi_tr
    at the barrier centre (right minus left), the source of the
    non-unitarity correction; ``psi_c_tilde`` differentiates psi_tr at the
    centre itself.
    """

    k: NDArray[np.float64]
    h: float
    A_tr_tilde: NDArray[np.complex128]
    f_out_tilde: NDArray[np.complex128]
    psi_c_tilde: NDArray[np.complex128]
    djump_tilde: NDArray[np.complex128]


def perturbation_field(barrier: Barrier, k: ArrayLike, units: UnitSystem,
                       h_rel: float = 1e-3,
                       check_tol: float = 1e-5) -> PerturbationField:
    """Central-difference height derivatives with one Richardson step.

    The two difference quotients (step h and h/2) must agree to ``check_tol``
    relative before extrapolation; disagreement signals a poorly chosen step
    and raises.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    # Step scale: the barrier height, or the kinetic energy when the barrier
    # is flat (so a zero-height barrier still gets a usable step).
    scale = max(float(np.max(np.abs(barrier.V(
        np.linspace(barrier.a, barrier.b, 33))))),
        units.energy(float(np.mean(k))))
    h = h_rel * scale
    d = barrier.d

    def extract(amp):
        f_out = amp["a_out"] * np.exp(-1j * k * d)
        return np.stack([amp["A_tr_in"], f_out, amp["b_full"],
                         amp["a_full"] - amp["a_tr"]])

    def quotient(step):
        up = extract(_amplitude_grid(shifted_barrier(barrier, +step), k, units))
        dn = extract(_amplitude_grid(shifted_barrier(barrier, -step), k, units))
        return (up - dn) / (2.0 * step)

    def mismatch_at(step):
        d1 = quotient(step)
        d2 = quotient(step / 2)
        # Relative to each component's scale across the grid, so an isolated
        # zero-crossing of one derivative does not dominate the check.
        denom = np.maximum(np.abs(d2),
                           1e-300 + 1e-3 * np.max(np.abs(d2), axis=1,
                                                  keepdims=True))
        return d1, d2, float(np.max(np.abs(d2 - d1) / denom))

    for attempt in range(3):
        d1, d2, mismatch = mismatch_at(h)
        if mismatch <= check_tol:
            break
        if attempt < 2:
            h = h / 10
    if mismatch > check_tol:
        raise RuntimeError(
            f"height-derivative quotients disagree ({mismatch:.2e} relative);"
            f" try a step near {h / 10:.3e}")
    tilde = (units.hbar / 2.0) * (4.0 * d2 - d1) / 3.0
    return PerturbationField(k=k, h=h, A_tr_tilde=tilde[0],
                             f_out_tilde=tilde[1], psi_c_tilde=tilde[2],
                             djump_tilde=tilde[3])


# ---------------------------------------------------------------------------
# Per-wavenumber clock values
# ---------------------------------------------------------------------------

def clock_times_per_k(barrier: Barrier, k: ArrayLike, units: UnitSystem,
                      pert: PerturbationField | None = None
                      ) -> dict[str, NDArray[np.float64]]:
    """tau0(k), tau_end(k), tau_int(k) from the derivative amplitudes."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if pert is None:
        pert = perturbation_field(barrier, k, units)
    amp = _amplitude_grid(barrier, k, units)
    T = amp["T"]
    f_in = amp["A_tr_in"]
    f_out = amp["a_out"] * np.exp(-1j * k * barrier.d)
    tau0 = 2.0 * np.imag(np.conj(pert.A_tr_tilde) * f_in) / T
    tau_end = 2.0 * np.imag(np.conj(pert.f_out_tilde) * f_out) / T
    psi_c = amp["b_full"]
    djump = amp["a_full"] - amp["a_tr"]
    tau_int = np.real(psi_c * np.conj(pert.djump_tilde)
                      - np.conj(pert.psi_c_tilde) * djump) / (k * T)
    return {"k": k, "tau0": tau0, "tau_end": tau_end, "tau_int": tau_int}


def _dwell_grid(barrier: Barrier, k: NDArray[np.float64],
                units: UnitSystem) -> NDArray[np.float64]:
    """tau_dwell over a k-grid (closed form for rectangular barriers)."""
    if barrier.kind == "rectangular":
        d = barrier.d
        E = units.kinetic * k * k
        w = (barrier.v0 - E) / units.kinetic
        k02 = barrier.v0 / units.kinetic
        y = w * d * d
        return (units.m / (2 * units.hbar * k)) * (
            2 * d + k02 * d**3 * hfun(y) / 6.0)
    from .timing import dwell_time
    return np.asarray([dwell_time(barrier, kk, units).tau_dwell for kk in k])


# ---------------------------------------------------------------------------
# Packet-averaged clock times
# ---------------------------------------------------------------------------

def _spectral_average(profile: SpectralProfile, T: NDArray,
                      values: NDArray) -> float:
    """T-weighted spectral average normalized by the transmitted norm."""
    w = profile.weights * profile.A**2 * T
    return float(np.sum(w * values) / np.sum(w))


def larmor_time(profile: SpectralProfile, barrier: Barrier,
                units: UnitSystem) -> float:
    """In-barrier precession time: transmitted-weighted dwell average."""
    tau_dwell = _dwell_grid(barrier, profile.k, units)
    amp = _amplitude_grid(barrier, profile.k, units)
    return _spectral_average(profile, amp["T"], tau_dwell)


def larmor_time_direct(pset: PacketSet, times: ArrayLike) -> float:
    """Cross-check of the precession time by a direct (t, x) double integral.

    Integrates the in-barrier density of the transmitted component over a
    truncated time window (trapezoid in t, the panel quadrature in x) and
    divides by the asymptotic transmitted norm.
    """
    t = np.asarray(times, dtype=float)
    xg, wx = pset.grid(t)
    bar = pset.barrier
    sel = (xg >= bar.a) & (xg <= bar.b)
    F = pset.field_series("tr", t)
    inside = wx[sel] @ np.abs(F[sel]) ** 2
    return float(np.trapezoid(inside, t) / pset.transmitted_norm())


def interference_time(profile: SpectralProfile, barrier: Barrier,
                      units: UnitSystem,
                      pert: PerturbationField | None = None) -> float:
    """Packet-averaged non-unitarity correction."""
    per_k = clock_times_per_k(barrier, profile.k, units, pert)
    amp = _amplitude_grid(barrier, profile.k, units)
    return _spectral_average(profile, amp["T"], per_k["tau_int"])


def clock_readings(profile: SpectralProfile, barrier: Barrier,
                   units: UnitSystem,
                   pert: PerturbationField | None = None
                   ) -> tuple[float, float]:
    """(tau0, tau_end): initial and final packet-averaged clock readings."""
    per_k = clock_times_per_k(barrier, profile.k, units, pert)
    amp = _amplitude_grid(barrier, profile.k, units)
    tau0 = _spectral_average(profile, amp["T"], per_k["tau0"])
    tau_end = _spectral_average(profile, amp["T"], per_k["tau_end"])
    return tau0, tau_end


@dataclass(frozen=True)
class LarmorTimes:
    tau0: float
    tau_L: float
    tau_int: float
    tau_end: float

    @property
    def identity_residual(self) -> float:
        return self.tau_end - (self.tau0 + self.tau_L + self.tau_int)


def larmor_times(profile: SpectralProfile, barrier: Barrier,
                 units: UnitSystem) -> LarmorTimes:
    """All four clock readings with one shared derivative field."""
    pert = perturbation_field(barrier, profile.k, units)
    tau0, tau_end = clock_readings(profile, barrier, units, pert)
    return LarmorTimes(tau0=tau0,
                       tau_L=larmor_time(profile, barrier, units),
                       tau_int=interference_time(profile, barrier, units, pert),
                       tau_end=tau_end)


# ---------------------------------------------------------------------------
# Finite-field spinor simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinSeries:
    """Spin expectation values of the transmitted sub-ensemble over time."""

    times: NDArray[np.float64]
    Sx: NDArray[np.float64]
    Sy: NDArray[np.float64]
    Sz: NDArray[np.float64]
    theta: NDArray[np.float64]
    phi: NDArray[np.float64]
    omega_L: float
    phi0: float
    phi_end: float
    T_up: float
    T_down: float
    Sz_asymptotic: float
    theta0: float

    @property
    def delta_phi(self) -> float:
        return self.phi_end - self.phi0


def _asymptotic_overlaps(barrier: Barrier, profile: SpectralProfile,
                         units: UnitSystem, omega_L: float):
    """Spectral in/out overlaps of the spin-split transmission amplitudes."""
    dv = units.hbar * omega_L / 2.0
    up = _amplitude_grid(shifted_barrier(barrier, -dv), profile.k, units)
    dn = _amplitude_grid(shifted_barrier(barrier, +dv), profile.k, units)
    w = profile.weights * profile.A**2
    phase_out = np.exp(-1j * profile.k * barrier.d)
    ov_in = complex(np.sum(w * np.conj(up["A_tr_in"]) * dn["A_tr_in"]))
    ov_out = complex(np.sum(w * np.conj(up["a_out"] * phase_out)
                            * (dn["a_out"] * phase_out)))
    T_up = float(np.sum(w * up["T"]))
    T_dn = float(np.sum(w * dn["T"]))
    return ov_in, ov_out, T_up, T_dn


def spinor_simulation(barrier: Barrier, profile: SpectralProfile,
                      units: UnitSystem, omega_L: float,
                      times: ArrayLike) -> SpinSeries:
    """Propagate both spin components and track the transmitted spin vector.

    The initial spinor is the +x eigenstate; the spin-up (down) component
    scatters off the barrier lowered (raised) by hbar*omega_L/2.  Spin
    projections use the spatial overlaps of the two transmitted components,
    normalized per time by the sub-ensemble norm; the initial/final azimuth
    readings come from the asymptotic spectral overlaps.
    """
    if units.hbar * omega_L / 2.0 >= 1e-3 * max(abs(barrier.v0), 1e-30):
        raise ValueError("omega_L too large for the weak-field clock regime")
    t = np.asarray(times, dtype=float)
    dv = units.hbar * omega_L / 2.0
    up_set = PacketSet(shifted_barrier(barrier, -dv), profile, units)
    up_set.grid(t)
    # Both components must be integrated on the identical grid.
    dn_set = PacketSet(shifted_barrier(barrier, +dv), profile, units,
                       domain=up_set.domain)
    Fu = up_set.field_series("tr", t)
    Fd = dn_set.field_series("tr", t)
    _, wx = up_set.grid()
    ov = np.einsum("x,xt,xt->t", wx, np.conj(Fu), Fd)
    nu = np.einsum("x,xt->t", wx, np.abs(Fu) ** 2)
    nd = np.einsum("x,xt->t", wx, np.abs(Fd) ** 2)
    hbar = units.hbar
    denom = nu + nd
    Sx = hbar * np.real(ov) / denom
    Sy = hbar * np.imag(ov) / denom
    Sz = 0.5 * hbar * (nu - nd) / denom
    r = np.sqrt(Sx**2 + Sy**2 + Sz**2)
    theta = np.arccos(np.clip(Sz / r, -1.0, 1.0))
    phi = np.unwrap(np.arctan2(Sy, Sx))
    ov_in, ov_out, T_up, T_dn = _asymptotic_overlaps(barrier, profile, units,
                                                     omega_L)
    return SpinSeries(times=t, Sx=Sx, Sy=Sy, Sz=Sz, theta=theta, phi=phi,
                      omega_L=float(omega_L),
                      phi0=float(np.angle(ov_in)),
                      phi_end=float(np.angle(ov_out)),
                      T_up=T_up, T_down=T_dn,
                      Sz_asymptotic=0.5 * hbar * (T_up - T_dn) / (T_up + T_dn),
                      theta0=float(np.arccos((T_up - T_dn) / (T_up + T_dn))))


def precession_reading(barrier: Barrier, profile: SpectralProfile,
                       units: UnitSystem, omega_L: float) -> float:
    """Delta-phi / (-omega_L) from the asymptotic overlaps at one field."""
    ov_in, ov_out, _, _ = _asymptotic_overlaps(barrier, profile, units,
                                               omega_L)
    return float((np.angle(ov_out) - np.angle(ov_in)) / (-omega_L))


def precession_time_extrapolated(barrier: Barrier, profile: SpectralProfile,
                                 units: UnitSystem, omega_L: float) -> float:
    """Richardson limit of Delta-phi / (-omega_L); equals tau_L + tau_int.

    The reading is even in the field to leading correction order, so the
    (omega, omega/2) pair eliminates the quadratic term.
    """
    r1 = precession_reading(barrier, profile, units, omega_L)
    r2 = precession_reading(barrier, profile, units, omega_L / 2.0)
    return (4.0 * r2 - r1) / 3.0
