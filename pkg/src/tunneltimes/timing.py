"""Characteristic times of the transmission subprocess.

Four clocks are implemented: the exact group time (centre-of-mass transit of
the transmitted packet between the barrier edges), the asymptotic group time
(spectral phase derivatives), the dwell time (stationary in-barrier density
over transmitted current), and the Hartman sweep assembling the saturating
versus diverging behaviour of the different clocks as the barrier widens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .potential import Barrier, make_rectangular
from .stationary import (amplitudes_from_basis, rectangular_oracle,
                         solve_basis, stationary_triple)
from .units import UnitSystem
from .wavepacket import PacketSet, SpectralProfile

__all__ = ["GroupTimeResult", "DwellResult", "exact_group_time",
           "asymptotic_group_time", "dwell_time", "hartman_sweep",
           "spectral_phase_data"]


@dataclass(frozen=True)
class GroupTimeResult:
    """Group-time quantities for one packet configuration."""

    t1: float
    t2: float
    tau_exact: float
    tau_as: float
    d_gr: float
    k_tr: float
    tau_free: float
    x_start_tr: float

    def interval_time(self, L1: float, L2: float, units: UnitSystem) -> float:
        """Asymptotic transit time over [a - L1, b + L2]."""
        return (self.d_gr + L1 + L2) / units.velocity(self.k_tr)


@dataclass(frozen=True)
class DwellResult:
    """Dwell time at one wavenumber, from both equivalent definitions."""

    k: float
    tau_dwell: float
    current: float
    both_forms_delta: float
    closed_form: float | None = None


# ---------------------------------------------------------------------------
# Exact group time
# ---------------------------------------------------------------------------

def _crossing(times: NDArray, xs: NDArray, level: float, last: bool) -> float:
    """Bracketed root of a monotone-interpolated series crossing ``level``.

    Upward crossings only; ``last`` selects the final one, otherwise the
    first.
    """
    spline = PchipInterpolator(times, xs)
    up = np.nonzero((xs[:-1] < level) & (xs[1:] >= level))[0]
    if up.size == 0:
        raise RuntimeError(f"centre of mass never crosses x={level}")
    i = up[-1] if last else up[0]
    return float(brentq(lambda t: spline(t) - level,
                        times[i], times[i + 1], xtol=1e-12))


def exact_group_time(pset: PacketSet, times: ArrayLike,
                     field: str = "tr") -> tuple[float, float, float]:
    """(t1, t2, tau_exact) from the norm-normalized CM of the chosen field.

    ``t1``/``t2`` are the first upward crossing of the left barrier edge and
    the last upward crossing of the right edge by
    <x>_field(t) / ||psi_field(t)||^2.
    """
    t = np.asarray(times, dtype=float)
    series = pset.expectation_series(field, t, with_momentum=False)
    bar = pset.barrier
    t1 = _crossing(series.times, series.x_mean, bar.a, last=False)
    t2 = _crossing(series.times, series.x_mean, bar.b, last=True)
    return t1, t2, t2 - t1


# ---------------------------------------------------------------------------
# Asymptotic group time
# ---------------------------------------------------------------------------

def spectral_phase_data(pset: PacketSet) -> dict[str, NDArray[np.float64]]:
    """Unwrapped phases and their grid derivatives over the packet spectrum."""
    k = pset.profile.k
    lam = np.unwrap(pset.amp["lam"])
    J = np.unwrap(pset.amp["J"])
    for name, ph in (("lambda", lam), ("J", J)):
        if np.max(np.abs(np.diff(ph))) > np.pi:
            raise RuntimeError(
                f"{name}(k) jumps by more than pi between grid samples; "
                "the k-grid is too coarse for phase differentiation")
    return {"k": k, "lam": lam, "J": J,
            "lam_prime": np.gradient(lam, k), "J_prime": np.gradient(J, k)}


def asymptotic_group_time(pset: PacketSet) -> GroupTimeResult:
    """Spectral-average group time of the transmitted packet.

    All averages use the transmitted weights T(k)|A(k)|^2 (normalized); the
    free reference time is the classical transit d / v(k0).
    """
    p = pset.profile
    data = spectral_phase_data(pset)
    wts = p.weights * p.A**2 * pset.amp["T"]
    wts = wts / np.sum(wts)
    lam_avg = float(np.sum(wts * data["lam_prime"]))
    J_avg = float(np.sum(wts * data["J_prime"]))
    k_tr = float(np.sum(wts * p.k))
    d_gr = J_avg - lam_avg
    tau_as = d_gr / pset.units.velocity(k_tr)
    tau_free = pset.barrier.d / pset.units.velocity(p.k0)
    return GroupTimeResult(t1=np.nan, t2=np.nan, tau_exact=np.nan,
                           tau_as=tau_as, d_gr=d_gr, k_tr=k_tr,
                           tau_free=tau_free, x_start_tr=-lam_avg)


def group_time_report(pset: PacketSet, times: ArrayLike) -> GroupTimeResult:
    """Asymptotic quantities plus the exact CM transit on one time grid."""
    asym = asymptotic_group_time(pset)
    t1, t2, tau_exact = exact_group_time(pset, times)
    return GroupTimeResult(t1=t1, t2=t2, tau_exact=tau_exact,
                           tau_as=asym.tau_as, d_gr=asym.d_gr,
                           k_tr=asym.k_tr, tau_free=asym.tau_free,
                           x_start_tr=asym.x_start_tr)


# ---------------------------------------------------------------------------
# Dwell time
# ---------------------------------------------------------------------------

def dwell_time(barrier: Barrier, k: float, units: UnitSystem,
               nodes: int = 64) -> DwellResult:
    """Dwell time for transmission at wavenumber ``k``.

    Evaluates both equivalent definitions -- in-barrier density of the
    transmission component over its transmitted current, and twice the
    outer-half density of the full state over the full transmitted current --
    and reports their difference as a consistency diagnostic.
    """
    basis = solve_basis(barrier, k, units)
    amp = amplitudes_from_basis(basis, barrier)
    tri = stationary_triple(amp, basis, barrier)
    current = amp.T * units.velocity(k)
    base, wts = leggauss(nodes)

    def integral(fn, lo, hi):
        half = 0.5 * (hi - lo)
        xs = 0.5 * (lo + hi) + half * base
        return half * float(np.sum(wts * np.abs(fn(xs)) ** 2))

    form1 = (integral(tri.psi_tr, barrier.a, barrier.x_c)
             + integral(tri.psi_tr, barrier.x_c, barrier.b)) / current
    form2 = 2.0 * integral(tri.psi_full, barrier.x_c, barrier.b) / current
    closed = None
    if barrier.kind == "rectangular":
        closed = rectangular_oracle(barrier, k, units).tau_dwell
    return DwellResult(k=float(k), tau_dwell=form1, current=current,
                       both_forms_delta=abs(form1 - form2),
                       closed_form=closed)


# ---------------------------------------------------------------------------
# Hartman sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HartmanSweep:
    """Closed-form clock values over a family of widening rectangular barriers."""

    d: NDArray[np.float64]
    T: NDArray[np.float64]
    d_gr: NDArray[np.float64]
    tau_dwell: NDArray[np.float64]
    tau0: NDArray[np.float64]
    tau_end: NDArray[np.float64]
    tau_int: NDArray[np.float64]
    tau_end_limit: float


def hartman_sweep(a: float, v0: float, k: float, d_values: ArrayLike,
                  units: UnitSystem) -> HartmanSweep:
    """Evaluate T, d_gr and all clock times for each barrier width.

    The saturation value of the final-reading time as the barrier widens,
    2 m k / (hbar kappa_b kappa_0^2), is attached for comparison.
    """
    d_values = np.asarray(d_values, dtype=float)
    recs = [rectangular_oracle(make_rectangular(a, a + d, v0), k, units)
            for d in d_values]
    E = units.energy(float(k))
    if v0 <= E:
        raise ValueError("the sweep is defined for tunnelling (E < V0)")
    kappa_b = np.sqrt((v0 - E) / units.kinetic)
    kappa0_sq = v0 / units.kinetic
    limit = 2 * units.m * float(k) / (units.hbar * kappa_b * kappa0_sq)
    return HartmanSweep(
        d=d_values,
        T=np.asarray([r.T for r in recs]),
        d_gr=np.asarray([r.d_gr for r in recs]),
        tau_dwell=np.asarray([r.tau_dwell for r in recs]),
        tau0=np.asarray([r.tau0 for r in recs]),
        tau_end=np.asarray([r.tau_end for r in recs]),
        tau_int=np.asarray([r.tau_int for r in recs]),
        tau_end_limit=limit)
