"""Acceptance gate: one test per criterion, each printing PASS/FAIL.

Every check asserts, so a failing criterion fails its test; the printed
summary lists each sub-check with the measured value next to the gate.
"""

import json
import time

import numpy as np
from numpy.polynomial.legendre import leggauss

from tunneltimes import (PacketSet, UnitSystem, amplitudes_from_basis,
                         build_profile, dwell_time, group_time_report,
                         hartman_sweep, make_piecewise, make_rectangular,
                         rectangular_amplitudes, rectangular_oracle,
                         solve_basis, stationary_triple,
                         transfer_matrix_oracle)
from tunneltimes.cli import main as cli_main, preset
from tunneltimes.larmor import (clock_times_per_k, larmor_times,
                                precession_time_extrapolated,
                                spinor_simulation)
from tunneltimes.stationary import cfun, gfun
from tunneltimes.timing import exact_group_time

NAT = UnitSystem(natural=True)
GAAS = UnitSystem(mass=0.067)
E0 = 0.05
FIG1_BARRIER = make_rectangular(200.0, 215.0, 0.2)


def report(criterion, checks):
    ok = all(passed for _, passed in checks)
    print(f"\n[ACCEPTANCE {criterion}] {'PASS' if ok else 'FAIL'}")
    for name, passed in checks:
        print(f"    {'pass' if passed else 'FAIL'}  {name}")
    assert ok, f"criterion {criterion}: " + "; ".join(
        name for name, passed in checks if not passed)


# ---------------------------------------------------------------------------
# 1. Unitarity & decomposition suite
# ---------------------------------------------------------------------------

def test_criterion_1_unitarity_and_decomposition():
    t_start = time.monotonic()
    rng = np.random.default_rng(20260823)
    worst = {"TR": 0.0, "sum": 0.0, "sq": 0.0, "mod": 0.0, "field": 0.0}
    for i in range(1000):
        a = rng.uniform(0.3, 3.0)
        if i % 2 == 0:
            bar = make_rectangular(a, a + rng.uniform(0.3, 4.0),
                                   rng.uniform(-1.0, 3.0))
        else:
            half = [(rng.uniform(0.2, 1.0), rng.uniform(-1.0, 3.0))
                    for _ in range(rng.integers(1, 4))]
            mid = [(rng.uniform(0.2, 1.5), rng.uniform(-1.0, 3.0))]
            bar = make_piecewise(a, half + mid + half[::-1])
        k = rng.uniform(0.2, 2.5)
        basis = solve_basis(bar, k, NAT)
        amp = amplitudes_from_basis(basis, bar)
        worst["TR"] = max(worst["TR"], abs(amp.T + amp.R - 1.0))
        worst["sum"] = max(worst["sum"],
                           abs(amp.A_tr_in + amp.A_ref_in - 1.0))
        worst["sq"] = max(worst["sq"], abs(abs(amp.A_tr_in) ** 2
                                           + abs(amp.A_ref_in) ** 2 - 1.0))
        worst["mod"] = max(worst["mod"], abs(abs(amp.a_tr) - abs(amp.a_full)))
        tri = stationary_triple(amp, basis, bar)
        x = np.linspace(bar.a - 1.0, bar.b + 1.0, 64)
        worst["field"] = max(worst["field"], float(np.max(np.abs(
            tri.psi_tr(x) + tri.psi_ref(x) - tri.psi_full(x)))))
    elapsed = time.monotonic() - t_start
    report(1, [
        (f"T + R = 1 to 1e-10 (max dev {worst['TR']:.2e})",
         worst["TR"] < 1e-10),
        (f"A_tr_in + A_ref_in = 1 to 1e-10 (max dev {worst['sum']:.2e})",
         worst["sum"] < 1e-10),
        (f"|A_tr_in|^2 + |A_ref_in|^2 = 1 to 1e-10 (max dev {worst['sq']:.2e})",
         worst["sq"] < 1e-10),
        (f"|a_tr| = |a_full| to 1e-10 (max dev {worst['mod']:.2e})",
         worst["mod"] < 1e-10),
        (f"field sum identity to 1e-10 (max dev {worst['field']:.2e})",
         worst["field"] < 1e-10),
        (f"runtime {elapsed:.1f}s < 60s", elapsed < 60.0),
    ])


# ---------------------------------------------------------------------------
# 2. Oracle equivalence
# ---------------------------------------------------------------------------

def _closed_amps(a, v0, d, k):
    bar = make_rectangular(a, a + d, v0)
    g = rectangular_amplitudes(bar, np.asarray([k]), NAT)
    return complex(g["a_out"][0]), complex(g["b_out"][0])


def _tm_amps(a, v0, d, k):
    return transfer_matrix_oracle(make_rectangular(a, a + d, v0), k, NAT)


def _ode_amps(a, v0, d, k):
    bar = make_rectangular(a, a + d, v0)
    amp = amplitudes_from_basis(solve_basis(bar, k, NAT, method="ode"), bar)
    return amp.a_out, amp.b_out


def _fd_quantities(amps, v0, d, k):
    """T, arg(a_out), d_gr, tau0, tau_end from amplitudes only.

    Phase derivatives use central differences with one Richardson step; the
    two clock readings come from the height derivative of the in/out
    transmission coefficients.
    """
    hbar = NAT.hbar
    a0, b0 = amps(v0, k)
    T = abs(a0) ** 2

    def dphase(f, x0, h):
        def quot(step):
            return np.angle(f(x0 + step) * np.conj(f(x0 - step))) / (2 * step)
        return (4 * quot(h / 2) - quot(h)) / 3

    def dcomplex(f, x0, h):
        def quot(step):
            return (f(x0 + step) - f(x0 - step)) / (2 * step)
        return (4 * quot(h / 2) - quot(h)) / 3

    h_k = 1e-3 * k
    Jp = dphase(lambda kk: amps(v0, kk)[0], k, h_k)
    lam_p = dphase(lambda kk: (lambda ab: np.conj(ab[1]) * (ab[0] + ab[1]))(
        amps(v0, kk)), k, h_k)

    def f_in(v):
        ao, bo = amps(v, k)
        return ao * (np.conj(ao) - np.conj(bo))

    def f_out(v):
        return amps(v, k)[0] * np.exp(-1j * k * d)

    h_v = 1e-4 * abs(v0)
    tin = (hbar / 2) * dcomplex(f_in, v0, h_v)
    tout = (hbar / 2) * dcomplex(f_out, v0, h_v)
    return {
        "T": T,
        "J": float(np.angle(a0)),
        "d_gr": float(Jp - lam_p),
        "tau0": float(2 * np.imag(np.conj(tin) * f_in(v0)) / T),
        "tau_end": float(2 * np.imag(np.conj(tout) * f_out(v0)) / T),
    }


def _ode_dwell(a, v0, d, k):
    bar = make_rectangular(a, a + d, v0)
    basis = solve_basis(bar, k, NAT, method="ode")
    amp = amplitudes_from_basis(basis, bar)
    tri = stationary_triple(amp, basis, bar)
    base, wts = leggauss(48)

    def integral(lo, hi):
        half = 0.5 * (hi - lo)
        xs = 0.5 * (lo + hi) + half * base
        return half * float(np.sum(wts * np.abs(tri.psi_tr(xs)) ** 2))

    current = amp.T * NAT.velocity(k)
    return (integral(bar.a, bar.x_c) + integral(bar.x_c, bar.b)) / current


def _tm_dwell(a, v0, d, k):
    bar = make_rectangular(a, a + d, v0)
    a_out, _ = transfer_matrix_oracle(bar, k, NAT)
    T = abs(a_out) ** 2
    base, wts = leggauss(48)
    half = 0.5 * (bar.b - bar.x_c)
    xs = 0.5 * (bar.x_c + bar.b) + half * base
    L = bar.b - xs
    w = (v0 - NAT.energy(k)) / NAT.kinetic
    y = w * L * L
    # full state on the outer half, back-propagated from psi(b) = a_out
    psi = a_out * (cfun(y) - 1j * k * L * gfun(y))
    outer = half * float(np.sum(wts * np.abs(psi) ** 2))
    return 2.0 * outer / (T * NAT.velocity(k))


def test_criterion_2_oracle_equivalence():
    t_start = time.monotonic()
    a = 1.0
    v0s = [0.3, 1.0, 2.5, 5.0]
    ds = [0.3, 0.7, 1.2, 2.0, 3.0]
    ratios = [0.2, 0.3, 0.6, 0.9, 0.999, 1.001, 1.1, 1.5, 2.5, 3.0]
    worst = {name: 0.0 for name in
             ("T", "J", "d_gr", "tau_dwell", "tau0", "tau_end")}
    n_points = 0
    for v0 in v0s:
        for d in ds:
            for r in ratios:
                k = NAT.wavenumber(r * v0)
                n_points += 1
                rec = rectangular_oracle(make_rectangular(a, a + d, v0), k,
                                         NAT)
                results = {}
                for name, fn in (("closed", _closed_amps), ("tm", _tm_amps),
                                 ("ode", _ode_amps)):
                    results[name] = _fd_quantities(
                        lambda vv, kk, fn=fn: fn(a, vv, d, kk), v0, d, k)
                results["closed"]["tau_dwell"] = rec.tau_dwell
                results["tm"]["tau_dwell"] = _tm_dwell(a, v0, d, k)
                results["ode"]["tau_dwell"] = _ode_dwell(a, v0, d, k)
                # reference scales guard the relative measure near zeros
                ref = {"T": rec.T, "J": rec.J, "d_gr": rec.d_gr,
                       "tau_dwell": rec.tau_dwell, "tau0": rec.tau0,
                       "tau_end": rec.tau_end}
                scale = {"T": rec.T, "J": max(abs(rec.J), 1.0),
                         "d_gr": max(abs(rec.d_gr), 1e-3 * d),
                         "tau_dwell": rec.tau_dwell,
                         "tau0": max(abs(rec.tau0), 1e-3 * rec.tau_dwell),
                         "tau_end": max(abs(rec.tau_end),
                                        1e-3 * rec.tau_dwell)}
                for q in worst:
                    vals = [results[p][q] for p in ("closed", "tm", "ode")]
                    vals.append(ref[q])
                    dev = (max(vals) - min(vals)) / scale[q]
                    worst[q] = max(worst[q], dev)
    elapsed = time.monotonic() - t_start
    checks = [(f"{q}: max pipeline spread {worst[q]:.2e} < 1e-8 "
               f"({n_points} lattice points)", worst[q] < 1e-8)
              for q in worst]
    checks.append((f"runtime {elapsed:.1f}s < 60s", elapsed < 60.0))
    report(2, checks)


# ---------------------------------------------------------------------------
# 3. Analytic test point
# ---------------------------------------------------------------------------

def test_criterion_3_analytic_point():
    bar = make_rectangular(1.0, 3.0, 1.0)
    k = 1.0
    s2, c2, t2 = np.sinh(2.0), np.cosh(2.0), np.tanh(2.0)
    targets = {"T": 1 / c2**2, "tau_dwell": s2, "tau_end": t2,
               "tau0": 2 / c2, "d_gr": (2 * s2 - 2) / c2,
               "tau_int": t2 - 2 / c2 - s2}
    amp = amplitudes_from_basis(solve_basis(bar, k, NAT, method="ode"), bar)
    per = clock_times_per_k(bar, np.array([k]), NAT)
    got = {"T": amp.T,
           "tau_dwell": dwell_time(bar, k, NAT).tau_dwell,
           "tau_end": float(per["tau_end"][0]),
           "tau0": float(per["tau0"][0]),
           "d_gr": _fd_quantities(lambda vv, kk: _ode_amps(1.0, vv, 2.0, kk),
                                  1.0, 2.0, k)["d_gr"],
           "tau_int": float(per["tau_int"][0])}
    checks = []
    for name, want in targets.items():
        rel = abs(got[name] - want) / abs(want)
        checks.append((f"{name} = {got[name]:.8f} vs {want:.8f} "
                       f"(rel {rel:.2e} < 1e-6)", rel < 1e-6))
    report(3, checks)


# ---------------------------------------------------------------------------
# 4. Transmitted-packet trace reproduction
# ---------------------------------------------------------------------------

def _fig1_packet():
    p = build_profile(GAAS.wavenumber(E0), 10.0, 2048, 4.0)
    return PacketSet(FIG1_BARRIER, p, GAAS)


def test_criterion_4_packet_trace():
    t_start = time.monotonic()
    pset = _fig1_packet()
    times = np.linspace(0.0, 1.2, 241)
    rep = group_time_report(pset, times)
    tr = pset.expectation_series("tr", times, with_momentum=False)
    free = pset.expectation_series("free", times, with_momentum=False)
    ahead = bool(tr.x_mean[-1] > free.x_mean[-1])
    elapsed = time.monotonic() - t_start
    report(4, [
        (f"tau_free = {rep.tau_free:.5f} ps within +-15% of 0.025 ps",
         abs(rep.tau_free - 0.025) <= 0.15 * 0.025),
        (f"tau_as = {rep.tau_as:.5f} ps within +-25% of 0.01 ps",
         abs(rep.tau_as - 0.01) <= 0.25 * 0.01),
        (f"tau_exact = {rep.tau_exact:.5f} ps within +-15% of 0.155 ps",
         abs(rep.tau_exact - 0.155) <= 0.15 * 0.155),
        (f"transmitted CM ahead of free at t = {times[-1]} ps "
         f"({tr.x_mean[-1]:.1f} vs {free.x_mean[-1]:.1f} nm)", ahead),
        (f"runtime {elapsed:.1f}s < 300s", elapsed < 300.0),
    ])


# ---------------------------------------------------------------------------
# 5. Transmitted-norm transient deviation
# ---------------------------------------------------------------------------

def test_criterion_5_norm_deviation():
    pset = _fig1_packet()
    _, T, R = pset.packet_norm_series(np.linspace(0.0, 1.2, 61))
    Tbar = pset.transmitted_norm()
    wide_dev = float(np.max(np.abs(T - (1.0 - R))))
    narrow_p = build_profile(GAAS.wavenumber(E0), 200.0, 256, 8.0)
    narrow = PacketSet(FIG1_BARRIER, narrow_p, GAAS,
                       domain=(-2600.0, 3000.0))
    _, Tn, Rn = narrow.packet_norm_series(np.linspace(-1.5, 2.0, 29))
    nTbar = narrow.transmitted_norm()
    narrow_dev = float(np.max(np.abs(Tn - (1.0 - Rn))))
    report(5, [
        (f"wide packet max|T(t)-(1-R)| = {wide_dev:.3e} "
         f"<= 0.05*Tbar = {0.05 * Tbar:.3e} "
         f"(ratio {wide_dev / Tbar:.2f})", wide_dev <= 0.05 * Tbar),
        (f"narrow packet max|T(t)-(1-R)| = {narrow_dev:.3e} "
         f"<= 1e-3*Tbar = {1e-3 * nTbar:.3e} "
         f"(ratio {narrow_dev / nTbar:.2f})", narrow_dev <= 1e-3 * nTbar),
    ])


# ---------------------------------------------------------------------------
# 6. Width-saturation behaviour of the clock times
# ---------------------------------------------------------------------------

def test_criterion_6_width_saturation():
    t_start = time.monotonic()
    sweep = hartman_sweep(1.0, 1.0, 1.0, np.linspace(3.0, 12.0, 10), NAT)
    lim = sweep.tau_end_limit
    sat = max(abs(sweep.tau_end[-1] - lim), abs(sweep.tau_end[-2] - lim)) / lim
    slope = float(np.polyfit(sweep.d[-5:], np.log(sweep.tau_dwell[-5:]), 1)[0])
    kappa_b = 1.0
    ratio = float(-sweep.tau_int[-1] / sweep.tau_dwell[-1])
    elapsed = time.monotonic() - t_start
    report(6, [
        (f"tau_end saturation: final two within {sat:.2e} of "
         f"2mk/(hbar kb k0^2) = {lim:.6f} (< 0.1%)", sat < 1e-3),
        (f"log tau_dwell slope = {slope:.5f} vs kappa_b = {kappa_b} "
         "(within 1%)", abs(slope - kappa_b) < 0.01 * kappa_b),
        ("tau_int < 0 throughout", bool(np.all(sweep.tau_int < 0.0))),
        (f"|tau_int|/tau_dwell at d = {sweep.d[-1]}: {ratio:.5f} in "
         "[0.5, 1.0]", 0.5 <= ratio <= 1.0),
        (f"runtime {elapsed:.1f}s < 60s", elapsed < 60.0),
    ])


# ---------------------------------------------------------------------------
# 7. Clock-reading identity and spin precession
# ---------------------------------------------------------------------------

def test_criterion_7_precession_clock():
    t_start = time.monotonic()
    p = build_profile(GAAS.wavenumber(E0), 200.0, 256, 8.0)
    lt = larmor_times(p, FIG1_BARRIER, GAAS)
    scale = max(abs(lt.tau_L), abs(lt.tau_end))
    resid = abs(lt.identity_residual)
    omega = 1e-5 * FIG1_BARRIER.v0 / GAAS.hbar
    reading = precession_time_extrapolated(FIG1_BARRIER, p, GAAS, omega)
    target = lt.tau_L + lt.tau_int
    rich_rel = abs(reading - target) / abs(target)
    omega_sim = 5e-7 * FIG1_BARRIER.v0 / GAAS.hbar
    series = spinor_simulation(FIG1_BARRIER, p, GAAS, omega_sim,
                               np.linspace(-1.0, 2.0, 13))
    theta_spread = float(np.max(series.theta) - np.min(series.theta))
    sz_formula = (series.T_up - series.T_down) / (series.T_up + series.T_down)
    sz_dev = abs(series.Sz[-1] / (0.5 * GAAS.hbar) - sz_formula)
    elapsed = time.monotonic() - t_start
    report(7, [
        (f"identity residual {resid:.2e} <= 1e-4*max(tau_dwell, tau_end) "
         f"= {1e-4 * scale:.2e} ps", resid <= 1e-4 * scale),
        (f"Richardson precession reading {reading:.8f} vs tau_L + tau_int "
         f"= {target:.8f} ps (rel {rich_rel:.2e} < 1e-3)", rich_rel < 1e-3),
        (f"theta(t) spread {theta_spread:.2e} < 1e-6", theta_spread < 1e-6),
        (f"Sz asymmetry formula deviation {sz_dev:.2e} < 1e-8",
         sz_dev < 1e-8),
        (f"runtime {elapsed:.1f}s < 300s", elapsed < 300.0),
    ])


# ---------------------------------------------------------------------------
# 8. Momentum balance of the component fields
# ---------------------------------------------------------------------------

def test_criterion_8_momentum_balance():
    times = [0.2, 0.35, 0.45, 0.55, 0.7]

    def boundary_scan(l0, domain):
        p = build_profile(GAAS.wavenumber(E0), l0, 256, 8.0)
        pset = PacketSet(FIG1_BARRIER, p, GAAS, domain=domain)
        tr = [pset.ehrenfest_balance("tr", t) for t in times]
        ref = [pset.ehrenfest_balance("ref", t) for t in times]
        return tr, ref

    tr200, ref200 = boundary_scan(200.0, (-2600.0, 3000.0))
    tr400, _ = boundary_scan(400.0, (-3600.0, 4000.0))
    peak_force = max(abs(b.force_term) for b in tr200)
    resid = max(abs(b.residual) for b in tr200)
    ref_boundary_max = max(b.boundary_term for b in ref200)
    b200 = max(abs(b.boundary_term) for b in tr200)
    b400 = max(abs(b.boundary_term) for b in tr400)
    ratio = b400 / b200
    report(8, [
        (f"transmitted balance residual {resid:.2e} < 1e-3 * peak force "
         f"{peak_force:.2e}", resid < 1e-3 * peak_force),
        (f"reflected boundary term <= 0 at all sampled t "
         f"(max {ref_boundary_max:.2e})", ref_boundary_max <= 0.0),
        (f"transmitted boundary term shrinks with packet width: "
         f"{b400:.2e} / {b200:.2e} = {ratio:.3f} < 0.5", ratio < 0.5),
    ])


# ---------------------------------------------------------------------------
# 9. Determinism of every preset
# ---------------------------------------------------------------------------

def test_criterion_9_preset_determinism(tmp_path, capsys):
    checks = []
    for name in ("fig1", "e-half-v0", "free"):
        cfg_path = tmp_path / f"{name}.json"
        cfg_path.write_text(json.dumps(preset(name)))
        verb = preset(name)["experiment"]
        outs = []
        for run_id in (1, 2):
            out = tmp_path / f"{name}-{run_id}"
            rc = cli_main([verb, "--config", str(cfg_path), "--out", str(out)])
            assert rc == 0
            outs.append(out)
        capsys.readouterr()
        csvs = sorted(f.name for f in outs[0].glob("*.csv"))
        identical = bool(csvs) and all(
            (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
            for f in csvs)
        checks.append((f"preset {name}: byte-identical {csvs}", identical))
    report(9, checks)
