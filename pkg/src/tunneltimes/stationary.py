"""Stationary scattering at fixed wavenumber k.

Builds the real odd/even basis (u, v) on the barrier interval, the scattering
amplitudes, and the three stationary wavefunctions: the full scattering state
``psi_full`` plus its unique split into a transmission component ``psi_tr``
and a reflection component ``psi_ref`` that vanishes identically beyond the
barrier centre ``x_c``.  Also provides two independent verification paths for
rectangular/piecewise barriers: closed-form expressions and a transfer-matrix
product.

Conventions: incident wave ``exp(ikx)``, reflected wave ``b_out *
exp(ik(2a - x))``, transmitted wave ``a_out * exp(ik(x - d))``.  The basis is
normalized so u'(x_c) = v(x_c) = 1, making the Wronskian u'v - v'u equal 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp

from .potential import Barrier
from .units import UnitSystem

# Above this value of sqrt(w) * d the hyperbolic closed forms are evaluated in
# log space (dropped terms are below 1e-34 relative).
_LOG_BRANCH_SQRT_Y = 40.0

__all__ = [
    "StationaryBasis", "ScatteringAmplitudes", "StationaryTriple",
    "OracleRecord", "solve_basis", "amplitudes_from_basis",
    "stationary_triple", "rectangular_oracle", "transfer_matrix_oracle",
    "rectangular_amplitudes",
]


# ---------------------------------------------------------------------------
# Scaled hyperbolic/trigonometric helpers, uniform across the turning point.
# With y = w s^2 (w = 2m(V - E)/hbar^2, either sign) the odd/even basis for a
# constant potential is u(s) = s*G(y), u'(s) = C(y), v(s) = C(y),
# v'(s) = w*s*G(y); the small-|y| series keeps everything smooth at E = V.
# ---------------------------------------------------------------------------

def gfun(y: ArrayLike) -> NDArray[np.float64]:
    """sinh(sqrt(y))/sqrt(y), continued through y <= 0."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < 1e-6
    yp = (y > 0) & ~small
    yn = (y < 0) & ~small
    ryp = np.sqrt(y[yp])
    ryn = np.sqrt(-y[yn])
    out[yp] = np.sinh(ryp) / ryp
    out[yn] = np.sin(ryn) / ryn
    ys = y[small]
    out[small] = 1.0 + ys / 6.0 + ys * ys / 120.0
    return out


def cfun(y: ArrayLike) -> NDArray[np.float64]:
    """cosh(sqrt(y)), continued through y <= 0."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    yp = y >= 0
    out[yp] = np.cosh(np.sqrt(y[yp]))
    out[~yp] = np.cos(np.sqrt(-y[~yp]))
    return out


def hfun(y: ArrayLike) -> NDArray[np.float64]:
    """6 (G(y) - 1) / y with its small-y series."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-4
    out = np.empty_like(y)
    out[~small] = 6.0 * (gfun(y[~small]) - 1.0) / y[~small]
    ys = y[small]
    out[small] = 1.0 + ys / 20.0 + ys * ys / 840.0
    return out


def qfun(y: ArrayLike) -> NDArray[np.float64]:
    """(C(y) - G(y)) / y with its small-y series."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-4
    out = np.empty_like(y)
    out[~small] = (cfun(y[~small]) - gfun(y[~small])) / y[~small]
    ys = y[small]
    out[small] = 1.0 / 3.0 + ys / 30.0 + ys * ys / 840.0
    return out


# ---------------------------------------------------------------------------
# Basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StationaryBasis:
    """Odd/even real solutions u, v at wavenumber k.

    ``u_fn``/``v_fn`` evaluate (value, derivative) anywhere in
    [x_c - d/2, x_c + d/2] as functions of the offset s = x - x_c, using the
    parities u(-s) = -u(s), v(-s) = v(s).
    """

    k: float
    u_b: float
    up_b: float
    v_b: float
    vp_b: float
    wronskian_kappa: float
    Q: complex
    P: complex
    u_fn: Callable[[NDArray[np.float64]],
                   tuple[NDArray[np.float64], NDArray[np.float64]]]
    v_fn: Callable[[NDArray[np.float64]],
                   tuple[NDArray[np.float64], NDArray[np.float64]]]


def _basis_from_halfline(k: float,
                         u_half: Callable, v_half: Callable,
                         D: float) -> StationaryBasis:
    """Wrap half-line evaluators (s >= 0) with the odd/even parities."""

    def u_fn(s: ArrayLike):
        s = np.asarray(s, dtype=float)
        val, der = u_half(np.abs(s))
        sign = np.sign(s)
        sign = np.where(sign == 0, 1.0, sign)
        return sign * val, der  # odd value, even derivative

    def v_fn(s: ArrayLike):
        s = np.asarray(s, dtype=float)
        val, der = v_half(np.abs(s))
        sign = np.sign(s)
        sign = np.where(sign == 0, 1.0, sign)
        return val, sign * der  # even value, odd derivative

    uD, upD = u_half(np.asarray([D]))
    vD, vpD = v_half(np.asarray([D]))
    u_b, up_b = float(uD[0]), float(upD[0])
    v_b, vp_b = float(vD[0]), float(vpD[0])
    kappa = up_b * v_b - vp_b * u_b
    Q = complex(up_b, k * u_b)
    P = complex(vp_b, k * v_b)
    return StationaryBasis(k=k, u_b=u_b, up_b=up_b, v_b=v_b, vp_b=vp_b,
                           wronskian_kappa=kappa, Q=Q, P=P,
                           u_fn=u_fn, v_fn=v_fn)


def _constant_halfline(w: float):
    """Analytic u, v on a half-interval of constant potential offset w."""

    def u_half(s):
        y = w * s * s
        return s * gfun(y), cfun(y)

    def v_half(s):
        y = w * s * s
        return cfun(y), w * s * gfun(y)

    return u_half, v_half


def _piecewise_halfline(barrier: Barrier, w_of_v: Callable[[float], float]):
    """Exact segment-by-segment propagation of (value, derivative).

    Returns half-line evaluators for u (psi(0)=0, psi'(0)=1) and v
    (psi(0)=1, psi'(0)=0) on [0, d/2], using the constant-potential
    fundamental pair on each segment.
    """
    # Segment edges measured from x_c on the right half of the barrier.
    edges = [0.0]
    heights = []
    x = barrier.a
    for width, height in barrier.segments:
        lo, hi = x - barrier.x_c, x + width - barrier.x_c
        x += width
        if hi <= 0:
            continue
        edges.append(min(hi, barrier.d / 2.0))
        heights.append(height)
    edges_arr = np.asarray(edges)

    def make(val0: float, der0: float):
        # Precompute (value, derivative) at each edge.
        vals = [complex(val0)]
        ders = [complex(der0)]
        for i, h in enumerate(heights):
            w = w_of_v(h)
            ds = edges_arr[i + 1] - edges_arr[i]
            y = w * ds * ds
            g, c = float(gfun(y)), float(cfun(y))
            vals.append(vals[i] * c + ders[i] * ds * g)
            ders.append(vals[i] * w * ds * g + ders[i] * c)
        vals_a = np.asarray(vals)
        ders_a = np.asarray(ders)

        def evaluate(s):
            s = np.asarray(s, dtype=float)
            idx = np.clip(np.searchsorted(edges_arr, s, side="right") - 1,
                          0, len(heights) - 1)
            w = np.asarray([w_of_v(heights[i]) for i in idx])
            ds = s - edges_arr[idx]
            y = w * ds * ds
            g, c = gfun(y), cfun(y)
            val = vals_a[idx] * c + ders_a[idx] * ds * g
            der = vals_a[idx] * w * ds * g + ders_a[idx] * c
            return val.real, der.real

        return evaluate

    return make(0.0, 1.0), make(1.0, 0.0)


def solve_basis(barrier: Barrier, k: float, units: UnitSystem,
                method: str = "auto",
                rtol: float = 1e-12, atol: float = 1e-13) -> StationaryBasis:
    """Build the odd/even basis at wavenumber ``k``.

    ``method="auto"`` uses exact constant-potential propagation for
    rectangular and piecewise barriers and an adaptive high-order
    Runge-Kutta integration (DOP853) for sampled ones; ``method="ode"``
    forces the integrator for any barrier kind (verification path).
    """
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got k={k}")
    E = units.energy(k)
    pref = 1.0 / units.kinetic  # 2m/hbar^2
    D = barrier.d / 2.0

    if method == "auto" and barrier.kind == "rectangular":
        w = pref * (barrier.v0 - E)
        u_half, v_half = _constant_halfline(w)
        return _basis_from_halfline(k, u_half, v_half, D)
    if method == "auto" and barrier.kind == "piecewise":
        u_half, v_half = _piecewise_halfline(
            barrier, lambda v: pref * (v - E))
        return _basis_from_halfline(k, u_half, v_half, D)
    if method not in ("auto", "ode"):
        raise ValueError(f"unknown method {method!r}")

    xc = barrier.x_c

    def rhs(x, y):
        w = pref * (barrier.V(np.asarray([x]))[0] - E)
        return [y[1], w * y[0], y[3], w * y[2]]

    sol = solve_ivp(rhs, (xc, barrier.b), [0.0, 1.0, 1.0, 0.0],
                    method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"stationary integration failed: {sol.message}")

    def u_half(s):
        ys = sol.sol(xc + np.asarray(s, dtype=float))
        return ys[0], ys[1]

    def v_half(s):
        ys = sol.sol(xc + np.asarray(s, dtype=float))
        return ys[2], ys[3]

    return _basis_from_halfline(k, u_half, v_half, D)


# ---------------------------------------------------------------------------
# Amplitudes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScatteringAmplitudes:
    """All complex amplitudes of the scattering state and its two components."""

    k: float
    a_out: complex
    b_out: complex
    a_full: complex
    b_full: complex
    A_tr_in: complex
    A_ref_in: complex
    a_tr: complex
    T: float
    R: float
    lam: float   # arg(A_ref_in)
    J: float     # arg(a_out)


def amplitudes_from_basis(basis: StationaryBasis,
                          barrier: Barrier) -> ScatteringAmplitudes:
    """Scattering amplitudes from the boundary data Q, P.

    The in-barrier coefficients each have two equivalent expressions; both are
    evaluated and a mismatch above 1e-9 raises, catching basis defects early.
    """
    Q, P = basis.Q, basis.P
    if abs(Q) < 1e-300 or abs(P) < 1e-300:
        raise ArithmeticError("degenerate basis: |Q| or |P| underflow")
    kappa = basis.wronskian_kappa
    k = basis.k
    a_out = 0.5 * (Q / Q.conjugate() - P / P.conjugate())
    b_out = -0.5 * (Q / Q.conjugate() + P / P.conjugate())
    eika = np.exp(1j * k * barrier.a)
    a_full = (P + P.conjugate() * b_out) * eika / kappa
    a_full_alt = -P.conjugate() * a_out * eika / kappa
    b_full = (Q + Q.conjugate() * b_out) * eika / kappa
    b_full_alt = Q.conjugate() * a_out * eika / kappa
    scale = max(abs(a_full), abs(b_full), 1e-300)
    if abs(a_full - a_full_alt) > 1e-9 * scale or \
            abs(b_full - b_full_alt) > 1e-9 * scale:
        raise ArithmeticError(
            "inconsistent in-barrier coefficients; basis data is unreliable")
    A_ref = b_out.conjugate() * (b_out + a_out)
    A_tr = a_out * (a_out.conjugate() - b_out.conjugate())
    a_tr = P * A_tr * eika / kappa
    return ScatteringAmplitudes(
        k=k, a_out=complex(a_out), b_out=complex(b_out),
        a_full=complex(a_full), b_full=complex(b_full),
        A_tr_in=complex(A_tr), A_ref_in=complex(A_ref), a_tr=complex(a_tr),
        T=abs(a_out) ** 2, R=abs(b_out) ** 2,
        lam=float(np.angle(A_ref)), J=float(np.angle(a_out)))


def rectangular_amplitudes(barrier: Barrier, k: ArrayLike,
                           units: UnitSystem) -> dict[str, NDArray]:
    """Vectorized amplitude set for a rectangular barrier over a k-grid.

    Same formulas as :func:`amplitudes_from_basis` with the analytic basis,
    returned as arrays keyed like the dataclass fields (fast path for packet
    builds).
    """
    if barrier.kind != "rectangular":
        raise ValueError("rectangular_amplitudes needs a rectangular barrier")
    k = np.asarray(k, dtype=float)
    D = barrier.d / 2.0
    E = units.kinetic * k * k
    w = (barrier.v0 - E) / units.kinetic
    y = w * D * D
    g, c = gfun(y), cfun(y)
    u_b, up_b = D * g, c
    v_b, vp_b = c, w * D * g
    Q = up_b + 1j * k * u_b
    P = vp_b + 1j * k * v_b
    a_out = 0.5 * (Q / np.conj(Q) - P / np.conj(P))
    b_out = -0.5 * (Q / np.conj(Q) + P / np.conj(P))
    eika = np.exp(1j * k * barrier.a)
    a_full = (P + np.conj(P) * b_out) * eika
    b_full = (Q + np.conj(Q) * b_out) * eika
    A_ref = np.conj(b_out) * (b_out + a_out)
    A_tr = a_out * (np.conj(a_out) - np.conj(b_out))
    a_tr = P * A_tr * eika
    return {
        "k": k, "a_out": a_out, "b_out": b_out, "a_full": a_full,
        "b_full": b_full, "A_tr_in": A_tr, "A_ref_in": A_ref, "a_tr": a_tr,
        "T": np.abs(a_out) ** 2, "R": np.abs(b_out) ** 2,
        "lam": np.angle(A_ref), "J": np.angle(a_out),
    }


# ---------------------------------------------------------------------------
# The three stationary wavefunctions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StationaryTriple:
    """Piecewise evaluators for psi_full, psi_tr, psi_ref at one k.

    Each evaluator returns complex values over arbitrary positions; psi_ref
    is identically zero for x >= x_c and psi_tr coincides with psi_full
    there.  ``*_prime`` evaluators return the spatial derivative.
    """

    amplitudes: ScatteringAmplitudes
    psi_full: Callable[[ArrayLike], NDArray[np.complex128]]
    psi_tr: Callable[[ArrayLike], NDArray[np.complex128]]
    psi_ref: Callable[[ArrayLike], NDArray[np.complex128]]
    psi_full_prime: Callable[[ArrayLike], NDArray[np.complex128]]
    psi_tr_prime: Callable[[ArrayLike], NDArray[np.complex128]]
    psi_ref_prime: Callable[[ArrayLike], NDArray[np.complex128]]


def stationary_triple(amp: ScatteringAmplitudes, basis: StationaryBasis,
                      barrier: Barrier) -> StationaryTriple:
    """Assemble psi_full / psi_tr / psi_ref from amplitudes and basis."""
    a, b, xc, d = barrier.a, barrier.b, barrier.x_c, barrier.d
    k = amp.k
    kappa = basis.wronskian_kappa
    # Coefficient of u for the reflection component on [a, x_c].
    c_ref = (basis.P * amp.A_ref_in
             + basis.P.conjugate() * amp.b_out) * np.exp(1j * k * a) / kappa

    def regions(x):
        x = np.asarray(x, dtype=float)
        return (x, x < a, (x >= a) & (x < xc), (x >= xc) & (x <= b), x > b)

    def build(cu_left, cv_left, cu_right, cv_right, A_plane, B_plane,
              out_coef, deriv):
        """Evaluator from region coefficients.

        Left of the barrier the field is A_plane*e^{ikx} + B_plane*e^{ik(2a-x)};
        inside it is cu*u + cv*v with separate (cu, cv) left/right of x_c;
        beyond b it is out_coef*e^{ik(x-d)}.
        """

        def evaluate(x):
            x, left, lmid, rmid, right = regions(x)
            out = np.zeros(x.shape, dtype=complex)
            if np.any(left):
                xl = x[left]
                if deriv:
                    out[left] = (1j * k * A_plane * np.exp(1j * k * xl)
                                 - 1j * k * B_plane * np.exp(1j * k * (2 * a - xl)))
                else:
                    out[left] = (A_plane * np.exp(1j * k * xl)
                                 + B_plane * np.exp(1j * k * (2 * a - xl)))
            for mask, cu, cv in ((lmid, cu_left, cv_left),
                                 (rmid, cu_right, cv_right)):
                if np.any(mask):
                    s = x[mask] - xc
                    uval, uder = basis.u_fn(s)
                    vval, vder = basis.v_fn(s)
                    if deriv:
                        out[mask] = cu * uder + cv * vder
                    else:
                        out[mask] = cu * uval + cv * vval
            if np.any(right):
                phase = out_coef * np.exp(1j * k * (x[right] - d))
                out[right] = 1j * k * phase if deriv else phase
            return out

        return evaluate

    def make(deriv: bool):
        full = build(amp.a_full, amp.b_full, amp.a_full, amp.b_full,
                     1.0, amp.b_out, amp.a_out, deriv)
        tr = build(amp.a_tr, amp.b_full, amp.a_full, amp.b_full,
                   amp.A_tr_in, 0.0, amp.a_out, deriv)
        ref = build(c_ref, 0.0, 0.0, 0.0,
                    amp.A_ref_in, amp.b_out, 0.0, deriv)
        return full, tr, ref

    f, t, r = make(False)
    fp, tp, rp = make(True)
    return StationaryTriple(amplitudes=amp, psi_full=f, psi_tr=t, psi_ref=r,
                            psi_full_prime=fp, psi_tr_prime=tp,
                            psi_ref_prime=rp)


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleRecord:
    """Closed-form rectangular quantities at one wavenumber (times in the
    unit system's time unit, lengths in its length unit)."""

    k: float
    T: float
    J: float
    d_gr: float
    tau_dwell: float
    tau0: float
    tau_end: float
    tau_int: float


def rectangular_oracle(barrier: Barrier, k: float,
                       units: UnitSystem) -> OracleRecord:
    """Closed-form T, d_gr and characteristic times for a rectangular barrier.

    Valid on both sides of E = V0 (series limit at the top); switches to a
    log-space evaluation for very opaque barriers so intermediate hyperbolics
    cannot overflow.
    """
    if barrier.kind != "rectangular":
        raise ValueError("rectangular_oracle needs a rectangular barrier")
    kf = float(k)
    d = barrier.d
    E = units.energy(kf)
    w = (barrier.v0 - E) / units.kinetic       # kappa_b^2 (sign carries E > V0)
    k02 = barrier.v0 / units.kinetic           # kappa_0^2
    m, hbar = units.m, units.hbar
    y = w * d * d
    if y > _LOG_BRANCH_SQRT_Y**2:
        T, d_gr, tau_dwell, tau0, tau_end = _rect_closed_log(
            kf, d, w, k02, m, hbar, y)
    else:
        g, c = float(gfun(y)), float(cfun(y))
        Dp = 4 * kf**2 + k02**2 * d * d * g * g
        T = 4 * kf**2 / Dp
        tau_dwell = (m / (2 * hbar * kf)) * (2 * d + k02 * d**3 * float(hfun(y)) / 6)
        tau_end = (2 * m * kf * d / hbar) * (
            1 + float(gfun(4 * y)) + (2 * kf**2 * d**2 / 3) * float(hfun(4 * y))) / Dp
        tau0 = (2 * m * kf * d / hbar) * (
            g + c + kf**2 * d**2 * float(qfun(y))) / Dp
        d_gr = 4 * d * (kf**2 + k02 * (c - 1) / 2) * (
            g + kf**2 * d**2 * float(hfun(y)) / 6) / Dp
    amp = rectangular_amplitudes(barrier, np.asarray([kf]), units)
    return OracleRecord(k=kf, T=T, J=float(amp["J"][0]), d_gr=d_gr,
                        tau_dwell=tau_dwell, tau0=tau0, tau_end=tau_end,
                        tau_int=tau_end - tau0 - tau_dwell)


def _rect_closed_log(k, d, w, k02, m, hbar, y):
    """Opaque-barrier branch: all exponentially large factors in log space.

    Terms smaller than exp(-2 sqrt(y)) relative are dropped; at the branch
    threshold that is < 1e-34, below double precision.
    """
    ry = np.sqrt(y)
    logG = ry - np.log(2.0) - 0.5 * np.log(y)          # sinh(ry)/ry
    logC = ry - np.log(2.0)                            # cosh(ry)
    logG4 = 2 * ry - np.log(4.0 * ry)                  # sinh(2ry)/(2ry)
    logDp = np.logaddexp(np.log(4 * k**2), np.log(k02**2 * d * d) + 2 * logG)
    logT = np.log(4 * k**2) - logDp
    T = float(np.exp(logT)) if logT > -745 else 0.0
    # tau_dwell ~ (m / 2 hbar k) * (2d + k02 * d * (G - 1) / w)
    log_bulk = np.log(k02 * d / w) + logG
    tau_dwell = (m / (2 * hbar * k)) * (2 * d + float(np.exp(log_bulk)))
    # tau_end: numerator 1 + G(4y) + k^2 d^2 (G(4y) - 1)/y  ->  G(4y)(1 + k^2/w)
    logN_end = logG4 + np.log1p(k**2 / w)
    tau_end = (2 * m * k * d / hbar) * float(np.exp(logN_end - logDp))
    # tau0: numerator G + C + k^2 d^2 (C - G)/y; C - G = C(1 - 1/ry)
    logCmG = logC + np.log1p(-1.0 / ry)
    logN0 = np.logaddexp(np.logaddexp(logG, logC),
                         np.log(k**2 * d * d / y) + logCmG)
    tau0 = (2 * m * k * d / hbar) * float(np.exp(logN0 - logDp))
    # d_gr: 4 d (k^2 + k02 (C - 1)/2)(G + k^2 d^2 (G - 1)/(6y) * 6)/Dp
    logF1 = np.logaddexp(np.log(k**2), np.log(k02 / 2) + logC)
    logF2 = logG + np.log1p(k**2 / w)
    d_gr = 4 * d * float(np.exp(logF1 + logF2 - logDp))
    return T, d_gr, tau_dwell, tau0, tau_end


def transfer_matrix_oracle(barrier: Barrier, k: float,
                           units: UnitSystem) -> tuple[complex, complex]:
    """(a_out, b_out) by propagating (psi, psi') across constant segments.

    Independent of the odd/even basis construction; shares only the
    scaled fundamental-solution helpers.
    """
    if barrier.kind == "rectangular":
        segments = [(barrier.d, barrier.v0)]
    elif barrier.kind == "piecewise":
        segments = list(barrier.segments)
    else:
        raise ValueError("transfer_matrix_oracle needs a piecewise-constant barrier")
    kf = float(k)
    E = units.energy(kf)
    # Propagate the transmitted-side solution e^{ik(x-d)} backwards from b to a.
    psi = complex(1.0)          # transmitted wave scaled so psi(b) = 1
    dpsi = 1j * kf
    x = barrier.b
    for width, height in reversed(segments):
        w = (height - E) / units.kinetic
        y = w * width * width
        g, c = float(gfun(y)), float(cfun(y))
        # Backward step: fundamental matrix of the constant segment, s -> -s.
        psi, dpsi = (psi * c - dpsi * width * g,
                     -psi * w * width * g + dpsi * c)
        x -= width
    # At x = a the same scaled wave is inc*e^{ik(x-a)} + refl*e^{-ik(x-a)};
    # matching against the e^{ikx} + b_out e^{ik(2a-x)} + a_out e^{ik(x-d)}
    # convention gives a_out = 1/inc, b_out = refl/inc.
    inc = 0.5 * (psi + dpsi / (1j * kf))       # coefficient of e^{ik(x-a)}
    refl = 0.5 * (psi - dpsi / (1j * kf))      # coefficient of e^{-ik(x-a)}
    a_out = 1.0 / inc
    b_out = refl / inc
    return complex(a_out), complex(b_out)
