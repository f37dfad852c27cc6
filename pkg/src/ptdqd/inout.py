"""Steady-state transmission, photon numbers and loss-induced lasing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import lindblad_source, lindblad_stationary, noise_correlation_eigenbasis, noise_correlation_quadrature, MethodError
from .hamiltonian import I2, PreconditionError, build_heff, build_heff_lindblad, eig2
from .ness import DqdSteadyState, kernel_spec
from .params import SetupParams


def _require_dissipative(H):
    ev = np.linalg.eigvals(H)
    if np.max(ev.imag) >= 0:
        raise PreconditionError(
            "H_eff has an eigenvalue with Im >= 0; no steady state exists "
            "(check kappa2_thresholds for the lasing boundary)")
    return ev


@dataclass(frozen=True)
class TransmissionPoint:
    omega_d: float
    t1: complex
    t2: complex

    @property
    def amp1(self):
        return abs(self.t1)

    @property
    def amp2(self):
        return abs(self.t2)

    @property
    def phase1(self):
        return _phase(self.t1)

    @property
    def phase2(self):
        return _phase(self.t2)


def _phase(z):
    """arg z in (-pi, pi]."""
    a = math.atan2(z.imag, z.real)
    return math.pi if a == -math.pi else a


def folded_phase(z):
    """arctan(Im z / Re z) in [-pi/2, pi/2], the convention used for phase plots."""
    return math.atan(z.imag / z.real) if z.real != 0 else math.copysign(math.pi / 2, z.imag)


def transmission(p: SetupParams, ss: DqdSteadyState, omega_d, H=None) -> TransmissionPoint:
    """Long-time response of both cavities to a drive on cavity 2, scaled by the total losses."""
    H = build_heff(p, ss) if H is None else H
    _require_dissipative(H)
    x = np.linalg.solve(H - omega_d * I2, np.array([0, 1], dtype=complex))
    k1 = p.kappa1 + p.kappa_extra
    k2 = p.kappa2 + p.kappa_extra
    return TransmissionPoint(float(omega_d), complex(k1 * x[0]), complex(k2 * x[1]))


def closed_form_transmission(p: SetupParams, ss: DqdSteadyState, omega_d):
    """Scalar closed forms of (T1, T2) used to cross-check the matrix inverse."""
    d = ss.delta
    K1, K2 = p.kappa1 + p.kappa_extra, p.kappa2 + p.kappa_extra
    k1eff = 2 * p.Gamma * d - K1
    kap = 0.5 * (K2 - k1eff)  # net loss
    kt = 0.5 * (K2 + k1eff)
    s2 = p.lam**2 * (1 - d) - kt**2 / 4
    x = p.omega0 - omega_d
    X = x * x - kap**2 / 4 - s2
    D = X - 1j * kap * x
    t1 = -K1 * p.lam * (1 - d) / D
    t2 = K2 * (x + 0.5j * k1eff) / D
    amp1 = K1 * p.lam * (1 - d) / math.sqrt(X * X + kap**2 * x * x)
    amp2 = K2 * math.sqrt(x * x + k1eff**2 / 4) / math.sqrt(X * X + kap**2 * x * x)
    # tangent of the response phases (arguments of t1, t2)
    tan1 = kap * x / X if X != 0 else math.inf
    num2 = k1eff * X + 2 * kap * x * x
    den2 = 2 * x * (X - k1eff * kap / 2)
    tan2 = num2 / den2 if den2 != 0 else math.inf
    return dict(t1=t1, t2=t2, amp1=amp1, amp2=amp2, tan1=tan1, tan2=tan2)


def sweep_transmission(p: SetupParams, ss: DqdSteadyState, axis, grid, omega_d_grid):
    """Rows of (axis value, omega_d, amp2, phase2, phase2 unwrapped, Re L+, Re L-, error)."""
    if axis not in ("lambda", "kappa2"):
        raise ValueError("axis must be 'lambda' or 'kappa2'")
    key = "lam" if axis == "lambda" else "kappa2"
    rows = []
    for v in grid:
        q = p.with_(**{key: float(v)})
        H = build_heff(q, ss)
        info = eig2(H)
        block = []
        for w in omega_d_grid:
            try:
                tp = transmission(q, ss, w, H)
                block.append([float(v), float(w), tp.amp2, tp.phase2, tp.t2, info.lam_plus.real, info.lam_minus.real, ""])
            except (PreconditionError, np.linalg.LinAlgError) as e:
                block.append([float(v), float(w), math.nan, math.nan, complex(math.nan), info.lam_plus.real, info.lam_minus.real, str(e)])
        ph = np.array([r[3] for r in block])
        ok = np.isfinite(ph)
        unw = np.full_like(ph, math.nan)
        if ok.any():
            unw[ok] = np.unwrap(ph[ok])
        for r, u in zip(block, unw):
            rows.append(dict(axis=r[0], omega_d=r[1], amp2=r[2], phase2=r[3], phase2_unwrapped=float(u),
                             t2=r[4], re_lp=r[5], re_lm=r[6], error=r[7]))
    return rows


def local_maxima(x, y):
    y = np.asarray(y)
    idx = [i for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] >= y[i + 1]]
    return np.asarray(x)[idx]


def peak_report(p: SetupParams, ss: DqdSteadyState, omega_d_grid):
    """Candidate peak locations for one coupling: |T2| maxima, |det| minima and eigenvalue-based guesses."""
    H = build_heff(p, ss)
    w = np.asarray(omega_d_grid)
    amp2 = np.array([transmission(p, ss, x, H).amp2 for x in w])
    det = np.abs([np.linalg.det(H - x * I2) for x in w])
    info = eig2(H)
    split = info.lam_plus - info.lam_minus
    return dict(
        amp2_peaks=local_maxima(w, amp2),
        det_minima=local_maxima(w, -det),
        re_lambda=np.array(sorted([info.lam_minus.real, info.lam_plus.real])),
        text_candidate=np.array(sorted([p.omega0 - split.real, p.omega0 + split.real])),
    )


def phase_landmarks(p: SetupParams, ss: DqdSteadyState):
    """Drive frequencies where the folded phase of T2 jumps by pi or vanishes.

    'flip' entries do not depend on kappa2; 'zero' entries do.
    """
    k1eff = 2 * p.Gamma * ss.delta - p.kappa1 - p.kappa_extra
    if k1eff <= 0:
        raise PreconditionError("landmarks are defined for net gain in cavity 1 (2 Gamma delta > kappa1)")
    out = [("flip", p.omega0)]
    a = p.lam**2 * (1 - ss.delta) - k1eff**2 / 4
    if a > 0:
        out += [("flip", p.omega0 - math.sqrt(a)), ("flip", p.omega0 + math.sqrt(a))]
    K2 = p.kappa2 + p.kappa_extra
    kap = 0.5 * (K2 - k1eff)
    kt = 0.5 * (K2 + k1eff)
    s2 = p.lam**2 * (1 - ss.delta) - kt**2 / 4
    den = k1eff + 2 * kap
    if den != 0:
        z = k1eff * (kap**2 / 4 + s2) / den
        if z > 0:
            out += [("zero", p.omega0 - math.sqrt(z)), ("zero", p.omega0 + math.sqrt(z))]
    return sorted(out, key=lambda r: r[1])


def sign_changes(x, y):
    """Linear-interpolated zeros of y(x) between samples of opposite sign."""
    x, y = np.asarray(x), np.asarray(y)
    i = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    return x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i])


# ---------------------------------------------------------------- steady photons

@dataclass(frozen=True)
class SteadyPhotons:
    n1: float
    n2: float
    current: float
    corr: np.ndarray


def steady_state_photons(p: SetupParams, ss: DqdSteadyState, model="eom", t_factor=20.0) -> SteadyPhotons:
    if model == "eom":
        H = build_heff(p, ss)
        ev = _require_dissipative(H)
        t = t_factor / np.min(np.abs(ev.imag))
        spec = kernel_spec(p, ss)
        try:
            C = noise_correlation_eigenbasis(H, spec, t)
        except MethodError:
            C = noise_correlation_quadrature(H, spec, t)
    elif model in ("lindblad_micro", "lindblad_phen"):
        H = build_heff_lindblad(p, ss)
        _require_dissipative(H)
        S = lindblad_source(p, ss, "microscopic" if model == "lindblad_micro" else "phenomenological")
        C = lindblad_stationary(H, S)
    else:
        raise ValueError(f"unknown model {model!r}")
    C = 0.5 * (C + C.conj().T)
    return SteadyPhotons(float(C[0, 0].real), float(C[1, 1].real), float(p.lam * C[1, 0].imag), C)


def max_imag_eig(p: SetupParams, ss: DqdSteadyState):
    return float(np.max(np.linalg.eigvals(build_heff(p, ss)).imag))


def scan_threshold(p: SetupParams, ss: DqdSteadyState, k_lo, k_hi, n=400):
    """kappa2 where max Im(eigenvalue) crosses zero, located by scan plus bisection."""
    from scipy.optimize import brentq

    ks = np.linspace(k_lo, k_hi, n)
    f = [max_imag_eig(p.with_(kappa2=k), ss) for k in ks]
    for i in range(n - 1):
        if f[i] < 0 <= f[i + 1] or f[i] >= 0 > f[i + 1]:
            return brentq(lambda k: max_imag_eig(p.with_(kappa2=k), ss), ks[i], ks[i + 1], xtol=1e-14)
    return None
