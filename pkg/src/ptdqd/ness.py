"""Redfield steady state of the voltage-biased double quantum dot.

The DQD is treated in the eigenmode basis (A_1 upper, A_2 lower) with
two fermionic leads and a phonon bath coupled to n_1 - n_2. The
generator is assembled from second-order bath half-transforms, then the
steady state is solved in the sector without double occupancy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.linalg import lapack

from .params import SetupParams, bose, ellipse_point, fermi, j_ph, phi_matrix, rotated_dqd


class NumericalError(RuntimeError):
    pass


# ---------------------------------------------------------------- integrals

def pv_integral(g, a, lo, hi, points=(), epsabs=1e-10, limit=400):
    """P int_lo^hi g(x)/(x-a) dx by subtracting g(a) at the pole."""
    ga = g(a)

    def h(x):
        d = x - a
        if abs(d) < 1e-9 * max(1.0, abs(a)):
            e = 1e-6 * max(1.0, abs(a))
            return (g(a + e) - g(a - e)) / (2 * e)
        return (g(x) - ga) / d

    brk = sorted({a, *[q for q in points if lo < q < hi]})
    brk = [q for q in brk if lo < q < hi]
    edges = [lo, *brk, hi]
    total, err = 0.0, 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(h, x0, x1, epsabs=epsabs, epsrel=1e-12, limit=limit)
        total += v
        err += e
    if err > 1e3 * epsabs:
        raise NumericalError(f"principal value did not converge (error estimate {err:.3g})")
    if lo < a < hi:
        total += ga * math.log((hi - a) / (a - lo))
    else:
        total += ga * math.log(abs((hi - a) / (lo - a)))
    return total


def pv_integral_cauchy(g, a, lo, hi, epsabs=1e-11):
    """Same integral through QUADPACK's Cauchy weight; used as a cross-check."""
    v, _ = integrate.quad(g, lo, hi, weight="cauchy", wvar=a, epsabs=epsabs, epsrel=1e-12, limit=800)
    return v


# ---------------------------------------------------------------- lead functions

def _key(x):
    return round(float(x), 11)


@lru_cache(maxsize=4096)
def _lead_fn(omega, mu, beta, Gamma, cut, lamb):
    """(F + i F^Delta, f + i f^Delta) for one flat-band lead at energy omega."""
    n = fermi(omega, mu, beta)
    F = 0.5 * Gamma * n
    f = 0.5 * Gamma
    if not lamb:
        return complex(F), complex(f)
    g = lambda x: 0.5 * Gamma * fermi(x, mu, beta)
    FD = pv_integral(g, omega, -cut, cut, points=(mu - 2 / beta, mu, mu + 2 / beta)) / math.pi
    fD = 0.5 * Gamma / math.pi * math.log((cut - omega) / (cut + omega))
    return complex(F, FD), complex(f, fD)


def lead_functions(ell, omega, p: SetupParams):
    mu = p.mu1 if ell == 0 else p.mu2
    return _lead_fn(_key(omega), mu, p.beta, p.Gamma, p.omega_cut, bool(p.lamb_shift))


def fermi_spectral(alpha, nu, omega, p: SetupParams):
    """Mode-resolved lead functions (frak F_{alpha nu}(omega), frak f_{alpha nu}(omega)).

    alpha, nu are 0-based mode indices (0 = upper mode A_1).
    """
    phi = phi_matrix(rotated_dqd(p).theta)
    Ft, ft = 0j, 0j
    for ell in (0, 1):
        w = phi[alpha, ell] * phi[nu, ell]
        F, f = lead_functions(ell, omega, p)
        Ft += w * F
        ft += w * f
    return Ft, ft


# ---------------------------------------------------------------- phonons

@lru_cache(maxsize=4096)
def _phonon_ft(delta, beta, gamma_b, omega_c, omega_max, lamb):
    if gamma_b == 0.0:
        return 0j
    p = _PhononArgs(gamma_b, omega_c, omega_max)
    a = abs(delta)
    re = 0.0
    if a > 0:
        n = bose(a, beta)
        re = 0.5 * j_ph(a, p) * (n if delta > 0 else n + 1.0)
    if not lamb:
        return complex(re)
    top = 12.0 * omega_max

    def jn(w):
        return 0.0 if w <= 0 else j_ph(w, p) * bose(w, beta)

    def jn1(w):
        return 0.0 if w <= 0 else j_ph(w, p) * (bose(w, beta) + 1.0)

    pts = (omega_c, omega_max)
    if a == 0:
        v, _ = integrate.quad(lambda w: 0.0 if w <= 0 else -j_ph(w, p) / w, 0, top,
                              points=pts, epsabs=1e-12, limit=400)
        im = v
    elif delta > 0:
        s = pv_integral(jn, a, 0.0, top, points=pts, epsabs=1e-12)
        r, _ = integrate.quad(lambda w: jn1(w) / (w + a), 0, top, points=pts, epsabs=1e-12, limit=400)
        im = s - r
    else:
        r, _ = integrate.quad(lambda w: jn(w) / (w + a), 0, top, points=pts, epsabs=1e-12, limit=400)
        s = pv_integral(jn1, a, 0.0, top, points=pts, epsabs=1e-12)
        im = r - s
    return complex(re, im / (2 * math.pi))


@dataclass(frozen=True)
class _PhononArgs:
    gamma_b: float
    omega_c: float
    omega_max: float


def phonon_half_ft(delta_omega, p: SetupParams, lamb: bool | None = None):
    """One-sided transform F_B(Delta) of the phonon correlation function."""
    if p.beta <= 0:
        raise ValueError("beta must be positive")
    lamb = p.lamb_shift if lamb is None else lamb
    return _phonon_ft(_key(delta_omega), p.beta, p.gamma_b, p.omega_c, p.omega_max, bool(lamb))


# ---------------------------------------------------------------- Fock space

_a = np.array([[0.0, 1.0], [0.0, 0.0]])
_Z = np.diag([1.0, -1.0])
_I2 = np.eye(2)
# basis index = 2*n1 + n2 : |00>, |01>, |10>, |11>
A1 = np.kron(_a, _I2)
A2 = np.kron(_Z, _a)
MODES = (A1, A2)
N1 = A1.T @ A1
N2 = A2.T @ A2


def fock_energies(p: SetupParams):
    wq = rotated_dqd(p).omega_q
    return np.diag(0.5 * wq * N1 - 0.5 * wq * N2 + p.V * N1 @ N2).copy()


def _superop(X, Y):
    """rho -> X rho Y^+ + Y rho X^+ - Y^+ X rho - rho X^+ Y  (row-major vec)."""
    I = np.eye(X.shape[0])
    Yd, Xd = Y.conj().T, X.conj().T
    return (np.kron(X, Y.conj()) + np.kron(Y, X.conj())
            - np.kron(Yd @ X, I) - np.kron(I, (Xd @ Y).T))


def _weighted(op, fn, E, sign):
    """op[i, j] * fn(sign*(E_i - E_j)) on the nonzero elements."""
    out = np.zeros(op.shape, dtype=complex)
    for i, j in zip(*np.nonzero(op)):
        out[i, j] = op[i, j] * fn(sign * (E[i] - E[j]))
    return out


def redfield_generator(p: SetupParams, phonons: bool = True):
    """16x16 generator acting on row-major vec(rho) in the Fock basis."""
    E = fock_energies(p)
    H = np.diag(E).astype(complex)
    I = np.eye(4)
    L = -1j * (np.kron(H, I) - np.kron(I, H.T))
    for al in (0, 1):
        for nu in (0, 1):
            def w_out(x, al=al, nu=nu):
                F, f = fermi_spectral(al, nu, x, p)
                return np.conj(f - F)

            def w_in(x, al=al, nu=nu):
                return fermi_spectral(al, nu, x, p)[0]

            # tunnelling out: weight at the energy released, E_j - E_i
            L += _superop(_weighted(MODES[nu], w_out, E, -1.0), MODES[al])
            # tunnelling in: weight at E_i - E_j
            L += _superop(_weighted(MODES[nu].T, w_in, E, 1.0), MODES[al].T)
    if phonons and p.gamma_b > 0:
        th = rotated_dqd(p).theta
        m = np.array([[math.cos(th), -math.sin(th)], [-math.sin(th), -math.cos(th)]])
        S = sum(m[a, b] * MODES[a].T @ MODES[b] for a in (0, 1) for b in (0, 1))
        St = _weighted(S, lambda d: phonon_half_ft(d, p), E, 1.0)
        L += _superop(St, S)
    return L


# ---------------------------------------------------------------- steady state

@dataclass(frozen=True)
class DqdSteadyState:
    n1: float
    n2: float
    coh: complex  # <A2^+ A1>
    dn: float
    delta: float
    g: float = 0.0
    cond: float = 1.0
    residual: float = 0.0

    @staticmethod
    def from_delta(delta, n1=None, g=0.0):
        """Bare state carrying a prescribed gain parameter (for model studies)."""
        n1 = max(delta, 0.0) if n1 is None else n1
        return DqdSteadyState(n1=n1, n2=n1 - delta, coh=0j, dn=delta, delta=delta, g=g)


_IDX = {"00": 0, "22": 2 * 4 + 2, "11": 1 * 4 + 1, "12": 1 * 4 + 2, "21": 2 * 4 + 1}
_SECTOR = [_IDX[k] for k in ("00", "22", "11", "12", "21")]


def _full_pivot_solve(A, b):
    lu, ipiv, jpiv, info = lapack.dgetc2(np.array(A, dtype=float, order="F"))
    if info > 0:
        raise NumericalError(f"singular steady-state system (pivot {info})")
    x, scale = lapack.dgesc2(lu, np.array(b, dtype=float), ipiv, jpiv)
    return x / scale


def _rho_from_x(x):
    n1, n2, zr, zi = x
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1 - n1 - n2
    rho[2, 2] = n1
    rho[1, 1] = n2
    rho[1, 2] = zr + 1j * zi  # <A1^+ A2>
    rho[2, 1] = zr - 1j * zi
    return rho


def solve_ness(p: SetupParams, phonons: bool = True) -> DqdSteadyState:
    L = redfield_generator(p, phonons)
    Lk = L[np.ix_(_SECTOR, _SECTOR)]
    # affine map x -> rho_K : rho_K = r0 + M x
    r0 = np.array([1, 0, 0, 0, 0], dtype=complex)
    M = np.array([[-1, -1, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0],
                  [0, 0, 1, 1j], [0, 0, 1, -1j]], dtype=complex)
    rows = Lk[[1, 2, 3]]  # d rho22, d rho11, d rho12
    LM, Lr = rows @ M, rows @ r0
    A = np.vstack([LM[0].real, LM[1].real, LM[2].real, LM[2].imag])
    b = -np.array([Lr[0].real, Lr[1].real, Lr[2].real, Lr[2].imag])
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError(f"steady-state system is singular (condition number {cond:.3g})")
    x = _full_pivot_solve(A, b)
    terms = np.abs(A) * np.abs(x)[None, :]
    scale = max(float(terms.max()), float(np.abs(b).max()))
    resid = float(np.max(np.abs(A @ x - b))) / scale
    n1, n2, zr, zi = (float(v) for v in x)
    g = rotated_dqd(p).g
    dn = n1 - n2
    return DqdSteadyState(n1=n1, n2=n2, coh=complex(zr, -zi), dn=dn,
                          delta=g * g * dn / p.Gamma**2, g=g, cond=cond, residual=resid)


def solve_ness_full(p: SetupParams, phonons: bool = True):
    """Steady density matrix from the null space of the full 16x16 generator."""
    L = redfield_generator(p, phonons)
    tr = np.eye(4).reshape(-1)
    A = np.vstack([L, tr])
    b = np.zeros(17, dtype=complex)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(A, b, rcond=None)
    rho = v.reshape(4, 4)
    return 0.5 * (rho + rho.conj().T)


def expectation(rho, op):
    return complex(np.trace(rho @ op))


# ---------------------------------------------------------------- noise kernel

@dataclass(frozen=True)
class NoiseKernelSpec:
    amp: float
    gamma: float
    omega0: float

    def __post_init__(self):
        if self.amp < 0 or self.gamma <= 0:
            raise ValueError("need amp >= 0 and gamma > 0")


def kernel_spec(p: SetupParams, ss: DqdSteadyState) -> NoiseKernelSpec:
    return NoiseKernelSpec(amp=ss.g**2 * ss.n1, gamma=p.Gamma, omega0=p.omega0)


def noise_kernel(t1, t2, spec: NoiseKernelSpec):
    """<xi^+(t1) xi(t2)> for the Lorentzian noise centred at omega0."""
    d = np.asarray(t1, dtype=float) - np.asarray(t2, dtype=float)
    return spec.amp * np.exp(-spec.gamma * np.abs(d) + 1j * spec.omega0 * d)


def noise_spectrum(omega, spec: NoiseKernelSpec):
    return 2 * spec.amp * spec.gamma / ((omega - spec.omega0) ** 2 + spec.gamma**2)


# ---------------------------------------------------------------- balance tuning

@dataclass(frozen=True)
class BalanceRoot:
    eps: float
    tc: float
    dn: float
    theta: float


def balance_rhs(p: SetupParams):
    return p.Gamma * (p.kappa1 + p.kappa2) / (2 * p.g0**2)


def balance_lhs(theta, p: SetupParams, phonons=True):
    eps, tc = ellipse_point(theta, p.omega0)
    ss = solve_ness(p.with_(eps=eps, tc=tc), phonons)
    return ss.dn * math.sin(theta) ** 2, ss


def balance_scan(p: SetupParams, n_theta=200, margin=1e-3, phonons=True):
    thetas = np.linspace(margin, math.pi / 2 - margin, n_theta)
    lhs = np.array([balance_lhs(t, p, phonons)[0] for t in thetas])
    return thetas, lhs


def tune_balance(p: SetupParams, n_theta=200, margin=1e-3, eps_res=1e-4, phonons=True, scan=None):
    """Points on the resonance ellipse where the balance condition holds."""
    from scipy.optimize import brentq

    thetas, lhs = scan if scan is not None else balance_scan(p, n_theta, margin, phonons)
    rhs = balance_rhs(p)
    f = lhs - rhs
    idx = [i for i in range(len(f) - 1) if f[i] == 0 or f[i] * f[i + 1] < 0]
    merged = []
    for i in idx:
        if merged and i - merged[-1] < 2:
            continue
        merged.append(i)
    # the eps resolution is a floor; refining further costs a few solves and
    # makes the tuned point balanced to rounding
    xtol = min(eps_res / (2 * p.omega0), 1e-15)
    roots = []
    for i in merged:
        th = brentq(lambda t: balance_lhs(t, p, phonons)[0] - rhs, thetas[i], thetas[i + 1], xtol=xtol)
        eps, tc = ellipse_point(th, p.omega0)
        ss = solve_ness(p.with_(eps=eps, tc=tc), phonons)
        roots.append(BalanceRoot(eps, tc, ss.dn, th))
    return roots


def nearest_balance(p: SetupParams, **kw) -> SetupParams:
    """Replace (eps, tc) by the closest exact balance root."""
    roots = tune_balance(p, **kw)
    if not roots:
        raise NumericalError("no balance point for these parameters")
    r = min(roots, key=lambda r: math.hypot(r.eps - p.eps, r.tc - p.tc))
    return p.with_(eps=r.eps, tc=r.tc)


def calibrate_gamma_b(p: SetupParams, targets, bounds=(0.05, 1.0), n_theta=120):
    """Phonon coupling that best places the balance roots on `targets`."""
    from scipy.optimize import minimize_scalar

    def cost(gb):
        roots = tune_balance(p.with_(gamma_b=gb), n_theta=n_theta)
        if len(roots) < len(targets):
            return 1e3
        c = 0.0
        for e, t in targets:
            r = min(roots, key=lambda r: math.hypot(r.eps - e, r.tc - t))
            c += ((r.eps - e) / e) ** 2 + ((r.tc - t) / t) ** 2
        return c

    res = minimize_scalar(cost, bounds=bounds, method="bounded", options={"xatol": 1e-5})
    return float(res.x), float(res.fun)
