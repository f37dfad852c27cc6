"""Quadrature and correlation-matrix dynamics of the two cavities.

Conventions: C[l, l'] = <b_l^+ b_l'>, b = (b_1, b_2) with cavity 1 carrying
the DQD, times in ns. The DQD noise enters cavity 1 with the kernel of
ness.noise_kernel.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .hamiltonian import I2, eig2
from .ness import DqdSteadyState, NoiseKernelSpec
from .params import SetupParams

PHOTON_BOUND = 50.0
E11 = np.array([[1, 0], [0, 0]], dtype=complex)


class MethodError(ValueError):
    pass


class SingularDriveError(ValueError):
    pass


# ---------------------------------------------------------------- propagator

def propagator(H, t):
    """exp(-i H t) for a 2x2 H; t scalar or 1-d array (returns (..., 2, 2)).

    Uses exp(-iHt) = e^{-imt}[cos(rt) I - i sin(rt)/r (H - m I)] with
    m = tr H / 2 and r^2 = det(m I - H); this stays exact when r -> 0,
    where it reduces to the Jordan form e^{-imt}[I - i t (H - m I)].
    """
    H = np.asarray(H, dtype=complex)
    t = np.asarray(t, dtype=float)
    m = 0.5 * np.trace(H)
    N = H - m * I2
    r = np.sqrt(-np.linalg.det(N) + 0j)
    x = r * t
    x2 = x * x
    small = np.abs(x) < 1e-3
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sin(x) / r if r != 0 else t + 0j
    sinc_t = np.where(small, t * (1 - x2 / 6 + x2 * x2 / 120), direct)
    c = np.cos(x)
    ph = np.exp(-1j * m * t)
    U = ph[..., None, None] * (c[..., None, None] * I2 - 1j * sinc_t[..., None, None] * N)
    return U


# ---------------------------------------------------------------- quadratures

@dataclass(frozen=True)
class DriveSpec:
    e0: float = 0.0
    omega_d: float = 0.0
    target: int = 2

    def __post_init__(self):
        if self.e0 < 0:
            raise ValueError("drive amplitude must be >= 0")
        if self.target != 2:
            raise ValueError("the coherent drive acts on cavity 2")


NO_DRIVE = DriveSpec()


def _check_alpha(init):
    a = float(np.max(np.abs(init)))
    if 0 < a < 4e-4:
        warnings.warn("initial amplitude is not large compared to the noise-mean scale 1e-4", stacklevel=3)


def evolve_quadratures(H, drive: DriveSpec, init, times):
    """<b(t)> for the linear equations of motion; returns (nt, 2) complex."""
    H = np.asarray(H, dtype=complex)
    b0 = np.asarray(init, dtype=complex)
    times = np.asarray(times, dtype=float)
    U = propagator(H, times)
    b = U @ b0
    if drive.e0 > 0:
        K = H - drive.omega_d * I2
        if np.linalg.cond(K) > 1e14:
            raise SingularDriveError("drive frequency sits on a real eigenvalue of a lossless H")
        beta = drive.e0 * np.linalg.solve(K, np.array([0, 1], dtype=complex))
        ph = np.exp(-1j * drive.omega_d * times)
        b = b + ph[:, None] * beta[None, :] - U @ beta
    return b


# ---------------------------------------------------------------- noise part

def _gauss_panels(a, b, h, n=12):
    """Composite Gauss-Legendre nodes/weights on [a, b] with panels of length <= h."""
    x, w = np.polynomial.legendre.leggauss(n)
    if b <= a:
        return np.zeros(0), np.zeros(0)
    k = max(1, math.ceil((b - a) / h))
    edges = np.linspace(a, b, k + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _osc_scale(Hr):
    lp, lm = np.linalg.eigvals(Hr)
    f = max(abs(lp), abs(lm), 1e-12)
    return 2 * math.pi / f


def noise_correlation_quadrature(H, spec: NoiseKernelSpec, t, n_gauss=12, tail=40.0):
    """Noise part of C(t) by nested Gauss-Legendre quadrature (any H, EP included).

    Works in the frame rotating at the kernel frequency, where the
    integrand is slowly varying, and splits the square into the two
    triangles w < u and u < w (the second is the adjoint of the first).
    """
    if spec.amp == 0 or t <= 0:
        return np.zeros((2, 2), dtype=complex)
    G = spec.gamma
    Hr = np.asarray(H, dtype=complex) - spec.omega0 * I2
    h = min(2.0 / G, _osc_scale(Hr) / 8)
    L = tail / G
    u, wu = _gauss_panels(0.0, t, h, n_gauss)
    vu = propagator(Hr, u)[:, :, 0]  # (nu, 2)
    # inner offsets sigma = u - w in [0, min(u, L)], same panel count per u
    npan = max(1, math.ceil(min(t, L) / h))
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    smax = np.minimum(u, L)
    edges = np.linspace(0, 1, npan + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    s_unit = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w_unit = (half[:, None] * wg[None, :]).ravel()
    X = np.zeros((2, 2), dtype=complex)
    chunk = max(1, 200000 // max(len(s_unit), 1))
    for i0 in range(0, len(u), chunk):
        sl = slice(i0, i0 + chunk)
        sig = smax[sl, None] * s_unit[None, :]
        wts = smax[sl, None] * w_unit[None, :] * np.exp(-G * sig)
        vw = propagator(Hr, (u[sl, None] - sig).ravel())[:, :, 0].reshape(sig.shape + (2,))
        inner = np.einsum("ij,ijk->ik", wts, vw)  # (nu_chunk, 2)
        X += np.einsum("i,ik,il->kl", wu[sl], vu[sl].conj(), inner)
    X *= spec.amp
    return X + X.conj().T


def _E(z, t):
    """(e^{z t} - 1)/z, continuous at z = 0."""
    z = np.asarray(z, dtype=complex)
    zt = z * t
    small = np.abs(zt) < 1e-6
    safe = np.where(small, 1.0, z)
    return np.where(small, t * (1 + zt / 2 + zt * zt / 6), np.expm1(zt) / safe)


def skewed_basis(H):
    """R (unit right eigenvectors of H^T) and the transformed source m~ = R^+ E11 R."""
    info = eig2(np.asarray(H).T)
    R = info.right_vectors
    return info, R, R.conj().T @ E11 @ R


def _noise_integrals(lam, spec: NoiseKernelSpec, t, asymptotic=False):
    """I[k, k'] = amp * int int e^{i(l_k^*-w0)u - i(l_k'-w0)w - G|u-w|} du dw over [0,t]^2."""
    G = spec.gamma
    p = 1j * (np.conj(lam)[:, None] - spec.omega0) + 0 * lam[None, :]
    q = -1j * (lam[None, :] - spec.omega0) + 0 * lam[:, None]
    if asymptotic:
        Ep_G, Eq_G = -1 / (p - G), -1 / (q - G)
    else:
        Ep_G, Eq_G = _E(p - G, t), _E(q - G, t)
    Epq = _E(p + q, t)
    return spec.amp * ((Epq - Ep_G) / (q + G) + (Epq - Eq_G) / (p + G))


def noise_correlation_eigenbasis(H, spec: NoiseKernelSpec, t, info=None):
    """Noise part of C(t) with the inner integrals done analytically per eigenmode."""
    if spec.amp == 0 or t <= 0:
        return np.zeros((2, 2), dtype=complex)
    info, R, mt = skewed_basis(H) if info is None else info
    if info.is_ep or info.ep_measure < 1e-6:
        raise MethodError("eigenbasis method is singular at an exceptional point; use method='quadrature'")
    lam = np.array([info.lam_plus, info.lam_minus])
    Ct = mt * _noise_integrals(lam, spec, t)
    Ri = np.linalg.inv(R)
    return Ri.conj().T @ Ct @ Ri


def skewed_correlations(H, spec: NoiseKernelSpec, C0, t):
    """Long-time (t >> 1/Gamma) form of C~(t) = R^+ C(t) R in the skewed basis.

    Diagonal entries grow linearly, off-diagonal ones oscillate at the
    eigenvalue splitting about a constant offset.
    """
    info, R, mt = skewed_basis(H)
    if info.is_ep or info.ep_measure < 1e-6:
        raise MethodError("skewed basis is singular at an exceptional point")
    lam = np.array([info.lam_plus, info.lam_minus])
    ph = np.exp(1j * (np.conj(lam)[:, None] - lam[None, :]) * t)
    Ct0 = R.conj().T @ np.asarray(C0, dtype=complex) @ R
    return ph * Ct0 + mt * _noise_integrals(lam, spec, t, asymptotic=True)


def skewed_slopes(H, spec: NoiseKernelSpec):
    """Linear growth rates of the diagonal of C~ in the balanced phase."""
    info, R, mt = skewed_basis(H)
    lam = np.array([info.lam_plus, info.lam_minus])
    x = lam.real - spec.omega0
    return (2 * spec.amp * np.real(np.diag(mt)) / spec.gamma) / (1 + (x / spec.gamma) ** 2)


# ---------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    times: np.ndarray
    quad: np.ndarray  # (nt, 2)
    corr: np.ndarray  # (nt, 2, 2)
    lam: float
    photon_bound: float = PHOTON_BOUND

    @property
    def n1(self):
        return self.corr[:, 0, 0].real

    @property
    def n2(self):
        return self.corr[:, 1, 1].real

    @property
    def fluct(self):
        # same product as the classical part of corr, so zero noise gives exactly 0
        cl = (self.quad.conj() * self.quad).real
        return np.stack([self.n1 - cl[:, 0], self.n2 - cl[:, 1]], axis=1)

    @property
    def current(self):
        # <b_2^+ b_1> = C[1, 0]
        return self.lam * self.corr[:, 1, 0].imag

    @property
    def validity_index(self):
        """First sample where n1 + n2 exceeds the photon bound (None if never)."""
        over = np.nonzero(self.n1 + self.n2 > self.photon_bound)[0]
        return int(over[0]) if len(over) else None

    @property
    def valid(self):
        k = self.validity_index
        out = np.ones(len(self.times), dtype=bool)
        if k is not None:
            out[k:] = False
        return out


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def evolve_correlations(H, spec: NoiseKernelSpec, init_quad, times, method="eigenbasis",
                        drive: DriveSpec = NO_DRIVE, photon_bound=PHOTON_BOUND, threads=1):
    H = np.asarray(H, dtype=complex)
    times = np.asarray(times, dtype=float)
    _check_alpha(init_quad)
    quad = evolve_quadratures(H, drive, init_quad, times)
    ccl = quad.conj()[:, :, None] * quad[:, None, :]
    if method == "eigenbasis":
        info = skewed_basis(H)
        if info[0].is_ep or info[0].ep_measure < 1e-6:
            raise MethodError("eigenbasis method is singular at an exceptional point; use method='quadrature'")
        fn = lambda t: noise_correlation_eigenbasis(H, spec, t, info)
    elif method == "quadrature":
        fn = lambda t: noise_correlation_quadrature(H, spec, t)
    else:
        raise MethodError(f"unknown method {method!r}")
    noise = np.array(_map(fn, list(times), threads)) if spec.amp else np.zeros_like(ccl)
    C = ccl + noise
    C = 0.5 * (C + np.conj(np.swapaxes(C, 1, 2)))
    return Trajectory(times, quad, C, float(H[1, 0].real), photon_bound)


def default_times(t_max, n=2000):
    return np.linspace(0.0, t_max, n)


# ---------------------------------------------------------------- local Lindblad models

def lindblad_source(p: SetupParams, ss: DqdSteadyState, model):
    if model == "microscopic":
        a = ss.g**2 * ss.n1 / p.Gamma
    elif model == "phenomenological":
        a = p.Gamma * ss.delta - 0.5 * p.kappa1
    else:
        raise ValueError(f"unknown model {model!r}")
    return a * (I2 + np.diag([1, -1]).astype(complex))


def _lyap_generator(H):
    """vec(D) -> vec(i H^* D - i D H^T), row-major."""
    return 1j * np.kron(H.conj(), I2) - 1j * np.kron(I2, H)


def lindblad_fluctuations(H, S, t):
    """int_0^t e^{iH^* s} S e^{-iH^T s} ds."""
    info = eig2(H.T)
    if not info.is_ep and info.ep_measure > 1e-6:
        P = info.right_vectors
        lam = np.array([info.lam_plus, info.lam_minus])
        Pi = np.linalg.inv(P)
        St = P.conj().T @ S @ P
        D = St * _E(1j * (np.conj(lam)[:, None] - lam[None, :]), t)
        return Pi.conj().T @ D @ Pi
    A = _lyap_generator(H)
    B = np.zeros((5, 5), dtype=complex)
    B[:4, :4] = A
    B[:4, 4] = S.reshape(-1)
    return (expm(B * t)[:4, 4]).reshape(2, 2)


def lindblad_evolve(p: SetupParams, ss: DqdSteadyState, model, drive: DriveSpec, init, times,
                    photon_bound=PHOTON_BOUND):
    from .hamiltonian import build_heff_lindblad

    H2 = build_heff_lindblad(p, ss)
    S = lindblad_source(p, ss, model)
    times = np.asarray(times, dtype=float)
    quad = evolve_quadratures(H2, drive, init, times)
    ccl = quad.conj()[:, :, None] * quad[:, None, :]
    D = np.array([lindblad_fluctuations(H2, S, t) for t in times])
    C = ccl + D
    C = 0.5 * (C + np.conj(np.swapaxes(C, 1, 2)))
    return Trajectory(times, quad, C, p.lam, photon_bound)


def lindblad_stationary(H, S):
    """Solve i H^* D - i D H^T + S = 0."""
    A = _lyap_generator(np.asarray(H, dtype=complex))
    d = np.linalg.solve(A, -S.reshape(-1))
    return d.reshape(2, 2)
