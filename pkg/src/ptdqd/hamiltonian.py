"""Effective non-Hermitian 2x2 Hamiltonians and their eigenstructure."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ness import DqdSteadyState
from .params import SetupParams

EP_TOL = 1e-9
BALANCE_TOL = 1e-8

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


class PreconditionError(ValueError):
    pass


def is_hermitian(M, tol=1e-12):
    return bool(np.max(np.abs(M - M.conj().T)) <= tol * max(1.0, np.max(np.abs(M))))


def is_identity(M, tol=1e-12):
    return bool(np.max(np.abs(M - I2)) <= tol)


def build_heff(p: SetupParams, ss: DqdSteadyState, symmetric=False):
    if ss.delta >= 1:
        raise PreconditionError(f"gain parameter delta = {ss.delta} must be < 1")
    d = ss.delta
    H = np.array([
        [p.omega0 - 0.5j * p.kappa1 + 1j * p.Gamma * d, p.lam * (1.0 if symmetric else 1.0 - d)],
        [p.lam, p.omega0 - 0.5j * p.kappa2],
    ], dtype=complex)
    if p.kappa_extra > 0:
        H -= 0.5j * p.kappa_extra * I2
    return H


def build_heff_lindblad(p: SetupParams, ss: DqdSteadyState):
    """Same as build_heff with symmetric hopping lambda, lambda."""
    return build_heff(p, ss, symmetric=True)


def is_balanced(p: SetupParams, ss: DqdSteadyState, tol=BALANCE_TOL):
    k = p.kappa1 + p.kappa2
    return abs(k - 2 * p.Gamma * ss.delta) <= tol * max(k, 1e-300)


@dataclass(frozen=True)
class EigenInfo:
    lam_plus: complex
    lam_minus: complex
    right_vectors: np.ndarray  # columns; at an EP: (eigenvector, Jordan vector)
    ep_measure: float  # smallest singular value of the unit-column eigenvector matrix
    is_ep: bool

    @property
    def splitting(self):
        return self.lam_plus - self.lam_minus


def _stable(x, y, bc):
    """x + y, recomputed as -bc/(x - y) when the sum cancels (x^2 - y^2 = -bc)."""
    s, alt = x + y, x - y
    if abs(s) < 0.5 * abs(alt):
        s = -bc / alt
    return s


def eig2(H, ep_tol=EP_TOL) -> EigenInfo:
    H = np.asarray(H, dtype=complex)
    m = 0.5 * (H[0, 0] + H[1, 1])
    h = 0.5 * (H[0, 0] - H[1, 1])
    b, c = H[0, 1], H[1, 0]
    r = np.sqrt(h * h + b * c + 0j)
    lp, lm = m + r, m - r
    vecs = []
    for sign in (1, -1):
        # row 0 gives (b, lam - H00), row 1 gives (lam - H11, c)
        v1 = np.array([b, _stable(-h, sign * r, b * c)])
        v2 = np.array([_stable(h, sign * r, b * c), c])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        nv = np.linalg.norm(v)
        if nv == 0:  # scalar matrix, every vector is an eigenvector
            v, nv = (np.array([1.0, 0.0]) if sign > 0 else np.array([0.0, 1.0])), 1.0
        vecs.append(v / nv)
    R = np.column_stack(vecs).astype(complex)
    ep_measure = float(np.linalg.svd(R, compute_uv=False)[-1])
    overlap = abs(np.vdot(R[:, 0], R[:, 1]))
    is_ep = bool(abs(lp - lm) <= ep_tol and overlap >= 1 - ep_tol)
    if is_ep:
        v = R[:, 0]
        w, *_ = np.linalg.lstsq(H - m * I2, v, rcond=None)
        w = w - np.vdot(v, w) * v
        R = np.column_stack([v, w])
    return EigenInfo(complex(lp), complex(lm), R, ep_measure, is_ep)


def eigvals_closed(p: SetupParams, ss: DqdSteadyState):
    """Eigenvalues of build_heff written out explicitly."""
    d = ss.delta
    mean = p.omega0 - 0.25j * (p.kappa1 + p.kappa2 - 2 * p.Gamma * d) - 0.5j * p.kappa_extra
    root = np.sqrt(complex(p.lam**2 * (1 - d) - ((p.kappa2 - p.kappa1 + 2 * p.Gamma * d) / 4) ** 2))
    return mean + root, mean - root


def lambda_ep(p: SetupParams, ss: DqdSteadyState, balanced=True):
    if ss.delta >= 1:
        raise PreconditionError("delta must be < 1")
    s = math.sqrt(1 - ss.delta)
    if balanced:
        return p.kappa2 / (2 * s)
    return abs(p.kappa2 - p.kappa1 + 2 * p.Gamma * ss.delta) / (4 * s)


@dataclass(frozen=True)
class Thresholds:
    kappa2_ep: float
    kappa2_th: float | None  # None when 2 Gamma delta <= kappa1


def kappa2_thresholds(p: SetupParams, ss: DqdSteadyState) -> Thresholds:
    """Loss values of cavity 2 at the EP and at the onset of net gain."""
    d = ss.delta
    gain = 2 * p.Gamma * d - p.kappa1
    k_ep = p.kappa1 - 2 * p.Gamma * d + 4 * p.lam * math.sqrt(1 - d)
    k_th = 4 * p.lam**2 * (1 - d) / gain if gain > 0 else None
    return Thresholds(k_ep, k_th)


def rx(angle):
    return math.cos(angle / 2) * I2 - 1j * math.sin(angle / 2) * SX


def pt_operator(p: SetupParams, ss: DqdSteadyState, tol=BALANCE_TOL):
    """Angle phi and linear part L of the antilinear symmetry L K of H_eff."""
    if not is_balanced(p, ss, tol):
        raise PreconditionError("gain and loss are not balanced; no antilinear symmetry")
    phi = math.atan(p.lam * ss.delta / p.kappa2) if p.kappa2 > 0 else 0.0
    return phi, rx(2 * phi) @ SX


def pt_residual(H, L, shift=0.0):
    """|| L conj(H') - H' L || with H' = H + i*shift*I removing a passive loss."""
    Hs = H + 1j * shift * I2
    return float(np.linalg.norm(L @ Hs.conj() - Hs @ L))
