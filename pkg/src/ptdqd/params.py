"""Physical parameters, spectral functions and regime checks.

Units: frequencies and rates in GHz, times in ns, hbar = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

# phonon coupling that places the balance roots on the reference points
# (see scripts/calibrate_gamma_b.py)
GAMMA_B_CALIBRATED = 0.3573


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class SetupParams:
    omega0: float = 8.0
    lam: float = 0.010
    kappa1: float = 0.002
    kappa2: float = 0.002
    kappa_extra: float = 0.0
    g0: float = 0.06
    Gamma: float = 0.09
    eps: float = 7.760
    tc: float = 0.973
    V: float = 150.0
    mu1: float = 30.0
    mu2: float = -30.0
    beta: float = 10.0
    gamma_b: float = GAMMA_B_CALIBRATED
    omega_c: float = 20.0
    omega_max: float | None = None
    # lead band cutoff for principal-value integrals (None -> 100*omega0)
    omega_cut: float | None = None
    lamb_shift: bool = True

    def __post_init__(self):
        if self.omega_max is None:
            object.__setattr__(self, "omega_max", 10.0 * self.omega_c)
        if self.omega_cut is None:
            object.__setattr__(self, "omega_cut", 100.0 * self.omega0)
        self.validate()

    def validate(self):
        for name in ("omega0", "lam", "kappa1", "kappa2", "kappa_extra", "g0", "Gamma",
                     "eps", "tc", "V", "mu1", "mu2", "beta", "gamma_b", "omega_c",
                     "omega_max", "omega_cut"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParamError(f"{name} must be finite, got {v}")
        for name in ("omega0", "Gamma", "beta", "tc", "omega_c", "omega_max", "omega_cut"):
            if getattr(self, name) <= 0:
                raise ParamError(f"{name} must be > 0")
        for name in ("lam", "kappa1", "kappa2", "kappa_extra", "gamma_b", "g0"):
            if getattr(self, name) < 0:
                raise ParamError(f"{name} must be >= 0")
        if not (self.V > self.mu1 >= 0 >= self.mu2):
            raise ParamError("need V > mu1 >= 0 >= mu2")

    def with_(self, **kw) -> "SetupParams":
        return replace(self, **kw)


def table_one(**kw) -> SetupParams:
    """Reference set-up at the first balance point, lambda = 10 MHz."""
    return SetupParams(**kw)


@dataclass(frozen=True)
class RotatedDqd:
    theta: float
    omega_q: float
    g: float


def rotated_dqd(p: SetupParams) -> RotatedDqd:
    omega_q = math.hypot(p.eps, 2.0 * p.tc)
    theta = math.atan2(2.0 * p.tc, p.eps)
    return RotatedDqd(theta, omega_q, p.g0 * math.sin(theta))


def phi_matrix(theta):
    """Rotation between site operators c_l and eigenmodes A_a: c_l = sum_a Phi[a, l] A_a."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, s], [-s, c]])


def ellipse_point(theta, omega0):
    """(eps, tc) on the resonance ellipse eps^2 + 4 tc^2 = omega0^2."""
    return omega0 * math.cos(theta), 0.5 * omega0 * math.sin(theta)


def sinc(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(xs) / xs)


def one_minus_sinc(x):
    """1 - sin(x)/x without cancellation for small x."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    small = np.abs(x) < 0.1
    xs = np.where(small, 1.0, x)
    series = x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    return np.where(small, series, 1.0 - np.sin(xs) / xs)


def j_ph(omega, p: SetupParams):
    omega = np.asarray(omega, dtype=float)
    out = p.gamma_b * omega * one_minus_sinc(omega / p.omega_c) * np.exp(-omega**2 / (2 * p.omega_max**2))
    return out if out.ndim else float(out)


def fermi(omega, mu, beta):
    out = expit(-beta * (np.asarray(omega, dtype=float) - mu))
    return out if np.ndim(out) else float(out)


def bose(omega, beta):
    x = beta * np.asarray(omega, dtype=float)
    if np.any(x == 0):
        raise ZeroDivisionError("bose occupation diverges at omega = 0")
    with np.errstate(over="ignore"):
        # exp(-x)/(1 - exp(-x)) for x > 0 avoids overflow
        ax = np.abs(x)
        pos = np.exp(-ax) / -np.expm1(-ax)
    out = np.where(x > 0, pos, -1.0 - pos)
    return out if out.ndim else float(out)


@dataclass
class RegimeReport:
    checks: dict = field(default_factory=dict)  # name -> (ratio, limit, ok)

    @property
    def ok(self):
        return all(c[2] for c in self.checks.values())

    def failed(self):
        return [k for k, c in self.checks.items() if not c[2]]


MUCH_LESS = 0.25
LESS_SIM = 1.0


def validate_regime(p: SetupParams, n_photons_est: float = 1.0) -> RegimeReport:
    """Ratio tests for the approximations behind the effective model.

    "a << b" passes when a/b <= 0.25, "a <~ b" when a/b <= 1.
    """
    rq = rotated_dqd(p)
    kmax = max(p.kappa1, p.kappa2) + p.kappa_extra

    def ratio(a, b):
        if b == 0:
            return math.inf if a > 0 else 0.0
        return a / b

    rep = RegimeReport()

    def add(name, a, b, lim):
        r = ratio(a, b)
        rep.checks[name] = (r, lim, r <= lim)

    add("weak_coupling g*sqrt(n) << Gamma", rq.g * math.sqrt(max(n_photons_est, 0.0)), p.Gamma, MUCH_LESS)
    add("Gamma << omega0", p.Gamma, p.omega0, MUCH_LESS)
    add("kappa << lambda", kmax, p.lam, MUCH_LESS)
    add("lambda << Gamma", p.lam, p.Gamma, MUCH_LESS)
    add("mu1 << V", p.mu1, p.V, MUCH_LESS)
    add("omega_q/2 < mu1 (bias window)", 0.5 * rq.omega_q, p.mu1, LESS_SIM)
    add("1/beta << omega_q", 1.0 / p.beta, rq.omega_q, MUCH_LESS)
    return rep
