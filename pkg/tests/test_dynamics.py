import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad_vec
from scipy.linalg import expm

from ptdqd.dynamics import (DriveSpec, MethodError, SingularDriveError, evolve_correlations, evolve_quadratures,
                            lindblad_evolve, lindblad_fluctuations, lindblad_source, lindblad_stationary,
                            noise_correlation_eigenbasis, noise_correlation_quadrature, propagator, skewed_basis,
                            skewed_correlations, skewed_slopes)
from ptdqd.hamiltonian import build_heff, build_heff_lindblad, lambda_ep
from ptdqd.ness import DqdSteadyState, NoiseKernelSpec
from ptdqd.params import SetupParams

SPEC = NoiseKernelSpec(amp=3e-4, gamma=0.09, omega0=8.0)
SS = DqdSteadyState.from_delta(0.004 / 0.18, n1=0.9, g=0.0218)


def heff(lam, k1=0.002, k2=0.002, ss=SS):
    return build_heff(SetupParams(lam=lam, kappa1=k1, kappa2=k2), ss)


def markov_oracle(H, spec, t):
    """Noise part of C(t) from an auxiliary Ornstein-Uhlenbeck mode.

    z = (b1, b2, xi) in the frame rotating at omega0; the stationary OU
    process has <xi^+(s) xi(s')> = amp e^{-gamma |s - s'|}.
    """
    A = np.zeros((3, 3), dtype=complex)
    A[:2, :2] = -1j * (H - spec.omega0 * np.eye(2))
    A[0, 2] = -1j
    A[2, 2] = -spec.gamma
    I3 = np.eye(3)
    G = np.kron(A, I3) + np.kron(I3, A.conj())  # row-major vec of A P + P A^+
    D = np.zeros((3, 3))
    D[2, 2] = 2 * spec.gamma * spec.amp
    P0 = np.zeros((3, 3), dtype=complex)
    P0[2, 2] = spec.amp
    B = np.zeros((10, 10), dtype=complex)
    B[:9, :9] = G
    B[:9, 9] = D.reshape(-1)
    y = expm(B * t) @ np.append(P0.reshape(-1), 1.0)
    P = y[:9].reshape(3, 3)
    return P[:2, :2].T


# ---- propagator

cplx = st.complex_numbers(max_magnitude=3)


@given(cplx, cplx, cplx, cplx, st.floats(0, 20))
def test_propagator_matches_expm(a, b, c, d, t):
    H = np.array([[a, b], [c, d]])
    ref = expm(-1j * H * t)
    if not np.all(np.isfinite(ref)) or np.abs(ref).max() > 1e12:
        return
    assert np.allclose(propagator(H, t), ref, rtol=1e-9, atol=1e-10 * max(1, np.abs(ref).max()))


def test_propagator_exact_at_ep():
    p = SetupParams(kappa1=0.002, kappa2=0.002)
    H = build_heff(p.with_(lam=lambda_ep(p, SS)), SS)
    m = 0.5 * np.trace(H)
    N = H - m * np.eye(2)
    assert np.abs(N @ N).max() < 1e-15
    for t in (0.0, 10.0, 1000.0):
        jordan = np.exp(-1j * m * t) * (np.eye(2) - 1j * t * N)
        assert np.allclose(propagator(H, t), jordan, rtol=1e-12, atol=1e-14)


@given(st.floats(0, 500), st.floats(0, 500))
def test_propagator_group_law(s, t):
    H = heff(0.01)
    assert np.allclose(propagator(H, s + t), propagator(H, s) @ propagator(H, t), atol=1e-11)


def test_propagator_vectorised():
    H = heff(0.003)
    ts = np.linspace(0, 100, 7)
    U = propagator(H, ts)
    assert U.shape == (7, 2, 2)
    for t, u in zip(ts, U):
        assert np.allclose(u, propagator(H, t))


# ---- quadratures

def test_driven_quadratures_solve_equation_of_motion():
    H = heff(0.01, k2=0.004)
    dr = DriveSpec(e0=1e-3, omega_d=8.001)
    t = np.array([50.0 - 1e-4, 50.0, 50.0 + 1e-4])
    b = evolve_quadratures(H, dr, (0.3, 0.1j), t)
    db = (b[2] - b[0]) / 2e-4
    rhs = -1j * H @ b[1] + 1j * dr.e0 * np.exp(-1j * dr.omega_d * 50.0) * np.array([0, 1])
    assert np.allclose(db, rhs, atol=1e-9)
    assert np.allclose(evolve_quadratures(H, dr, (0.3, 0.1j), [0.0])[0], [0.3, 0.1j])


def test_drive_on_lossless_resonance_is_singular():
    H = np.diag([8.0, 8.5]).astype(complex)
    with pytest.raises(SingularDriveError):
        evolve_quadratures(H, DriveSpec(1e-3, 8.0), (1, 0), [1.0])


def test_drive_targets_cavity_two_only():
    with pytest.raises(ValueError):
        DriveSpec(1e-3, 8.0, target=1)


def test_small_initial_amplitude_warns():
    with pytest.warns(UserWarning):
        evolve_correlations(heff(0.01), SPEC, (1e-5, 0), [0.0, 1.0])


# ---- noise correlations

@pytest.mark.parametrize("lam_factor", [0.5, 1.0, 10.0])
@pytest.mark.parametrize("t", [7.0, 120.0, 900.0])
def test_quadrature_against_markov_oracle(lam_factor, t):
    p = SetupParams(kappa1=0.002, kappa2=0.002)
    H = build_heff(p.with_(lam=lam_factor * lambda_ep(p, SS)), SS)
    ref = markov_oracle(H, SPEC, t)
    got = noise_correlation_quadrature(H, SPEC, t)
    assert np.abs(got - ref).max() <= 1e-7 * np.abs(ref).max()


@pytest.mark.parametrize("t", [3.0, 60.0, 1500.0])
def test_eigenbasis_against_markov_oracle(t):
    H = heff(0.01)
    ref = markov_oracle(H, SPEC, t)
    got = noise_correlation_eigenbasis(H, SPEC, t)
    assert np.abs(got - ref).max() <= 1e-9 * np.abs(ref).max()


@settings(max_examples=15)
@given(st.floats(0.0, 1500.0), st.floats(1.6, 20.0))
def test_noise_correlation_hermitian_psd(t, f):
    p = SetupParams(kappa1=0.002, kappa2=0.002)
    H = build_heff(p.with_(lam=f * lambda_ep(p, SS)), SS)
    C = noise_correlation_eigenbasis(H, SPEC, t)
    assert np.allclose(C, C.conj().T, atol=1e-15)
    assert np.linalg.eigvalsh(C).min() >= -1e-12 * max(1e-12, np.abs(C).max())


def test_eigenbasis_refuses_ep():
    p = SetupParams(kappa1=0.002, kappa2=0.002)
    H = build_heff(p.with_(lam=lambda_ep(p, SS)), SS)
    with pytest.raises(MethodError):
        noise_correlation_eigenbasis(H, SPEC, 10.0)
    with pytest.raises(MethodError):
        evolve_correlations(H, SPEC, (1, 0), [0.0, 1.0], method="eigenbasis")


def test_unknown_method():
    with pytest.raises(MethodError):
        evolve_correlations(heff(0.01), SPEC, (1, 0), [0.0], method="euler")


def test_skewed_long_time_form():
    H = heff(0.01)
    info, R, mt = skewed_basis(H)
    C0 = np.array([[1, 0], [0, 0]], dtype=complex)
    t = 1200.0
    C = np.outer(np.conj(propagator(H, t) @ [1, 0]), propagator(H, t) @ [1, 0]) + noise_correlation_eigenbasis(H, SPEC, t)
    Ct = R.conj().T @ C @ R
    assert np.allclose(skewed_correlations(H, SPEC, C0, t), Ct, atol=1e-9 * np.abs(Ct).max())


def test_skewed_slopes_match_growth():
    H = heff(0.01)
    _, R, _ = skewed_basis(H)
    t0, t1 = 800.0, 1600.0
    Ct = [R.conj().T @ noise_correlation_eigenbasis(H, SPEC, t) @ R for t in (t0, t1)]
    fd = np.real(np.diag(Ct[1] - Ct[0])) / (t1 - t0)
    assert np.allclose(skewed_slopes(H, SPEC), fd, rtol=1e-9)


@settings(max_examples=10)
@given(st.floats(0.0, 5e-3), st.floats(-5e-3, 5e-3))
def test_connected_correlations_independent_of_drive(e0, det):
    H = heff(0.01, k2=0.003)
    ts = np.linspace(0, 400, 9)
    free = evolve_correlations(H, SPEC, (1, 0.2j), ts)
    driven = evolve_correlations(H, SPEC, (1, 0.2j), ts, drive=DriveSpec(e0, 8.0 + det + 1e-4))
    assert np.allclose(free.fluct, driven.fluct, atol=1e-12)


def test_zero_noise_has_no_fluctuations():
    tr = evolve_correlations(heff(0.01), NoiseKernelSpec(0.0, 0.09, 8.0), (1, 0), np.linspace(0, 500, 11))
    assert np.abs(tr.fluct).max() < 1e-14


def test_threads_do_not_change_results():
    ts = np.linspace(0, 300, 12)
    H = heff(0.004)
    a = evolve_correlations(H, SPEC, (1, 0), ts, method="quadrature", threads=1)
    b = evolve_correlations(H, SPEC, (1, 0), ts, method="quadrature", threads=3)
    assert np.array_equal(a.corr, b.corr)


def test_validity_index_marks_photon_bound():
    H = heff(0.0002)  # deep in the broken phase, grows
    ts = np.linspace(0, 4000, 81)
    tr = evolve_correlations(H, SPEC, (1, 0), ts, photon_bound=20.0)
    k = tr.validity_index
    assert k is not None and tr.valid[:k].all() and not tr.valid[k:].any()
    assert (tr.n1 + tr.n2)[k] > 20 >= (tr.n1 + tr.n2)[k - 1]


# ---- local Lindblad models

def test_lindblad_fluctuations_against_integral():
    H = build_heff_lindblad(SetupParams(lam=0.006), SS)
    S = lindblad_source(SetupParams(), SS, "microscopic")
    t = 300.0
    f = lambda s: expm(1j * H.conj() * s) @ S @ expm(-1j * H.T * s)
    ref, _ = quad_vec(f, 0, t, epsabs=1e-13)
    assert np.allclose(lindblad_fluctuations(H, S, t), ref, rtol=1e-8, atol=1e-12)


def test_lindblad_stationary_residual_and_psd():
    p = SetupParams(lam=0.004, kappa2=0.004)
    H = build_heff_lindblad(p, SS)
    for model in ("microscopic", "phenomenological"):
        S = lindblad_source(p, SS, model)
        D = lindblad_stationary(H, S)
        res = 1j * H.conj() @ D - 1j * D @ H.T + S
        assert np.abs(res).max() <= 1e-12 * np.abs(S).max()
        assert np.allclose(D, D.conj().T, atol=1e-12 * np.abs(D).max())
        assert np.linalg.eigvalsh(D).min() >= -1e-12 * np.abs(D).max()


def test_lindblad_equals_eom_hamiltonian_without_gain():
    ss = DqdSteadyState.from_delta(0.0)
    p = SetupParams(lam=0.01)
    assert np.array_equal(build_heff(p, ss), build_heff_lindblad(p, ss))


def test_lindblad_trajectory_tracks_classical_part():
    p = SetupParams(lam=0.01)
    ts = np.linspace(0, 200, 5)
    tr = lindblad_evolve(p, SS, "phenomenological", DriveSpec(), (1, 0), ts)
    assert np.allclose(tr.quad, evolve_quadratures(build_heff_lindblad(p, SS), DriveSpec(), (1, 0), ts))
    assert np.all(tr.fluct[:, 0] >= -1e-14)
