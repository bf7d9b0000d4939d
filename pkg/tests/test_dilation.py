import math

import numpy as np
import pytest
from scipy.linalg import expm

from app.core.errors import NotHermitian, NotPositive, PostselectionVanished
from app.schemas.params import DilationConfig, SSHParams
from app.services.dilation import (
    DilatedState,
    DilationTrajectory,
    build_trajectory,
    dilated_hamiltonian,
    eta_from_M,
    evolve_dilated,
    initial_dilated_state,
    pauli_decompose,
    postselect_minus,
    run_dilated,
    solve_M,
)
from app.services.dynamics import evolve_nonunitary
from app.services.pauli import I2, NUC_MINUS, NUC_PLUS, PAULIS, SIGMA_X, SIGMA_Z, trace_distance
from app.services.ssh_model import eigensystem, hamiltonian

S3 = SSHParams(v=0.3, r=1.0, gamma=3.5, k=0.3 * math.pi)


def _random_hermitian(rng, scale=1.0):
    X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return scale * (X + X.conj().T) / 2


def _max_trace_distance(run, H, psi0, samples=20):
    picks = np.unique(np.linspace(0, len(run.series.times) - 1, samples).round().astype(int))
    worst = 0.0
    for j in picks:
        direct = evolve_nonunitary(H, psi0, float(run.series.times[j]))
        worst = max(worst, trace_distance(run.postselected[j], direct))
    return worst


def test_solve_M_hermitian_keeps_scalar():
    config = DilationConfig(eta0=8.0, step=1e-3, horizon=0.01)
    M = solve_M(0.7 * SIGMA_X + 0.1 * SIGMA_Z, config)
    assert np.allclose(M, 65.0 * I2, atol=1e-12)


def test_solve_M_matches_closed_form():
    H = hamiltonian(S3)
    config = DilationConfig(eta0=8.0, step=1e-3, horizon=0.3)
    M = solve_M(H, config)
    for j in (0, 100, len(M) - 1):
        t = config.t_grid()[j]
        expected = expm(-1j * H.conj().T * t) @ config.m0() @ expm(1j * H * t)
        assert np.allclose(M[j], expected, rtol=1e-8, atol=1e-8)


def test_eta_from_M_square_roots():
    assert np.allclose(eta_from_M(5.0 * I2), 2.0 * I2)
    assert np.allclose(eta_from_M(np.diag([2.0, 10.0]).astype(complex)), np.diag([1.0, 3.0]))
    rng = np.random.default_rng(0)
    for _ in range(10):
        X = _random_hermitian(rng)
        M = X @ X + 1.5 * I2
        eta = eta_from_M(M)
        assert np.allclose(eta, eta.conj().T, atol=1e-12)
        assert np.allclose(eta @ eta, M - I2, atol=1e-12)


def test_eta_from_M_rejects_non_positive():
    with pytest.raises(NotPositive):
        eta_from_M(0.5 * I2)


def test_dilated_hamiltonian_hermitian_limit():
    H = 0.7 * SIGMA_X
    eta = 3.0 * I2
    lam, gam, deviation = dilated_hamiltonian(H, eta, np.zeros((2, 2)), np.linalg.inv(10.0 * I2))
    assert np.allclose(lam, H)
    assert np.allclose(gam, 0.0)
    assert deviation == pytest.approx(0.0, abs=1e-14)


def test_pauli_decompose():
    assert np.allclose(pauli_decompose(I2), [1, 0, 0, 0])
    assert np.allclose(pauli_decompose(2 * SIGMA_X + 3 * SIGMA_Z), [0, 2, 0, 3])
    rng = np.random.default_rng(1)
    X = _random_hermitian(rng, 3.0)
    c = pauli_decompose(X)
    assert np.allclose(sum(ci * s for ci, s in zip(c, PAULIS)), X, atol=1e-12)
    with pytest.raises(NotHermitian):
        pauli_decompose(np.array([[0, 1], [0, 0]], dtype=complex))


def test_initial_state_without_ancilla_excitation():
    Psi = initial_dilated_state(np.array([0, 1]), 0.0)
    assert np.allclose(Psi.amplitudes, np.kron([0, 1], NUC_MINUS))


def test_initial_state_with_eta_eight():
    psi = np.array([0, 1], dtype=complex)
    Psi = initial_dilated_state(psi, 8.0 * I2)
    expected = (np.kron(psi, NUC_MINUS) + 8.0 * np.kron(psi, NUC_PLUS)) / math.sqrt(65.0)
    assert np.allclose(Psi.amplitudes, expected)
    selected, probability = postselect_minus(Psi)
    assert np.allclose(selected * math.sqrt(65.0), psi)
    assert probability == pytest.approx(1 / 65)


def test_postselect_minus():
    psi = np.array([0.6, 0.8j])
    selected, probability = postselect_minus(DilatedState(np.kron(psi, NUC_MINUS)))
    assert np.allclose(selected, psi)
    assert probability == pytest.approx(1.0)
    with pytest.raises(PostselectionVanished):
        postselect_minus(np.kron(psi, NUC_PLUS))


def test_dilated_state_shape_checked():
    with pytest.raises(ValueError):
        DilatedState(np.zeros(3, dtype=complex))


def test_zero_tracks_are_identity():
    times = np.linspace(0.0, 1.0, 11)
    traj = DilationTrajectory.from_tracks(times, np.zeros((11, 4)), np.zeros((11, 4)))
    Psi0 = initial_dilated_state(np.array([1, 1j]), 2.0)
    series = evolve_dilated(traj, Psi0)
    assert np.allclose(series.states, Psi0.amplitudes)


def test_hermitian_tracks_act_on_electron_only():
    n = 21
    times = np.linspace(0.0, 1.0, n)
    A = np.tile([0.0, 0.7, 0.0, 0.2], (n, 1))
    traj = DilationTrajectory.from_tracks(times, A, np.zeros((n, 4)))
    psi = np.array([1.0, 0.0], dtype=complex)
    series = evolve_dilated(traj, DilatedState(np.kron(psi, NUC_MINUS)))
    H = 0.7 * SIGMA_X + 0.2 * SIGMA_Z
    assert np.allclose(series.states[-1], np.kron(expm(-1j * H) @ psi, NUC_MINUS), atol=1e-12)
    assert series.times[-1] == pytest.approx(1.0)


def test_trajectory_invariants():
    config = DilationConfig(eta0=8.0, step=1e-3, horizon=1.0)
    traj = build_trajectory(hamiltonian(S3), config)
    assert np.all(np.linalg.eigvalsh(traj.M - I2) > 0.0)
    assert np.allclose(traj.M, traj.M.conj().transpose(0, 2, 1))
    assert np.allclose(traj.eta.conj().transpose(0, 2, 1) @ traj.eta + I2, traj.M, atol=1e-8)
    Hen = traj.dilated_hamiltonians()
    assert np.max(np.abs(Hen - Hen.conj().transpose(0, 2, 1))) < 1e-8
    rebuilt = np.einsum("tp,pij->tij", traj.A, np.stack(PAULIS))
    assert np.allclose(rebuilt, traj.Lambda, atol=1e-10)
    rebuilt = np.einsum("tp,pij->tij", traj.B, np.stack(PAULIS))
    assert np.allclose(rebuilt, traj.Gamma, atol=1e-10)
    assert traj.loss_shift == pytest.approx(eigensystem(S3).lambda1.imag)
    assert set(traj.columns()) == {"t", "A0", "A1", "A2", "A3", "B0", "B1", "B2", "B3"}


def test_dilation_reproduces_nonunitary_evolution():
    config = DilationConfig(eta0=8.0, step=1e-4, horizon=1.5)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    H = hamiltonian(S3)
    run = run_dilated(H, psi0, config)
    assert _max_trace_distance(run, H, psi0) < 1e-6
    norms = np.linalg.norm(run.series.states, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-8)


def test_pure_gain_loss_dilation():
    H = 0.5j * SIGMA_Z
    psi0 = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)
    run = run_dilated(H, psi0, DilationConfig(eta0=8.0, step=1e-4, horizon=1.0))
    assert _max_trace_distance(run, H, psi0) < 1e-6


def test_dilation_correspondence_random_draws():
    rng = np.random.default_rng(2024)
    config = DilationConfig(eta0=8.0, step=1e-4, horizon=1.5)
    draws = 0
    while draws < 20:
        p = SSHParams(
            v=rng.uniform(0.1, 1.2),
            r=rng.uniform(0.1, 1.2),
            gamma=rng.uniform(2.0, 5.0),
            k=rng.uniform(0.0, 2 * math.pi),
        )
        es = eigensystem(p)
        if abs(es.lambda1 - es.lambda2) / p.gamma < 0.2:
            continue
        psi0 = rng.normal(size=2) + 1j * rng.normal(size=2)
        H = hamiltonian(p)
        # PositivityLoss would surface from build_trajectory
        run = run_dilated(H, psi0, config)
        assert np.all(np.linalg.eigvalsh(run.trajectory.M - I2) > 0.0)
        assert _max_trace_distance(run, H, psi0) < 1e-6
        draws += 1


def test_convergence_is_fourth_order():
    H = hamiltonian(S3)
    psi0 = np.array([1.0, 0.0], dtype=complex)

    def final_error(step):
        run = run_dilated(H, psi0, DilationConfig(eta0=8.0, step=step, horizon=0.8))
        direct = evolve_nonunitary(H, psi0, float(run.series.times[-1]))
        return trace_distance(run.postselected[-1], direct)

    coarse = final_error(4e-3)
    fine = final_error(2e-3)
    assert fine > 0.0
    assert coarse / fine > 8.0


def test_trace_distance_resolves_nearby_states():
    a = np.array([1.0, 0.0], dtype=complex)
    assert trace_distance(a, np.array([1.0, 1e-9])) == pytest.approx(1e-9, rel=1e-6)
    assert trace_distance(a, 1j * a) == pytest.approx(0.0, abs=1e-15)
    b = np.array([1.0, 1.0j]) / math.sqrt(2)
    assert trace_distance(a, b) == pytest.approx(math.sqrt(0.5))
