"""Hermitian two-qubit dilation of a 2×2 non-Hermitian Hamiltonian.

The electron carries the system, the nuclear spin the ancilla. With
M(t) = η†η + I evolving as i dM/dt = H†M − MH, the dilated state
|Ψ⟩ = |ψ⟩|−⟩ + η|ψ⟩|+⟩ obeys i∂ₜ|Ψ⟩ = (Λ⊗I + Γ⊗σ_z)|Ψ⟩ with Hermitian
Λ, Γ, and the |−⟩ component of |Ψ⟩ is ψ(t) itself.

The generator is shifted by a uniform loss −i·s·I before dilation; the
shift only rescales ψ(t) and keeps M − I positive over long horizons.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from app.core.config import settings
from app.core.errors import NotHermitian, NotPositive, PositivityLoss, PostselectionVanished
from app.schemas.params import DilationConfig
from app.services.integrators import derivative_4th, rk4_fixed
from app.services.pauli import (
    I2,
    NUC_MINUS,
    NUC_PLUS,
    PAULIS,
    SIGMA_Z,
    ComplexMatrix2,
    anti_hermitian_norm,
    as_state,
    dagger,
    hermitize,
    normalize,
)

logger = logging.getLogger(__name__)

_PAULI_STACK = np.stack(PAULIS)


@dataclass(frozen=True)
class DilationTrajectory:
    times: np.ndarray
    # None when rebuilt from exported A, B tracks
    M: np.ndarray | None
    eta: np.ndarray | None
    Lambda: np.ndarray
    Gamma: np.ndarray
    A: np.ndarray
    B: np.ndarray
    loss_shift: float = 0.0
    # largest ‖X − X†‖ of Λ, Γ before symmetrization
    hermiticity_deviation: float = 0.0

    @classmethod
    def from_tracks(cls, times: np.ndarray, A: np.ndarray, B: np.ndarray) -> "DilationTrajectory":
        """Rebuild Λ, Γ from Pauli tracks (e.g. a columnar export)."""
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        lam = np.einsum("tp,pij->tij", A.astype(complex), _PAULI_STACK)
        gam = np.einsum("tp,pij->tij", B.astype(complex), _PAULI_STACK)
        return cls(times=np.asarray(times, dtype=float), M=None, eta=None, Lambda=lam, Gamma=gam, A=A, B=B)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def dilated_hamiltonians(self) -> np.ndarray:
        """H_en(t) = Λ⊗I + Γ⊗σ_z at every sample, shape (n, 4, 4)."""
        n = len(self.times)
        lam = np.einsum("tab,cd->tacbd", self.Lambda, I2).reshape(n, 4, 4)
        gam = np.einsum("tab,cd->tacbd", self.Gamma, SIGMA_Z).reshape(n, 4, 4)
        return lam + gam

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t": self.times}
        for i in range(4):
            cols[f"A{i}"] = self.A[:, i]
        for i in range(4):
            cols[f"B{i}"] = self.B[:, i]
        return cols


@dataclass(frozen=True)
class DilatedState:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (4,):
            raise ValueError("dilated state needs four amplitudes")


@dataclass(frozen=True)
class DilatedSeries:
    times: np.ndarray
    states: np.ndarray

    def at(self, index: int) -> DilatedState:
        return DilatedState(self.states[index])


@dataclass(frozen=True)
class DilatedRun:
    trajectory: DilationTrajectory
    series: DilatedSeries
    postselected: np.ndarray
    success_probability: np.ndarray = field(repr=False)


def auto_loss_shift(H: ComplexMatrix2) -> float:
    return max(float(np.max(np.linalg.eigvals(H).imag)), 0.0)


def _check_positive(M: np.ndarray, floor: float, times: np.ndarray | None = None) -> None:
    low = np.linalg.eigvalsh(M - I2).min(axis=-1)
    bad = np.flatnonzero(low <= floor)
    if bad.size:
        j = int(bad[0])
        where = f" at t={times[j]:.4g} μs" if times is not None else ""
        raise PositivityLoss(f"min eig(M - I) = {low[j]:.3e}{where}; raise eta0 or shorten the horizon")


def solve_M(H: ComplexMatrix2, config: DilationConfig) -> np.ndarray:
    """M(t) on ``config.t_grid()`` from i dM/dt = H†M − MH, re-symmetrized each step."""
    H = np.asarray(H, dtype=complex)
    Hd = dagger(H)
    times = config.t_grid()

    def rhs(_t: float, m: np.ndarray) -> np.ndarray:
        return -1j * (Hd @ m - m @ H)

    M = rk4_fixed(rhs, config.m0(), times, after_step=hermitize)
    _check_positive(M, config.positivity_floor, times)
    return M


def eta_from_M(M: np.ndarray) -> np.ndarray:
    """Hermitian positive square root of M − I (batched over leading axes)."""
    w, V = np.linalg.eigh(hermitize(np.asarray(M, dtype=complex)) - I2)
    if np.any(w <= 0.0):
        raise NotPositive(f"M - I has eigenvalue {w.min():.3e}")
    return (V * np.sqrt(w)[..., None, :]) @ dagger(V)


def dilated_hamiltonian(
    H: ComplexMatrix2, eta: np.ndarray, deta_dt: np.ndarray, M_inv: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Λ = [H + iη̇η + ηHη]M⁻¹, Γ = [iHη − iηH + η̇]M⁻¹, symmetrized.

    Works on single samples or stacks. The third value is the largest
    anti-Hermitian residue seen before symmetrization.
    """
    lam = (H + 1j * deta_dt @ eta + eta @ H @ eta) @ M_inv
    gam = (1j * H @ eta - 1j * eta @ H + deta_dt) @ M_inv
    deviation = float(max(np.max(anti_hermitian_norm(lam)), np.max(anti_hermitian_norm(gam))))
    return hermitize(lam), hermitize(gam), deviation


def pauli_decompose(X: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """(c₀, c₁, c₂, c₃) with c_i = Tr(X σ_i)/2; batched along leading axes."""
    X = np.asarray(X, dtype=complex)
    coeffs = 0.5 * np.einsum("...ij,pji->...p", X, _PAULI_STACK)
    scale = max(1.0, float(np.max(np.abs(X))))
    residue = float(np.max(np.abs(coeffs.imag))) if coeffs.size else 0.0
    if residue > tol * scale:
        raise NotHermitian(f"imaginary Pauli residue {residue:.3e}")
    return coeffs.real


def build_trajectory(H: ComplexMatrix2, config: DilationConfig) -> DilationTrajectory:
    H = np.asarray(H, dtype=complex)
    shift = auto_loss_shift(H) if config.loss_shift is None else config.loss_shift
    Hs = H - 1j * shift * I2
    times = config.t_grid()
    M = solve_M(Hs, config)
    eta = eta_from_M(M)
    deta = derivative_4th(eta, config.step)
    lam, gam, deviation = dilated_hamiltonian(Hs, eta, deta, np.linalg.inv(M))
    if deviation > settings.hermiticity_warn:
        logger.warning("dilated Hamiltonian symmetrized, pre-symmetrization residue %.3e", deviation)
    logger.debug("dilation built: %d samples, loss shift %.4g", len(times), shift)
    return DilationTrajectory(
        times=times,
        M=M,
        eta=eta,
        Lambda=lam,
        Gamma=gam,
        A=pauli_decompose(lam),
        B=pauli_decompose(gam),
        loss_shift=shift,
        hermiticity_deviation=deviation,
    )


def initial_dilated_state(psi0: np.ndarray, eta0_matrix: np.ndarray | float) -> DilatedState:
    psi = as_state(psi0)
    eta0 = np.asarray(eta0_matrix, dtype=complex)
    if eta0.ndim == 0:
        eta0 = eta0 * I2
    Psi = np.kron(psi, NUC_MINUS) + np.kron(eta0 @ psi, NUC_PLUS)
    return DilatedState(normalize(Psi))


def _hermitian_exp(K: np.ndarray) -> np.ndarray:
    """exp(−iK) for a stack of Hermitian K."""
    w, V = np.linalg.eigh(hermitize(K))
    return (V * np.exp(-1j * w)[..., None, :]) @ dagger(V)


def evolve_dilated(traj: DilationTrajectory, Psi0: DilatedState) -> DilatedSeries:
    """Fourth-order Magnus propagation over pairs of trajectory intervals.

    Each step spans samples j, j+1, j+2 and returns the state on every
    even sample: Ω = −i·h/6·(H₀ + 4H½ + H₁) + h²/12·[H₀, H₁].
    """
    Hen = traj.dilated_hamiltonians()
    h = 2.0 * traj.step
    H0, Hm, H1 = Hen[0:-2:2], Hen[1:-1:2], Hen[2::2]
    K = (h / 6.0) * (H0 + 4.0 * Hm + H1) + 1j * (h * h / 12.0) * (H0 @ H1 - H1 @ H0)
    steps = _hermitian_exp(K)
    states = np.empty((len(steps) + 1, 4), dtype=complex)
    states[0] = Psi0.amplitudes
    for j, U in enumerate(steps):
        states[j + 1] = U @ states[j]
    return DilatedSeries(times=traj.times[::2].copy(), states=states)


def postselect_minus(Psi: DilatedState | np.ndarray) -> tuple[np.ndarray, float]:
    amps = Psi.amplitudes if isinstance(Psi, DilatedState) else np.asarray(Psi, dtype=complex)
    psi = amps.reshape(2, 2) @ NUC_MINUS.conj()
    probability = float(np.vdot(psi, psi).real)
    if probability < 1e-12:
        raise PostselectionVanished(f"post-selection probability {probability:.3e}")
    return psi, probability


def run_dilated(H: ComplexMatrix2, psi0: np.ndarray, config: DilationConfig) -> DilatedRun:
    """Build, evolve and post-select; normalized electron states on the even samples."""
    traj = build_trajectory(H, config)
    series = evolve_dilated(traj, initial_dilated_state(psi0, traj.eta[0]))
    selected = []
    probabilities = []
    for state in series.states:
        psi, prob = postselect_minus(state)
        selected.append(psi / np.sqrt(prob))
        probabilities.append(prob)
    return DilatedRun(
        trajectory=traj,
        series=series,
        postselected=np.array(selected),
        success_probability=np.array(probabilities),
    )
