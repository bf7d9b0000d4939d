"""Non-unitary evolution i∂ₜψ = Hψ and the decay-to-eigenstate protocol."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from app.core.config import settings
from app.core.errors import DegenerateDecay, NoOverlap
from app.schemas.params import SSHParams
from app.services.pauli import ComplexMatrix2, as_state, dagger, fidelity
from app.services.ssh_model import eigensystem, hamiltonian

logger = logging.getLogger(__name__)

# U_y† σ_x U_y = σ_z; U_y|0⟩ = |+⟩
U_Y = np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2.0)


@dataclass(frozen=True)
class EvolutionResult:
    times: np.ndarray
    raw_states: np.ndarray
    populations_z: np.ndarray
    fidelity_to_R1: np.ndarray
    populations_x: np.ndarray | None = None


def propagator(H: ComplexMatrix2, t: float) -> np.ndarray:
    """exp(−iHt); spectral form unless the eigenbasis is ill-conditioned."""
    H = np.asarray(H, dtype=complex)
    if t == 0.0:
        return np.eye(H.shape[0], dtype=complex)
    w, V = np.linalg.eig(H)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > settings.condition_switch:
        logger.debug("eigenbasis ill-conditioned, using expm")
        return expm(-1j * H * t)
    return (V * np.exp(-1j * w * t)) @ np.linalg.inv(V)


def evolve_nonunitary(H: ComplexMatrix2, psi0: np.ndarray, t: float) -> np.ndarray:
    if t < 0.0:
        raise ValueError("evolution time must be non-negative")
    return propagator(H, t) @ as_state(psi0)


def evolve_series(H: ComplexMatrix2, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Unnormalized ψ(t) for every t in ``times``, shape (len(times), dim)."""
    psi = as_state(psi0)
    return np.stack([propagator(H, float(t)) @ psi for t in np.asarray(times, dtype=float)])


def decay_horizon(lambda1: complex, lambda2: complex, epsilon: float, gamma: float = 1.0) -> float:
    """ln(1/ε) / (Im λ₁ − Im λ₂); the tie tolerance is in units of ``gamma``."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    gap = lambda1.imag - lambda2.imag
    if gap <= settings.tie_tolerance * gamma:
        raise DegenerateDecay(f"Im λ1 - Im λ2 = {gap:.3e}; no dominant eigenstate")
    return math.log(1.0 / epsilon) / gap


def default_horizon(p: SSHParams, *, emulate_experiment: bool = True, epsilon: float | None = None) -> float:
    es = eigensystem(p)
    horizon = decay_horizon(es.lambda1, es.lambda2, epsilon or settings.decay_epsilon, p.gamma)
    if emulate_experiment:
        horizon = min(horizon, settings.experiment_time_cap)
    return horizon


def _check_overlap(L1: np.ndarray, psi0: np.ndarray) -> None:
    overlap = abs(np.vdot(L1, psi0)) / (np.linalg.norm(L1) * np.linalg.norm(psi0))
    if overlap < settings.overlap_threshold:
        raise NoOverlap(f"initial state is orthogonal to L1 (overlap {overlap:.2e})")


def steady_eigenstate(p: SSHParams, psi0: np.ndarray, horizon: float) -> tuple[np.ndarray, float]:
    es = eigensystem(p)
    if es.ordering_degenerate:
        raise DegenerateDecay(f"Im λ1 = Im λ2 at k={p.k}; state does not settle")
    psi = as_state(psi0)
    _check_overlap(es.L1, psi)
    final = evolve_nonunitary(hamiltonian(p), psi, horizon)
    state = final / np.linalg.norm(final)
    return state, fidelity(es.R1, state)


def rotate_hamiltonian_y(H: ComplexMatrix2) -> ComplexMatrix2:
    return dagger(U_Y) @ np.asarray(H, dtype=complex) @ U_Y


def _population0(states: np.ndarray) -> np.ndarray:
    norms = np.sum(np.abs(states) ** 2, axis=-1)
    return np.abs(states[:, 0]) ** 2 / norms


def evolution_series(p: SSHParams, psi0: np.ndarray, times: np.ndarray) -> EvolutionResult:
    """P₀ᶻ, P₀ˣ and fidelity to R₁ on a time grid.

    P₀ˣ comes from the z-basis population of the rotated evolution started
    in U_y†ψ₀, which is how the x-basis measurement is done on hardware.
    """
    times = np.asarray(times, dtype=float)
    H = hamiltonian(p)
    es = eigensystem(p)
    psi = as_state(psi0)
    raw = evolve_series(H, psi, times)
    rotated = evolve_series(rotate_hamiltonian_y(H), dagger(U_Y) @ psi, times)
    fid = np.array([fidelity(es.R1, s) for s in raw])
    return EvolutionResult(
        times=times,
        raw_states=raw,
        populations_z=_population0(raw),
        fidelity_to_R1=fid,
        populations_x=_population0(rotated),
    )
