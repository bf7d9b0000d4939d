"""Two-tone microwave schedules that realize Λ⊗I + Γ⊗σ_z on an NV centre.

Level order is |0↑⟩, |0↓⟩, |−1↑⟩, |−1↓⟩. Tone 1 drives the electron
transition with the nuclear spin up, tone 2 with it down. Transition
frequencies are ω_n = E(−1, n) − E(0, n), which is the sign that makes
the rotating frame absorb A₃, B₀, B₃ with ω₁ = ω_↑ + 2(A₃ + B₃).
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Callable
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from app.core.errors import StepTooCoarse, ValidationFailure
from app.schemas.params import NVParams
from app.services.dilation import DilatedState, DilationTrajectory, initial_dilated_state
from app.services.integrators import rk4_fixed
from app.services.pauli import (
    I2,
    PAULIS,
    PROJ_DOWN,
    PROJ_UP,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    kron_electron,
)

logger = logging.getLogger(__name__)

SCHEDULE_COLUMNS = ("t", "delta1", "delta2", "Omega1", "Omega2", "phi1", "phi2")

# amplitudes below this are treated as "tone off" for phase bookkeeping
_ZERO_AMPLITUDE = 1e-12

# longest lab-frame integration, μs
LAB_CHECK_MAX_HORIZON = 0.1


@dataclass(frozen=True)
class PulseSample:
    t: float
    omega1: float
    omega2: float
    Omega1: float
    Omega2: float
    phi1: float
    phi2: float


@dataclass(frozen=True)
class PulseSchedule:
    nv: NVParams
    times: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    Omega1: np.ndarray
    Omega2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    resonances: tuple[float, float]
    # A₀, A₃, B₀, B₃ per sample: the part of H_en the rotating frame absorbs
    frame: np.ndarray

    def __post_init__(self) -> None:
        dt = np.diff(self.times)
        if dt.size and (np.any(dt <= 0.0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0)):
            raise ValueError("schedule times must be strictly increasing and uniform")

    @property
    def omega1(self) -> np.ndarray:
        return self.resonances[0] + self.delta1

    @property
    def omega2(self) -> np.ndarray:
        return self.resonances[1] + self.delta2

    @property
    def samples(self) -> list[PulseSample]:
        return [self.sample(j) for j in range(len(self.times))]

    def sample(self, j: int) -> PulseSample:
        return PulseSample(
            t=float(self.times[j]),
            omega1=float(self.omega1[j]),
            omega2=float(self.omega2[j]),
            Omega1=float(self.Omega1[j]),
            Omega2=float(self.Omega2[j]),
            phi1=float(self.phi1[j]),
            phi2=float(self.phi2[j]),
        )

    def emitted_phases(self) -> tuple[np.ndarray, np.ndarray]:
        """Phases held through zero-amplitude samples, then unwrapped."""
        return (
            np.unwrap(_hold_phase(self.phi1, self.Omega1)),
            np.unwrap(_hold_phase(self.phi2, self.Omega2)),
        )


def nv_reduced_hamiltonian(nv: NVParams) -> np.ndarray:
    half = nv.A_zz / 2.0
    return (
        -(nv.D - nv.omega_e - half) * np.kron(SIGMA_Z, I2)
        + (nv.omega_n - half) * np.kron(I2, SIGMA_Z)
        + half * np.kron(SIGMA_Z, SIGMA_Z)
    )


def resonance_frequencies(nv: NVParams) -> tuple[float, float]:
    """(ω_↑, ω_↓) from the diagonal of H₀; ω_↑ − ω_↓ = −2A_zz."""
    # E(−1, n) − E(0, n), the negative of E(0, n) − E(−1, n); both tones come out positive
    E = np.real(np.diag(nv_reduced_hamiltonian(nv)))
    return float(E[2] - E[0]), float(E[3] - E[1])


def _wrapped_phase(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    phi = -np.arctan2(y, x)
    return np.where(phi <= -math.pi, phi + 2.0 * math.pi, phi)


def _hold_phase(phi: np.ndarray, amplitude: np.ndarray) -> np.ndarray:
    held = np.array(phi, dtype=float)
    for j in range(len(held)):
        if amplitude[j] <= _ZERO_AMPLITUDE:
            held[j] = held[j - 1] if j else 0.0
    return held


def compile_schedule(traj: DilationTrajectory, nv: NVParams) -> PulseSchedule:
    A, B = traj.A, traj.B
    x1, y1 = A[:, 1] + B[:, 1], A[:, 2] + B[:, 2]
    x2, y2 = A[:, 1] - B[:, 1], A[:, 2] - B[:, 2]
    schedule = PulseSchedule(
        nv=nv,
        times=np.asarray(traj.times, dtype=float),
        delta1=2.0 * (A[:, 3] + B[:, 3]),
        delta2=2.0 * (A[:, 3] - B[:, 3]),
        Omega1=np.hypot(x1, y1) / math.pi,
        Omega2=np.hypot(x2, y2) / math.pi,
        phi1=_wrapped_phase(y1, x1),
        phi2=_wrapped_phase(y2, x2),
        resonances=resonance_frequencies(nv),
        frame=np.column_stack([A[:, 0], A[:, 3], B[:, 0], B[:, 3]]),
    )
    logger.debug(
        "compiled %d samples, max Omega1=%.4g MHz, max Omega2=%.4g MHz",
        len(schedule.times),
        float(np.max(schedule.Omega1, initial=0.0)),
        float(np.max(schedule.Omega2, initial=0.0)),
    )
    return schedule


def _drive(amplitude: float, phase: float) -> np.ndarray:
    return math.pi * amplitude * (math.cos(phase) * SIGMA_X - math.sin(phase) * SIGMA_Y)


def effective_hamiltonian(sample: PulseSample, A3: float, B0: float, B3: float) -> np.ndarray:
    return (
        A3 * np.kron(SIGMA_Z, I2)
        + B0 * np.kron(I2, SIGMA_Z)
        + B3 * np.kron(SIGMA_Z, SIGMA_Z)
        + np.kron(_drive(sample.Omega1, sample.phi1), PROJ_UP)
        + np.kron(_drive(sample.Omega2, sample.phi2), PROJ_DOWN)
    )


def two_qubit_coefficient(H: np.ndarray, electron: np.ndarray, nuclear: np.ndarray) -> float:
    return float(np.real(np.trace(H @ np.kron(electron, nuclear))) / 4.0)


def decompile(schedule: PulseSchedule) -> tuple[np.ndarray, np.ndarray]:
    """Read A, B tracks back from H_eff + A₀·I at every sample."""
    n = len(schedule.times)
    A = np.empty((n, 4))
    B = np.empty((n, 4))
    for j in range(n):
        A0, A3, B0, B3 = schedule.frame[j]
        H = effective_hamiltonian(schedule.sample(j), A3, B0, B3) + A0 * np.eye(4)
        for i, sigma in enumerate(PAULIS):
            A[j, i] = two_qubit_coefficient(H, sigma, I2)
            B[j, i] = two_qubit_coefficient(H, sigma, SIGMA_Z)
    return A, B


def _tracks_at(times: np.ndarray, values: np.ndarray) -> Callable[[float], np.ndarray]:
    return lambda t: np.array([np.interp(t, times, col) for col in values.T])


def rotating_frame_check(
    nv: NVParams,
    traj: DilationTrajectory,
    schedule: PulseSchedule,
    horizon: float,
    step: float | None = None,
    Psi0: DilatedState | None = None,
) -> float:
    """Largest ‖ψ_rot(t) − ψ_en(t)‖ between the lab-frame drive and H_en.

    The lab run is integrated in the interaction picture of H₀ with the full
    two-tone drive 2πΩ_j cos(∫ω_j + φ_j) σ_x⊗I (counter-rotating terms kept)
    and mapped into the rotating frame by exp(−i∫(A₀ + A₃σ_z⊗I + B₀I⊗σ_z
    + B₃σ_z⊗σ_z)). The reference integrates i∂ₜΨ = H_en(t)Ψ directly.
    """
    if horizon > LAB_CHECK_MAX_HORIZON:
        raise ValidationFailure(f"lab-frame check horizon {horizon:g} μs exceeds {LAB_CHECK_MAX_HORIZON:g} μs")
    if horizon > traj.times[-1] + 1e-12:
        raise ValueError("horizon exceeds the trajectory")
    max_frequency = float(
        max(
            np.max(np.abs(schedule.omega1)),
            np.max(np.abs(schedule.omega2)),
            *map(abs, schedule.resonances),
            1e-12,
        )
    )
    limit = 1.0 / (50.0 * max_frequency)
    step = limit / 2.0 if step is None else step
    if step > limit:
        raise StepTooCoarse(f"step {step:.3e} μs exceeds 1/(50·{max_frequency:.4g}) = {limit:.3e} μs")
    n = max(int(math.ceil(horizon / step)), 1)
    grid = np.linspace(0.0, horizon, n + 1)

    if Psi0 is None:
        eta0 = traj.eta[0] if traj.eta is not None else 1.0
        Psi0 = initial_dilated_state(np.array([0.0, 1.0]), eta0)
    psi0 = Psi0.amplitudes

    E = np.real(np.diag(nv_reduced_hamiltonian(nv)))
    detuning = E[:, None] - E[None, :]
    X = kron_electron(SIGMA_X)
    omega_up, omega_down = schedule.resonances
    phi1, phi2 = schedule.emitted_phases()
    t_s = schedule.times
    int_delta1 = cumulative_trapezoid(schedule.delta1, t_s, initial=0.0)
    int_delta2 = cumulative_trapezoid(schedule.delta2, t_s, initial=0.0)

    def lab_rhs(t: float, psi: np.ndarray) -> np.ndarray:
        phase1 = omega_up * t + np.interp(t, t_s, int_delta1) + np.interp(t, t_s, phi1)
        phase2 = omega_down * t + np.interp(t, t_s, int_delta2) + np.interp(t, t_s, phi2)
        d = 2.0 * math.pi * (
            np.interp(t, t_s, schedule.Omega1) * math.cos(phase1)
            + np.interp(t, t_s, schedule.Omega2) * math.cos(phase2)
        )
        H_int = d * X * np.exp(1j * detuning * t)
        return -1j * (H_int @ psi)

    tracks = _tracks_at(traj.times, np.column_stack([traj.A, traj.B]))
    sigma_e = [np.kron(s, I2) for s in PAULIS]
    sigma_en = [np.kron(s, SIGMA_Z) for s in PAULIS]

    def reference_rhs(t: float, psi: np.ndarray) -> np.ndarray:
        c = tracks(t)
        H = sum(c[i] * sigma_e[i] + c[4 + i] * sigma_en[i] for i in range(4))
        return -1j * (H @ psi)

    lab = rk4_fixed(lab_rhs, psi0, grid)
    reference = rk4_fixed(reference_rhs, psi0, grid)

    # rotating-frame phases per level: A₀ + A₃ s_e + B₀ s_n + B₃ s_e s_n
    s_e = np.array([1.0, 1.0, -1.0, -1.0])
    s_n = np.array([1.0, -1.0, 1.0, -1.0])
    frame_integral = cumulative_trapezoid(schedule.frame, t_s, axis=0, initial=0.0)
    F = np.column_stack([np.interp(grid, t_s, col) for col in frame_integral.T])
    level_phase = F[:, [0]] + F[:, [1]] * s_e + F[:, [2]] * s_n + F[:, [3]] * (s_e * s_n)
    rotated = np.exp(-1j * level_phase) * lab
    deviation = float(np.max(np.linalg.norm(rotated - reference, axis=1)))
    logger.info("rotating-frame check over %.3g μs (%d steps): max deviation %.3e", horizon, n, deviation)
    return deviation


def write_schedule(schedule: PulseSchedule, path: Path, metadata: dict | None = None) -> Path:
    """Columnar schedule file plus a JSON sidecar with NV and frame data."""
    path = Path(path)
    phi1, phi2 = schedule.emitted_phases()
    table = np.column_stack(
        [schedule.times, schedule.delta1, schedule.delta2, schedule.Omega1, schedule.Omega2, phi1, phi2]
    )
    np.savetxt(path, table, delimiter=",", header=",".join(SCHEDULE_COLUMNS), comments="", fmt="%.17g")
    sidecar = {
        "nv": schedule.nv.model_dump(),
        "resonances": {"omega_up": schedule.resonances[0], "omega_down": schedule.resonances[1]},
        "frame_columns": ["A0", "A3", "B0", "B3"],
        "frame": schedule.frame.tolist(),
        "metadata": metadata or {},
    }
    sidecar_path = path.with_suffix(".json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    return sidecar_path
