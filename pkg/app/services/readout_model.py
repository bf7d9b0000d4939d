"""Photoluminescence readout of the four NV levels and population inversion.

Populations are ordered |0↑⟩, |0↓⟩, |−1↑⟩, |−1↓⟩. A flip sequence is a
tuple of π-pulse names applied left to right before the PL measurement.
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.core.config import settings
from app.core.errors import SingularRates, SubspaceEmpty, UnknownFlip
from app.schemas.params import PLRates, Populations
from app.services.dilation import DilatedState
from app.services.pauli import DOWN, NUC_MINUS, NUC_PLUS, UP

logger = logging.getLogger(__name__)

# level swaps, zero-based
FLIP_SWAPS: dict[str, tuple[int, int]] = {
    "pi13": (0, 2),
    "pi24": (1, 3),
    "pi34": (2, 3),
}

READOUT_SEQUENCES: tuple[tuple[str, ...], ...] = ((), ("pi24",), ("pi13",), ("pi13", "pi34"))

# nuclear π/2 map |−⟩ → |↑⟩, |+⟩ → |↓⟩
NUCLEAR_ROTATION = np.outer(UP, NUC_MINUS.conj()) + np.outer(DOWN, NUC_PLUS.conj())


@dataclass(frozen=True)
class ElectronZEstimate:
    sigma_z: float
    up_fraction: float
    populations: Populations
    raw: Populations
    counts: np.ndarray


def _as_sequence(flips: str | tuple[str, ...] | list[str] | None) -> tuple[str, ...]:
    if flips is None:
        return ()
    if isinstance(flips, str):
        return tuple(f for f in flips.replace("+", " ").split() if f)
    return tuple(flips)


def permute(P: np.ndarray, flips: tuple[str, ...] | list[str] | str | None) -> np.ndarray:
    """Apply π-pulse level swaps left to right."""
    p = np.array(P, dtype=float)
    for name in _as_sequence(flips):
        if name not in FLIP_SWAPS:
            raise UnknownFlip(f"unknown flip {name!r}; expected one of {sorted(FLIP_SWAPS)}")
        a, b = FLIP_SWAPS[name]
        p[[a, b]] = p[[b, a]]
    return p


def apply_flips(P: np.ndarray, flips: tuple[str, ...] | list[str] | str | None) -> np.ndarray:
    sequence = _as_sequence(flips)
    if sequence not in READOUT_SEQUENCES:
        raise UnknownFlip(f"{sequence!r} is not one of the readout configurations {READOUT_SEQUENCES}")
    return permute(P, sequence)


def observe(P: Populations, rates: PLRates, flips: tuple[str, ...] | list[str] | str | None = ()) -> float:
    return float(apply_flips(P.as_array(), flips) @ rates.as_array())


def measurement_matrix(rates: PLRates) -> np.ndarray:
    """Rows: expected counts per unit population for each readout configuration."""
    N = rates.as_array()
    basis = np.eye(4)
    return np.array([[apply_flips(basis[i], seq) @ N for i in range(4)] for seq in READOUT_SEQUENCES])


def invert(measurements: np.ndarray, rates: PLRates) -> Populations:
    matrix = measurement_matrix(rates)
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond >= settings.rate_condition_limit:
        raise SingularRates(f"PL-rate matrix is singular (cond={cond:.3e}); rates {rates.as_array().tolist()}")
    return Populations.from_array(np.linalg.solve(matrix, np.asarray(measurements, dtype=float)))


def project_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {p ≥ 0, Σp = 1} by the sort-and-threshold rule."""
    v = np.asarray(values, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, len(u) + 1)
    rho = int(np.nonzero(u - (css - 1.0) / j > 0)[0][-1]) + 1
    tau = (css[rho - 1] - 1.0) / rho
    return np.maximum(v - tau, 0.0)


def mle_normalize(raw: Populations) -> Populations:
    if raw.feasible:
        return raw
    return Populations.from_array(project_simplex(raw.as_array()))


def populations_after_nuclear_rotation(Psi: DilatedState | np.ndarray) -> np.ndarray:
    amps = Psi.amplitudes if isinstance(Psi, DilatedState) else np.asarray(Psi, dtype=complex)
    rotated = amps.reshape(2, 2) @ NUCLEAR_ROTATION.T
    p = np.abs(rotated.reshape(-1)) ** 2
    return p / p.sum()


def _up_fraction(P: np.ndarray) -> float:
    subspace = P[0] + P[2]
    if subspace < 1e-10:
        raise SubspaceEmpty(f"P1 + P3 = {subspace:.3e}; nothing to renormalize")
    return float(P[0] / subspace)


def measure_electron_z(
    Psi: DilatedState | np.ndarray,
    rates: PLRates,
    shots: int,
    rng_seed: int | np.random.Generator | None = None,
) -> ElectronZEstimate:
    """Simulated Poisson readout of ⟨σ_z⟩ in the post-selected (nuclear ↑) subspace."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    P_true = populations_after_nuclear_rotation(Psi)
    expected = measurement_matrix(rates) @ P_true
    counts = rng.poisson(shots * expected)
    raw = invert(counts / shots, rates)
    P = mle_normalize(raw)
    fraction = _up_fraction(P.as_array())
    return ElectronZEstimate(
        sigma_z=2.0 * fraction - 1.0,
        up_fraction=fraction,
        populations=P,
        raw=raw,
        counts=counts,
    )


def sigma_z_standard_error(Psi: DilatedState | np.ndarray, rates: PLRates, shots: int) -> float:
    """Delta-method standard error of ⟨σ_z⟩ from Poisson count variance."""
    P = populations_after_nuclear_rotation(Psi)
    matrix = measurement_matrix(rates)
    inverse = np.linalg.inv(matrix)
    count_var = (matrix @ P) / shots
    cov = inverse @ np.diag(count_var) @ inverse.T
    subspace = P[0] + P[2]
    if subspace < 1e-10:
        raise SubspaceEmpty(f"P1 + P3 = {subspace:.3e}; nothing to renormalize")
    grad = np.zeros(4)
    grad[0] = 2.0 * P[2] / subspace**2
    grad[2] = -2.0 * P[0] / subspace**2
    return float(np.sqrt(grad @ cov @ grad))
