"""Pauli constants and small dense-matrix helpers.

A ``ComplexMatrix2`` is a (2, 2) complex ndarray, row-major. Two-qubit
operators are ordered electron ⊗ nuclear on |0↑⟩, |0↓⟩, |−1↑⟩, |−1↓⟩.
"""

import numpy as np

from app.core.errors import ZeroNorm

ComplexMatrix2 = np.ndarray

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)
AXES = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)
PROJ_UP = np.outer(UP, UP.conj())
PROJ_DOWN = np.outer(DOWN, DOWN.conj())

# nuclear ancilla states; the −i prefactor on |+⟩ only fixes a global phase
NUC_MINUS = np.array([1, -1j], dtype=complex) / np.sqrt(2)
NUC_PLUS = -1j * np.array([1, 1j], dtype=complex) / np.sqrt(2)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.swapaxes(m, -1, -2).conj()


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def anti_hermitian_norm(m: np.ndarray) -> np.ndarray:
    """Frobenius norm of M − M† (batched over leading axes)."""
    return np.linalg.norm(m - dagger(m), axis=(-2, -1))


def as_state(psi: np.ndarray) -> np.ndarray:
    vec = np.asarray(psi, dtype=complex).reshape(-1)
    if not np.linalg.norm(vec) > 0.0:
        raise ZeroNorm("state has zero norm")
    return vec


def normalize(psi: np.ndarray) -> np.ndarray:
    vec = as_state(psi)
    return vec / np.linalg.norm(vec)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|⟨â|b̂⟩|² of two pure states given unnormalized."""
    return float(abs(np.vdot(normalize(a), normalize(b))) ** 2)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Trace distance √(1 − |⟨â|b̂⟩|²) of two pure states given unnormalized.

    Computed as ‖â⊗b̂ − b̂⊗â‖/√2.
    """
    u, v = normalize(a), normalize(b)
    wedge = np.outer(u, v) - np.outer(v, u)
    return float(np.linalg.norm(wedge) / np.sqrt(2.0))


def kron_electron(op: np.ndarray) -> np.ndarray:
    return np.kron(op, I2)


def kron_nuclear(op: np.ndarray) -> np.ndarray:
    return np.kron(I2, op)
