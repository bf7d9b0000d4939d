"""Non-Hermitian SSH Bloch Hamiltonian and its exact 2×2 eigenstructure.

H(k) = γ[h_x σ_x + (h_z + i/2) σ_z],  h_x = v + r cos k,  h_z = r sin k.

Eigenvectors are kept in the unnormalized closed form
R₁ = (cos θ/2, −sin θ/2), R₂ = (sin θ/2, cos θ/2), with L₁,₂ the same
expressions at θ*; tan θ = −h_x/(h_z + i/2). With this choice
⟨L_i|R_j⟩ = δ_ij exactly.
"""

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel

from app.core.config import settings
from app.core.errors import ExceptionalPoint, PhaseBoundary
from app.schemas.params import SSHParams
from app.services.pauli import AXES, SIGMA_X, SIGMA_Z, ComplexMatrix2, as_state

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenSystem:
    theta: complex
    lambda1: complex
    lambda2: complex
    R1: np.ndarray
    R2: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    ordering_degenerate: bool

    @property
    def imaginary_gap(self) -> float:
        return self.lambda1.imag - self.lambda2.imag


class PhaseClass(BaseModel):
    w: float
    enclosed_ep_count: int


def _gain_term(p: SSHParams) -> complex:
    return complex(p.h_z, 0.0 if p.hermitian_limit else 0.5)


def hamiltonian(p: SSHParams) -> ComplexMatrix2:
    return p.gamma * (p.h_x * SIGMA_X + _gain_term(p) * SIGMA_Z)


def right_vectors(theta: complex) -> tuple[np.ndarray, np.ndarray]:
    c, s = cmath.cos(theta / 2), cmath.sin(theta / 2)
    return np.array([c, -s], dtype=complex), np.array([s, c], dtype=complex)


def left_vectors(theta: complex) -> tuple[np.ndarray, np.ndarray]:
    return right_vectors(theta.conjugate())


def theta_for(h_x: float, c: complex, e1: complex) -> complex:
    """Principal θ with cos θ = c/e1, sin θ = −h_x/e1 (so R₁ carries eigenvalue e1)."""
    return -1j * cmath.log((c - 1j * h_x) / e1)


def eigensystem(p: SSHParams) -> EigenSystem:
    c = _gain_term(p)
    e = cmath.sqrt(p.h_x**2 + c * c)
    if 2.0 * abs(e) < settings.gap_tolerance:
        raise ExceptionalPoint(
            f"eigenvalues coalesce at v={p.v}, r={p.r}, k={p.k} (|λ1-λ2|={2 * abs(e) * p.gamma:.3e})"
        )
    degenerate = abs(2.0 * e.imag) < settings.tie_tolerance
    if degenerate:
        e1 = e if e.real >= 0.0 else -e
    else:
        e1 = e if e.imag > 0.0 else -e
    theta = theta_for(p.h_x, c, e1)
    r1, r2 = right_vectors(theta)
    l1, l2 = left_vectors(theta)
    return EigenSystem(
        theta=theta,
        lambda1=p.gamma * e1,
        lambda2=-p.gamma * e1,
        R1=r1,
        R2=r2,
        L1=l1,
        L2=l2,
        ordering_degenerate=degenerate,
    )


def exceptional_momenta(v: float, r: float, tol: float = 1e-12) -> list[tuple[float, str]]:
    """Momenta in [0, 2π) where (h_x, h_z) hits (±1/2, 0)."""
    found: list[tuple[float, str]] = []
    for k in (0.0, math.pi):
        if abs(r * math.sin(k)) > tol and r != 0.0:
            continue
        h_x = v + r * math.cos(k)
        for target, label in ((0.5, "+1/2"), (-0.5, "-1/2")):
            if abs(h_x - target) <= tol:
                found.append((k, f"h_x={label}, h_z=0 at k={k / math.pi:g}π"))
    return found


def classify_phase(v: float, r: float) -> PhaseClass:
    """Count exceptional points inside the circle (v + r cos k, r sin k)."""
    tol = settings.phase_boundary_tolerance
    radius = abs(r)
    enclosed = 0
    for ep in (0.5, -0.5):
        distance = abs(ep - v)
        if abs(distance - radius) <= tol:
            raise PhaseBoundary(f"(v={v}, r={r}) lies on the boundary through h_x={ep:+g}")
        if distance < radius:
            enclosed += 1
    return PhaseClass(w=enclosed / 2.0, enclosed_ep_count=enclosed)


def normalized_expectation(state: np.ndarray, axis: str) -> float:
    psi = as_state(state)
    op = AXES[axis]
    value = np.vdot(psi, op @ psi) / np.vdot(psi, psi)
    return float(value.real)


def texture(state: np.ndarray) -> tuple[float, float, float]:
    return tuple(normalized_expectation(state, a) for a in ("x", "y", "z"))  # type: ignore[return-value]


def band_crossings(v: float, r: float) -> list[float]:
    """Momenta in [0, 2π) where Im λ₁ = Im λ₂: h_z = 0 with |h_x| > 1/2."""
    if r == 0.0:
        return []
    return [k for k in (0.0, math.pi) if abs(v + r * math.cos(k)) > 0.5]


def gauge_fixed_pair(theta: complex) -> tuple[np.ndarray, np.ndarray]:
    """(L̃, R̃) = (e^{−iθ*/2}L₁, e^{−iθ/2}R₁): single-valued in θ mod 2π, ⟨L̃|R̃⟩ = 1."""
    r1, _ = right_vectors(theta)
    l1, _ = left_vectors(theta)
    return cmath.exp(-0.5j * theta.conjugate()) * l1, cmath.exp(-0.5j * theta) * r1


def im_theta_sign(p: SSHParams) -> int:
    """Sign of Im θ at p.k, shared by both bands: it follows h_x."""
    return 1 if p.h_x >= 0.0 else -1
