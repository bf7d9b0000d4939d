import math

import numpy as np
import pytest

from app.core.errors import ExceptionalPoint, PhaseBoundary, ZeroNorm
from app.schemas.params import SSHParams
from app.services.pauli import SIGMA_X, SIGMA_Y, SIGMA_Z
from app.services.ssh_model import (
    band_crossings,
    classify_phase,
    eigensystem,
    exceptional_momenta,
    gauge_fixed_pair,
    hamiltonian,
    im_theta_sign,
    normalized_expectation,
)


def _random_params(rng, count=100):
    out = []
    while len(out) < count:
        p = SSHParams(
            v=rng.uniform(-1.5, 1.5),
            r=rng.uniform(0.0, 1.5),
            gamma=rng.uniform(0.5, 5.0),
            k=rng.uniform(0.0, 2 * math.pi),
        )
        es = eigensystem(p)
        # keep away from exceptional points, where the eigenbasis degenerates
        if abs(es.lambda1 - es.lambda2) / p.gamma > 0.2:
            out.append(p)
    return out


def test_hamiltonian_direct_substitution():
    H = hamiltonian(SSHParams(v=0.3, r=0.18, gamma=1.0, k=0.0))
    expected = 0.48 * SIGMA_X + 0.5j * SIGMA_Z
    assert np.allclose(H, expected, atol=1e-15)


def test_hamiltonian_zero_hopping_is_pure_gain_loss():
    H = hamiltonian(SSHParams(v=0.0, r=0.0, gamma=1.0, k=1.234))
    assert np.allclose(H, 0.5j * SIGMA_Z)


def test_hamiltonian_scalar_oracle():
    p = SSHParams(v=0.3, r=1.0, gamma=3.5, k=0.3 * math.pi)
    h_x = 0.3 + math.cos(0.3 * math.pi)
    h_z = math.sin(0.3 * math.pi)
    H = hamiltonian(p)
    assert H[0, 1] == pytest.approx(3.5 * h_x)
    assert H[1, 0] == pytest.approx(3.5 * h_x)
    assert H[0, 0] == pytest.approx(3.5 * complex(h_z, 0.5))
    assert H[1, 1] == pytest.approx(-3.5 * complex(h_z, 0.5))


def test_hermitian_limit_drops_gain_term():
    H = hamiltonian(SSHParams(v=0.3, r=1.0, k=0.4, hermitian_limit=True))
    assert np.allclose(H, H.conj().T)


def test_eigen_residuals_and_biorthogonality():
    rng = np.random.default_rng(7)
    for p in _random_params(rng):
        H = hamiltonian(p)
        es = eigensystem(p)
        scale = np.linalg.norm(H)
        assert np.linalg.norm(H @ es.R1 - es.lambda1 * es.R1) <= 1e-10 * scale
        assert np.linalg.norm(H @ es.R2 - es.lambda2 * es.R2) <= 1e-10 * scale
        Hd = H.conj().T
        assert np.linalg.norm(Hd @ es.L1 - np.conj(es.lambda1) * es.L1) <= 1e-10 * scale
        assert np.linalg.norm(Hd @ es.L2 - np.conj(es.lambda2) * es.L2) <= 1e-10 * scale
        assert abs(np.vdot(es.L1, es.R2)) < 1e-10
        assert abs(np.vdot(es.L2, es.R1)) < 1e-10
        assert es.lambda1.imag >= es.lambda2.imag
        assert es.lambda1 == pytest.approx(-es.lambda2)


def test_chiral_symmetry():
    rng = np.random.default_rng(3)
    for p in _random_params(rng, 100):
        H = hamiltonian(p)
        assert np.allclose(SIGMA_Y @ H @ SIGMA_Y, -H, atol=1e-12)


def test_partner_band_expectations():
    rng = np.random.default_rng(11)
    for p in _random_params(rng, 100):
        es = eigensystem(p)
        for axis in ("x", "z"):
            assert normalized_expectation(es.R1, axis) == pytest.approx(
                -normalized_expectation(es.R2, axis), abs=1e-10
            )
        assert normalized_expectation(es.R1, "y") == pytest.approx(normalized_expectation(es.R2, "y"), abs=1e-10)
        total = sum(normalized_expectation(es.R1, a) ** 2 for a in ("x", "y", "z"))
        assert total == pytest.approx(1.0, abs=1e-10)


def test_shared_normalization_of_closed_forms():
    es = eigensystem(SSHParams(v=0.3, r=1.0, gamma=3.5, k=0.7))
    norms = [np.vdot(v, v).real for v in (es.R1, es.R2, es.L1, es.L2)]
    assert np.allclose(norms, norms[0])


@pytest.mark.parametrize(
    "params,sx,sz",
    [
        (SSHParams(v=0.3, r=0.18, k=0.0), 0.000, 0.280),
        (SSHParams(v=0.3, r=1.0, gamma=3.5, k=0.5 * math.pi), 0.235, 0.965),
        (SSHParams(v=0.3, r=1.0, gamma=3.5, k=0.1 * math.pi), 0.891, 0.259),
        (SSHParams(v=0.3, r=0.3, gamma=4.0, k=0.5 * math.pi), 0.280, 0.870),
    ],
)
def test_texture_of_dominant_eigenvector(params, sx, sz):
    R1 = eigensystem(params).R1
    assert normalized_expectation(R1, "x") == pytest.approx(sx, abs=1e-3)
    assert normalized_expectation(R1, "z") == pytest.approx(sz, abs=1e-3)


def test_real_spectrum_at_band_crossing_is_flagged():
    es = eigensystem(SSHParams(v=0.3, r=1.0, gamma=3.5, k=math.pi))
    assert abs(es.lambda1.imag) < 1e-12
    assert abs(es.lambda2.imag) < 1e-12
    assert es.ordering_degenerate
    assert es.lambda1.real > es.lambda2.real


def test_exceptional_point_raises():
    with pytest.raises(ExceptionalPoint):
        eigensystem(SSHParams(v=0.5, r=0.0, k=0.0))


def test_exceptional_momenta():
    assert [k for k, _ in exceptional_momenta(0.5, 0.0)] == [0.0, math.pi]
    assert exceptional_momenta(0.3, 0.18) == []
    found = exceptional_momenta(0.8, 0.3)
    assert [k for k, _ in found] == [math.pi]
    assert "+1/2" in found[0][1]


@pytest.mark.parametrize("v,r,w,count", [(0.3, 0.18, 0.0, 0), (0.3, 0.3, 0.5, 1), (0.3, 1.0, 1.0, 2)])
def test_classify_phase(v, r, w, count):
    phase = classify_phase(v, r)
    assert phase.w == w
    assert phase.enclosed_ep_count == count


def test_classify_phase_on_boundary():
    with pytest.raises(PhaseBoundary):
        classify_phase(0.3, 0.2)


def test_normalized_expectation_basis_states():
    assert normalized_expectation(np.array([1, 0]), "z") == 1.0
    assert normalized_expectation(np.array([1, 1]) / math.sqrt(2), "x") == pytest.approx(1.0)
    # scale does not matter
    assert normalized_expectation(np.array([3, 3j]), "y") == pytest.approx(1.0)
    with pytest.raises(ZeroNorm):
        normalized_expectation(np.zeros(2), "z")


def test_band_crossings():
    assert band_crossings(0.3, 1.0) == [0.0, math.pi]
    assert band_crossings(0.3, 0.18) == []
    assert band_crossings(0.3, 0.3) == [0.0]


def test_gauge_fixed_pair_is_biorthonormal():
    theta = complex(1.1, -0.4)
    L, R = gauge_fixed_pair(theta)
    assert np.vdot(L, R) == pytest.approx(1.0)
    # single-valued under θ → θ + 2π
    L2, R2 = gauge_fixed_pair(theta + 2 * math.pi)
    assert np.allclose(L, L2) and np.allclose(R, R2)


def test_im_theta_sign_follows_h_x():
    p = SSHParams(v=0.3, r=1.0, gamma=3.5)
    assert im_theta_sign(p.at(0.2)) == 1
    assert im_theta_sign(p.at(math.pi)) == -1
    theta = eigensystem(p.at(0.5 * math.pi)).theta
    assert math.copysign(1, theta.imag) == im_theta_sign(p.at(0.5 * math.pi))
