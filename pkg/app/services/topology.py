"""Winding numbers from model eigenvectors and from measured spin textures."""

import logging
import math
import warnings
from collections.abc import Sequence

import numpy as np
from scipy.integrate import trapezoid

from app.core.config import settings
from app.core.errors import (
    Ambiguous,
    GridTooCoarse,
    NotHalfWinding,
    OpenLoop,
    OutsideBloch,
    OverlapVanished,
    ValidationFailure,
)
from app.schemas.params import SSHParams
from app.schemas.texture import TextureSample, WindingBootstrap, WindingResult
from app.services.integrators import derivative_4th
from app.services.ssh_model import (
    band_crossings,
    eigensystem,
    gauge_fixed_pair,
    im_theta_sign as model_im_sign,
    left_vectors,
    right_vectors,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi

Pair = tuple[np.ndarray, np.ndarray]


def track_band(p: SSHParams, ks: Sequence[float] | np.ndarray) -> np.ndarray:
    """Continuity-tracked θ(k): each sample picks θ + nπ closest to its predecessor.

    Odd n selects the partner band, so loops through Im-degenerate momenta
    stay on one continuous band.
    """
    thetas = np.empty(len(ks), dtype=complex)
    previous: complex | None = None
    for j, k in enumerate(ks):
        theta = eigensystem(p.at(float(k))).theta
        if previous is not None:
            theta += math.pi * round((previous - theta).real / math.pi)
        thetas[j] = theta
        previous = theta
    return thetas


def winding_discrete(loop: Sequence[Pair], closed: bool = True, period: float = TWO_PI) -> WindingResult:
    """w = (1/π) Σ Im ln(⟨L_{i+1}|R_i⟩ / ⟨L_i|R_i⟩) over a closed loop of (L, R) pairs."""
    if not closed:
        raise OpenLoop("the discretized winding needs a closed loop")
    n = len(loop)
    if n < 2:
        raise ValidationFailure("a loop needs at least two samples")
    phases = np.empty(n)
    for i in range(n):
        L_i, R_i = loop[i]
        L_next, _ = loop[(i + 1) % n]
        diagonal = np.vdot(L_i, R_i)
        scale = np.linalg.norm(L_i) * np.linalg.norm(R_i)
        if abs(diagonal) < 1e-10 * scale:
            raise OverlapVanished(f"<L|R> vanishes at loop sample {i}")
        phases[i] = np.angle(np.vdot(L_next, R_i) / diagonal)
    worst = float(np.max(np.abs(phases)))
    if worst >= math.pi / 2:
        message = f"link phase {worst:.3f} rad >= π/2; refine the k grid"
        logger.warning(message)
        warnings.warn(message, GridTooCoarse, stacklevel=2)
    w = float(np.sum(phases) / math.pi)
    return WindingResult(
        w=w,
        w_per_zone=w * TWO_PI / period,
        link_phases=phases.tolist(),
        period=period,
        grid_size=n,
        max_link_phase=worst,
    )


def _half_turn(theta_start: complex, theta_end: complex) -> bool:
    """True when θ advanced by an odd multiple of π over the zone."""
    return round((theta_end - theta_start).real / math.pi) % 2 == 1


def winding_model(v: float, r: float, n_grid: int = 1000, gamma: float = 1.0) -> WindingResult:
    """Discretized winding of the continuously tracked band on a uniform k grid.

    A band that comes back as its partner after 2π is followed around the
    4π loop and reported per zone.
    """
    if n_grid < 4:
        raise ValidationFailure("n_grid must be >= 4")
    p = SSHParams(v=v, r=r, gamma=gamma)
    h = TWO_PI / n_grid
    thetas = track_band(p, np.arange(n_grid + 1) * h)
    period = TWO_PI
    if _half_turn(thetas[0], thetas[-1]):
        period = FOUR_PI
        thetas = track_band(p, np.arange(2 * n_grid + 1) * h)
    loop = [gauge_fixed_pair(complex(t)) for t in thetas[:-1]]
    result = winding_discrete(loop, closed=True, period=period)
    crossings = band_crossings(v, r)
    return result.model_copy(update={"crossings": crossings, "extended": period == FOUR_PI})


def winding_continuous(v: float, r: float, n_grid: int = 1000, gamma: float = 1.0) -> float:
    """w = (i/π) ∮ ⟨L̃|∂ₖR̃⟩ dk over one Brillouin zone, by finite differences."""
    if n_grid < 8:
        raise ValidationFailure("n_grid must be >= 8")
    p = SSHParams(v=v, r=r, gamma=gamma)
    ks = np.linspace(0.0, TWO_PI, n_grid + 1)
    pairs = [gauge_fixed_pair(complex(t)) for t in track_band(p, ks)]
    L = np.array([pair[0] for pair in pairs])
    R = np.array([pair[1] for pair in pairs])
    dR = derivative_4th(R, ks[1] - ks[0])
    integrand = np.einsum("ki,ki->k", L.conj(), dR)
    w = 1j / math.pi * trapezoid(integrand, ks)
    if abs(w.imag) > 1e-6:
        message = f"winding integral has imaginary residue {w.imag:.2e}"
        logger.warning(message)
        warnings.warn(message, GridTooCoarse, stacklevel=2)
    return float(w.real)


def reconstruct_theta(sample: TextureSample, sign: int, tol: float | None = None) -> complex:
    tol = settings.bloch_tolerance if tol is None else tol
    norm2 = sample.sx**2 + sample.sz**2
    if norm2 > 1.0 + tol:
        raise OutsideBloch(f"sx²+sz² = {norm2:.6f} > 1 at k={sample.k:.4f}")
    if norm2 < 1e-24:
        raise Ambiguous(f"sx = sz = 0 at k={sample.k:.4f}; θ undefined")
    real = math.atan2(-sample.sx, sample.sz)
    imag = math.acosh(1.0 / math.sqrt(min(norm2, 1.0)))
    return complex(real, math.copysign(imag, sign))


def reconstruct_eigenvectors(
    sample: TextureSample,
    im_theta_sign: int,
    *,
    tol: float | None = None,
    gauge_fixed: bool = False,
) -> Pair:
    """(R, L) reproducing the sample's ⟨σ_x⟩, ⟨σ_z⟩; L built from θ*."""
    theta = reconstruct_theta(sample, im_theta_sign, tol)
    if gauge_fixed:
        L, R = gauge_fixed_pair(theta)
        return R, L
    return right_vectors(theta)[0], left_vectors(theta)[0]


def _bloch_dot(a: TextureSample, b: TextureSample) -> float:
    return (a.sx * b.sx + a.sz * b.sz) / (a.bloch_norm * b.bloch_norm)


def is_half_winding(samples: Sequence[TextureSample]) -> bool:
    """Endpoints of a single-zone series point in opposite directions."""
    return _bloch_dot(samples[0], samples[-1]) < 0.0


def extend_to_4pi(samples: Sequence[TextureSample]) -> list[TextureSample]:
    """Append the partner-band continuation (−sx, −sz) on [2π, 4π)."""
    if not is_half_winding(samples):
        raise NotHalfWinding("the series already closes over 2π")
    return list(samples) + [s.flipped(TWO_PI) for s in samples]


def detect_crossings(
    samples: Sequence[TextureSample], params: tuple[float, float] | None = None
) -> list[float]:
    """Momenta where consecutive Bloch vectors reverse; with (v, r), only where the model crosses."""
    model = band_crossings(*params) if params is not None else None
    found: list[float] = []
    for a, b in zip(samples, samples[1:]):
        if _bloch_dot(a, b) >= 0.0:
            continue
        if model is None:
            found.append(0.5 * (a.k + b.k))
            continue
        hits = [k + shift for k in model for shift in (0.0, TWO_PI) if a.k < k + shift < b.k]
        if hits:
            found.append(hits[0])
    if found:
        logger.warning("auto-detected band crossings at k/π = %s", [round(k / math.pi, 4) for k in found])
    return found


def apply_crossing_signs(samples: Sequence[TextureSample], crossings: Sequence[float]) -> list[TextureSample]:
    """Flip (sx, sz) after every odd number of crossings."""
    corrected = []
    for s in samples:
        passed = sum(1 for k in crossings if s.k > k)
        corrected.append(s.flipped() if passed % 2 else s)
    return corrected


def _signs(samples: Sequence[TextureSample], params: SSHParams | None) -> list[int]:
    signs = []
    for s in samples:
        if s.im_theta_sign is not None:
            signs.append(s.im_theta_sign)
        elif params is not None:
            signs.append(model_im_sign(params.at(s.k)))
        else:
            raise ValidationFailure(f"no Im θ sign for k={s.k:.4f}; pass model parameters or a sign column")
    return signs


def winding_from_data(
    table: Sequence[TextureSample],
    band_crossing_ks: Sequence[float] | None = None,
    *,
    params: SSHParams | None = None,
    tol: float | None = None,
) -> WindingResult:
    """Winding from measured ⟨σ_x⟩, ⟨σ_z⟩ sorted by k over one zone.

    Rows past each crossing are sign-flipped onto the continuous band, the
    series is extended to 4π when it closes only as a half turn, and the
    loop is closed back onto its first sample.
    """
    samples = list(table)
    if len(samples) < 3:
        raise ValidationFailure("need at least three texture samples")
    ks = np.array([s.k for s in samples])
    if np.any(np.diff(ks) <= 0.0):
        raise ValidationFailure("texture samples must be strictly increasing in k")
    tol = settings.table_bloch_tolerance if tol is None else tol

    if band_crossing_ks is None:
        crossings = detect_crossings(samples, (params.v, params.r) if params is not None else None)
    else:
        crossings = [float(k) for k in band_crossing_ks]
    samples = apply_crossing_signs(samples, crossings)

    signs = _signs(samples, params)
    period = TWO_PI
    extended = False
    if is_half_winding(samples):
        samples = extend_to_4pi(samples)
        signs = signs + signs
        period = FOUR_PI
        extended = True

    loop = [
        tuple(reversed(reconstruct_eigenvectors(s, sign, tol=tol, gauge_fixed=True)))
        for s, sign in zip(samples, signs)
    ]
    result = winding_discrete(loop, closed=True, period=period)
    return result.model_copy(update={"crossings": crossings, "extended": extended})


def winding_bootstrap(
    table: Sequence[TextureSample],
    n_resamples: int = 200,
    seed: int | None = None,
    band_crossing_ks: Sequence[float] | None = None,
    *,
    params: SSHParams | None = None,
) -> WindingBootstrap:
    """Resample each point within its error bars and collect w per zone."""
    rng = np.random.default_rng(seed)
    samples = list(table)
    crossings = (
        detect_crossings(samples, (params.v, params.r) if params is not None else None)
        if band_crossing_ks is None
        else list(band_crossing_ks)
    )
    values = []
    for _ in range(n_resamples):
        drawn = []
        for s in samples:
            sx = s.sx + (s.sx_err or 0.0) * rng.standard_normal()
            sz = s.sz + (s.sz_err or 0.0) * rng.standard_normal()
            norm = math.hypot(sx, sz)
            if norm > 1.0:
                sx, sz = sx / norm, sz / norm
            drawn.append(s.model_copy(update={"sx": sx, "sz": sz}))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", GridTooCoarse)
            values.append(winding_from_data(drawn, crossings, params=params).w_per_zone)
    arr = np.array(values)
    return WindingBootstrap(mean=float(arr.mean()), std=float(arr.std(ddof=1)), n_resamples=n_resamples)
