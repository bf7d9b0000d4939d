"""Pipeline steps behind the CLI subcommands and the HTTP endpoints."""

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from app.core.config import settings
from app.core.errors import SimulationError, ValidationFailure
from app.parsing import TextureTable, is_builtin, load_builtin, read_texture_table, write_rows
from app.schemas.params import NVParams, SSHParams
from app.schemas.run import Mode, RunConfig
from app.schemas.texture import WindingResult
from app.services import pulse_compiler
from app.services.dilation import DilatedRun, build_trajectory, run_dilated
from app.services.dynamics import U_Y, default_horizon, evolution_series, rotate_hamiltonian_y
from app.services.pauli import dagger, normalize
from app.services.readout_model import measure_electron_z, sigma_z_standard_error
from app.services.ssh_model import eigensystem, hamiltonian, normalized_expectation
from app.services.topology import winding_bootstrap, winding_continuous, winding_from_data, winding_model
from app.tasks.sweep import run_rows

logger = logging.getLogger(__name__)

TEXTURE_COLUMNS = ("k", "sx", "sz", "sx_err", "sz_err", "status")
EVOLVE_COLUMNS = ("t", "P0z", "P0x", "fidelity_R1")
REPRODUCE_TOLERANCE = 1e-3
WINDING_TARGETS = {"s1": 0.0, "s2": 0.5, "s3": 1.0}


def model_params(config: RunConfig, k: float | None = None) -> SSHParams:
    if k is None:
        k = config.k or 0.0
    return SSHParams(v=config.v, r=config.r, gamma=config.gamma, k=k, hermitian_limit=config.hermitian_limit)


def evolution_horizon(config: RunConfig, p: SSHParams) -> float:
    if config.horizon is not None:
        return config.horizon
    return default_horizon(p, emulate_experiment=config.emulate_experiment)


def texture_horizon(config: RunConfig, p: SSHParams) -> float:
    """Run length for a dilated texture row: long enough for R₂ to fade below ``texture_epsilon``."""
    if config.horizon is not None:
        return config.horizon
    horizon = default_horizon(p, emulate_experiment=False, epsilon=settings.texture_epsilon)
    if horizon > settings.texture_horizon_cap:
        logger.warning(
            "k=%.4f needs %.3g μs to settle; capped at %.3g μs", p.k, horizon, settings.texture_horizon_cap
        )
        horizon = settings.texture_horizon_cap
    return horizon


def _dilate(config: RunConfig, H: np.ndarray, psi0: np.ndarray, horizon: float) -> DilatedRun:
    dcfg = config.dilation.model_copy(update={"horizon": max(horizon, 4.0 * config.dilation.step)})
    return run_dilated(H, psi0, dcfg)


def texture_row(config: RunConfig, k: float, index: int = 0) -> dict[str, Any]:
    """⟨σ_x⟩, ⟨σ_z⟩ of the prepared state at one momentum."""
    p = model_params(config, k)
    row: dict[str, Any] = {"k": float(k), "sx": None, "sz": None, "sx_err": None, "sz_err": None, "status": "ok"}
    try:
        if config.mode is Mode.exact:
            R1 = eigensystem(p).R1
            row["sx"] = normalized_expectation(R1, "x")
            row["sz"] = normalized_expectation(R1, "z")
            return row

        H = hamiltonian(p)
        psi0 = np.asarray(config.psi0, dtype=complex)
        horizon = texture_horizon(config, p)
        z_run = _dilate(config, H, psi0, horizon)
        x_run = _dilate(config, rotate_hamiltonian_y(H), dagger(U_Y) @ psi0, horizon)

        if config.mode is Mode.dilated:
            # ⟨σ_x⟩ is ⟨σ_z⟩ of the rotated evolution
            row["sz"] = normalized_expectation(z_run.postselected[-1], "z")
            row["sx"] = normalized_expectation(x_run.postselected[-1], "z")
            return row

        rates = config.readout.rates
        shots = config.readout.shots
        seeds = np.random.SeedSequence([config.readout.seed, index]).spawn(2)
        for axis, run, seed in (("sz", z_run, seeds[0]), ("sx", x_run, seeds[1])):
            Psi = run.series.states[-1]
            row[axis] = measure_electron_z(Psi, rates, shots, np.random.default_rng(seed)).sigma_z
            row[f"{axis}_err"] = sigma_z_standard_error(Psi, rates, shots)
    except SimulationError as exc:
        logger.warning("sweep row k=%.4f failed: %s: %s", k, type(exc).__name__, exc)
        row.update({"sx": None, "sz": None, "sx_err": None, "sz_err": None, "status": type(exc).__name__})
    return row


def write_output(config: RunConfig, columns: tuple[str, ...], rows: list[dict[str, Any]], extra: dict | None = None) -> Path | None:
    if config.out is None:
        return None
    metadata = {"generator": "nhssh", **(extra or {}), "config": config.model_dump_json()}
    if config.format.value == "json":
        config.out.write_text(json.dumps({"metadata": metadata, "rows": rows}, indent=2), encoding="utf-8")
        return config.out
    return write_rows(config.out, columns, rows, metadata)


def cmd_sweep(config: RunConfig) -> list[dict[str, Any]]:
    ks = config.k_grid.values()
    rows = run_rows(lambda index, k: texture_row(config, float(k), index), list(ks), config.workers)
    write_output(config, TEXTURE_COLUMNS, rows, {"mode": config.mode.value})
    return rows


def resolve_table(source: str) -> TextureTable:
    if is_builtin(source):
        return load_builtin(source)
    return read_texture_table(source)


def cmd_winding(
    config: RunConfig, data: str | None = None, n_grid: int = 1000, bootstrap: int = 0
) -> dict[str, Any]:
    if data is not None:
        table = resolve_table(data)
        # a stored sign correction already puts every row on one band
        crossings = [] if table.sign_corrected_after is not None else None
        # plain k,sx,sz files carry no model header; the run parameters stand in
        params = table.params if table.params is not None else model_params(config)
        result = winding_from_data(table.samples, crossings, params=params)
        report = {"source": table.name or data, **result.model_dump()}
        if bootstrap > 0:
            spread = winding_bootstrap(
                table.samples, bootstrap, seed=config.readout.seed, band_crossing_ks=crossings, params=params
            )
            report["bootstrap"] = spread.model_dump()
        return report
    result = winding_model(config.v, config.r, n_grid=n_grid, gamma=config.gamma)
    continuous = winding_continuous(config.v, config.r, n_grid=n_grid, gamma=config.gamma)
    return {"source": "model", "w_continuous": continuous, **result.model_dump()}


def cmd_compile_pulses(config: RunConfig, lab_check: float | None = None) -> dict[str, Any]:
    if config.out is None:
        raise ValidationFailure("compile-pulses needs --out for the schedule file")
    p = model_params(config, config.k if config.k is not None else 0.3 * math.pi)
    traj = build_trajectory(hamiltonian(p), config.dilation)
    nv = NVParams()
    schedule = pulse_compiler.compile_schedule(traj, nv)
    A, B = pulse_compiler.decompile(schedule)
    residual = float(max(np.max(np.abs(A - traj.A)), np.max(np.abs(B - traj.B))))
    sidecar = pulse_compiler.write_schedule(schedule, config.out, metadata=config.metadata())
    report: dict[str, Any] = {
        "schedule": str(config.out),
        "sidecar": str(sidecar),
        "samples": len(schedule.times),
        "roundtrip_residual": residual,
        "loss_shift": traj.loss_shift,
        "hermiticity_deviation": traj.hermiticity_deviation,
        "omega_up": schedule.resonances[0],
        "omega_down": schedule.resonances[1],
    }
    if lab_check is not None:
        scaled = NVParams.scaled_for_lab_check()
        lab_schedule = pulse_compiler.compile_schedule(traj, scaled)
        report["rotating_frame_deviation"] = pulse_compiler.rotating_frame_check(scaled, traj, lab_schedule, lab_check)
    return report


def cmd_evolve(config: RunConfig, samples: int = 21) -> list[dict[str, Any]]:
    p = model_params(config)
    psi0 = np.asarray(config.psi0, dtype=complex)
    horizon = evolution_horizon(config, p)
    if config.mode is Mode.exact:
        result = evolution_series(p, psi0, np.linspace(0.0, horizon, samples))
        rows = [
            {"t": float(t), "P0z": float(z), "P0x": float(x), "fidelity_R1": float(f)}
            for t, z, x, f in zip(result.times, result.populations_z, result.populations_x, result.fidelity_to_R1)
        ]
    else:
        H = hamiltonian(p)
        R1 = eigensystem(p).R1
        z_run = _dilate(config, H, psi0, horizon)
        x_run = _dilate(config, rotate_hamiltonian_y(H), dagger(U_Y) @ psi0, horizon)
        picks = np.unique(np.linspace(0, len(z_run.series.times) - 1, samples).round().astype(int))
        rows = []
        for j in picks:
            z_state = z_run.postselected[j]
            rows.append(
                {
                    "t": float(z_run.series.times[j]),
                    "P0z": float(abs(z_state[0]) ** 2),
                    "P0x": float(abs(x_run.postselected[j][0]) ** 2),
                    "fidelity_R1": float(abs(np.vdot(normalize(R1), z_state)) ** 2),
                }
            )
    write_output(config, EVOLVE_COLUMNS, rows, {"mode": config.mode.value, "horizon": horizon})
    return rows


def reproduce_table(key: str) -> dict[str, Any]:
    table = load_builtin(f"table_{key}_theory")
    params = table.params
    if params is None:
        raise ValidationFailure(f"table {key} carries no model parameters")
    cut = table.sign_corrected_after
    worst = 0.0
    rows = []
    for s in table.samples:
        R1 = eigensystem(params.at(s.k)).R1
        sign = -1.0 if cut is not None and s.k > cut else 1.0
        sx = sign * normalized_expectation(R1, "x")
        sz = sign * normalized_expectation(R1, "z")
        error = max(abs(sx - s.sx), abs(sz - s.sz))
        worst = max(worst, error)
        rows.append({"k_over_pi": s.k / math.pi, "sx": sx, "sz": sz, "sx_ref": s.sx, "sz_ref": s.sz, "error": error})
    return {"check": key, "rows": rows, "max_error": worst, "passed": worst <= REPRODUCE_TOLERANCE}


def reproduce_winding() -> dict[str, Any]:
    checks = []
    for key, target in WINDING_TARGETS.items():
        table = load_builtin(f"table_{key}_theory")
        crossings = [] if table.sign_corrected_after is not None else None
        data: WindingResult = winding_from_data(table.samples, crossings, params=table.params)
        model = winding_model(table.v or 0.0, table.r or 0.0, n_grid=1000)
        checks.append(
            {
                "table": key,
                "target": target,
                "w_data": data.w_per_zone,
                "w_model": model.w_per_zone,
                "passed": abs(data.w_per_zone - target) <= 0.05 and abs(model.w_per_zone - target) <= 1e-3,
            }
        )
    return {"check": "winding", "rows": checks, "passed": all(c["passed"] for c in checks)}


def cmd_reproduce(tables: list[str]) -> dict[str, Any]:
    unknown = set(tables) - {"s1", "s2", "s3", "winding"}
    if unknown:
        raise ValidationFailure(f"unknown reproduction targets {sorted(unknown)}")
    reports = [reproduce_winding() if name == "winding" else reproduce_table(name) for name in tables]
    for report in reports:
        level = logging.INFO if report["passed"] else logging.ERROR
        logger.log(level, "reproduce %s: %s", report["check"], "pass" if report["passed"] else "MISMATCH")
    return {"reports": reports, "passed": all(r["passed"] for r in reports)}