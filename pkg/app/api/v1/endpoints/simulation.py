import asyncio
from typing import Any, Dict, List

import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from app.parsing import is_builtin
from app.schemas.params import DilationConfig, NVParams, SSHParams
from app.schemas.run import RunConfig
from app.services import pulse_compiler, runner
from app.services.dilation import build_trajectory
from app.services.ssh_model import classify_phase, eigensystem, exceptional_momenta, hamiltonian
from app.tasks.sweep import gather_rows

router = APIRouter(prefix="/api/v1", tags=["simulation"])


class WindingRequest(BaseModel):
    v: float = 0.3
    r: float = 1.0
    gamma: float = Field(default=1.0, gt=0.0)
    n_grid: int = Field(default=1000, ge=8)
    # built-in table name (s1, s2, s3); model winding when absent
    data: str | None = None


class PulseRequest(BaseModel):
    params: SSHParams
    dilation: DilationConfig = Field(default_factory=DilationConfig)
    nv: NVParams = Field(default_factory=NVParams)
    # thin the returned rows; the schedule itself keeps every sample
    stride: int = Field(default=100, ge=1)


def _pair(z: complex) -> List[float]:
    return [float(z.real), float(z.imag)]


def _vector(v: np.ndarray) -> List[List[float]]:
    return [_pair(complex(x)) for x in v]


@router.post("/eigensystem")
async def get_eigensystem(params: SSHParams):
    """θ, eigenvalues and biorthogonal eigenvectors as [re, im] pairs."""
    es = eigensystem(params)
    return {
        "params": params.model_dump(),
        "theta": _pair(es.theta),
        "lambda1": _pair(es.lambda1),
        "lambda2": _pair(es.lambda2),
        "R1": _vector(es.R1),
        "R2": _vector(es.R2),
        "L1": _vector(es.L1),
        "L2": _vector(es.L2),
        "ordering_degenerate": es.ordering_degenerate,
    }


@router.get("/phase")
async def get_phase(v: float, r: float):
    phase = classify_phase(v, r)
    eps = [{"k": k, "description": d} for k, d in exceptional_momenta(v, r)]
    return {"v": v, "r": r, **phase.model_dump(), "exceptional_momenta": eps}


@router.post("/sweep")
async def run_sweep(config: RunConfig):
    if config.out is not None:
        raise HTTPException(status_code=400, detail="out is not accepted over HTTP")
    ks = list(config.k_grid.values())
    rows = await gather_rows(lambda i, k: runner.texture_row(config, float(k), i), ks, config.workers)
    return {"mode": config.mode.value, "rows": rows}


@router.post("/winding")
async def get_winding(req: WindingRequest):
    if req.data is not None and not is_builtin(req.data):
        raise HTTPException(status_code=400, detail="only built-in tables are readable over HTTP")
    config = RunConfig(v=req.v, r=req.r, gamma=req.gamma)
    return await asyncio.to_thread(runner.cmd_winding, config, req.data, req.n_grid)


@router.post("/compile-pulses")
async def compile_pulses(req: PulseRequest):
    def work() -> Dict[str, Any]:
        traj = build_trajectory(hamiltonian(req.params), req.dilation)
        schedule = pulse_compiler.compile_schedule(traj, req.nv)
        phi1, phi2 = schedule.emitted_phases()
        rows = [
            {
                "t": float(schedule.times[j]),
                "delta1": float(schedule.delta1[j]),
                "delta2": float(schedule.delta2[j]),
                "Omega1": float(schedule.Omega1[j]),
                "Omega2": float(schedule.Omega2[j]),
                "phi1": float(phi1[j]),
                "phi2": float(phi2[j]),
            }
            for j in range(0, len(schedule.times), req.stride)
        ]
        return {
            "samples": len(schedule.times),
            "omega_up": schedule.resonances[0],
            "omega_down": schedule.resonances[1],
            "loss_shift": traj.loss_shift,
            "rows": rows,
        }

    return await asyncio.to_thread(work)


@router.get("/reproduce/{table}")
async def reproduce(table: str):
    key = table.strip().lower()
    if key not in ("s1", "s2", "s3", "winding"):
        raise HTTPException(status_code=404, detail=f"unknown reference {table!r}")
    if key == "winding":
        return await asyncio.to_thread(runner.reproduce_winding)
    return await asyncio.to_thread(runner.reproduce_table, key)
