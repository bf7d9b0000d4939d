import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.v1.endpoints.simulation import router as simulation_router
from app.core.config import settings
from app.core.errors import NumericalFailure, SimulationError, ValidationFailure
from app.core.logging import configure_logging

logger = logging.getLogger(__name__)

app = FastAPI(
    title="NH-SSH Dilation API",
    version="0.1.0",
)

configure_logging()

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _status_for(exc: SimulationError) -> int:
    if isinstance(exc, ValidationFailure):
        return 422
    if isinstance(exc, NumericalFailure):
        return 409
    return 500


@app.exception_handler(SimulationError)
async def simulation_error_handler(request: Request, exc: SimulationError):
    status = _status_for(exc)
    logger.warning("%s %s -> %d %s: %s", request.method, request.url.path, status, type(exc).__name__, exc)
    return JSONResponse(status_code=status, content={"error": type(exc).__name__, "detail": str(exc)})


@app.get("/health", tags=["health"])
def health():
    return {"status": "ok", "service": "nhssh-api"}


@app.get("/", include_in_schema=False)
def root():
    return {"status": "ok", "message": "Backend is running"}


app.include_router(simulation_router)
