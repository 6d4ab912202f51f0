"""
Teamwork LASSO Bandit Engine - FastAPI Application

HTTP entry point exposing the schedule, the analysis constants and small
simulations. Long experiment grids run through the command line (cli.py).
"""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from api.v1.router import api_router
from core.config import get_settings
from core.errors import EngineError
from core.logging_setup import configure_logging

# Get settings instance
settings = get_settings()
configure_logging(settings)

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Application lifespan manager.

    Runs on startup and shutdown.
    """
    logger.info("%s - Starting", settings.PROJECT_NAME)
    logger.info(
        "Solver tol=%g kkt_tol=%g max_sweeps=%d, workers=%d",
        settings.SOLVER_TOL,
        settings.SOLVER_KKT_TOL,
        settings.SOLVER_MAX_SWEEPS,
        settings.MAX_WORKERS,
    )
    yield
    logger.info("%s - Shutting down", settings.PROJECT_NAME)


# Create FastAPI application
app = FastAPI(
    title=settings.PROJECT_NAME,
    version="1.0.0",
    description="""
    Batched contextual bandit with teamwork exploration and two-step LASSO
    exploitation: schedule, constants and simulation endpoints.
    """,
    openapi_url=f"{settings.API_V1_PREFIX}/openapi.json",
    docs_url=f"{settings.API_V1_PREFIX}/docs",
    redoc_url=f"{settings.API_V1_PREFIX}/redoc",
    lifespan=lifespan,
)

# Include API v1 router
app.include_router(api_router, prefix=settings.API_V1_PREFIX)


# Root endpoint
@app.get("/", tags=["Health"])
async def root():
    """
    Root endpoint - API health check.

    Returns basic information about the API.
    """
    return JSONResponse(
        {
            "message": settings.PROJECT_NAME,
            "version": "1.0.0",
            "docs": f"{settings.API_V1_PREFIX}/docs",
            "status": "healthy",
        }
    )


# Health check endpoint
@app.get("/health", tags=["Health"])
async def health_check():
    """Health check endpoint."""
    return JSONResponse({"status": "healthy", "max_workers": settings.MAX_WORKERS})


@app.exception_handler(EngineError)
async def engine_error_handler(request: Request, exc: EngineError):
    """Invalid engine input is the client's fault."""
    return JSONResponse(status_code=400, content={"error": "Invalid input", "detail": str(exc)})


@app.exception_handler(ValidationError)
async def validation_error_handler(request: Request, exc: ValidationError):
    return JSONResponse(status_code=400, content={"error": "Invalid input", "detail": str(exc)})


# Global exception handler
@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """
    Global exception handler for unhandled errors.

    Logs the error and returns a generic error response to the client.
    """
    logger.exception("Unhandled exception: %s", exc)
    return JSONResponse(status_code=500, content={"error": "Internal server error", "detail": None})


# Run the application
if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "main:app",
        host=settings.SERVER_HOST,
        port=settings.SERVER_PORT,
        reload=True,  # Auto-reload on code changes (development only)
        log_level=settings.LOG_LEVEL.lower(),
    )
