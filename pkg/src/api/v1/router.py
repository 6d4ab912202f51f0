"""
Main API v1 router that includes all domain routers.

This router aggregates the domain routers and exposes them under the
/api/v1 prefix:
- /scheduler - Epoch classification and analysis constants
- /harness - Update counts and small on-demand simulations
"""

from fastapi import APIRouter

from domains.harness.api import router as harness_router
from domains.scheduler.api import router as scheduler_router

# Create main API router
api_router = APIRouter()

# Include domain routers
api_router.include_router(scheduler_router, prefix="/scheduler", tags=["Scheduler"])
api_router.include_router(harness_router, prefix="/harness", tags=["Harness"])


@api_router.get("/status")
async def api_status():
    """
    API v1 status endpoint.

    Returns the status of the API v1 and available endpoints.
    """
    return {"status": "ok", "version": "1.0.0", "routers": ["scheduler", "harness"]}
