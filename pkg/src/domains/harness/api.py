"""
Harness API endpoints.

Small simulations on demand; long grids belong to the command line.
"""

from typing import List

from fastapi import APIRouter, HTTPException, Query, status

from core.config import get_settings

from .models import EpisodeSummary, RunConfig, UpdateCountResponse
from .service import batched_update_count, run_replications

router = APIRouter()


@router.get(
    "/update-count",
    response_model=UpdateCountResponse,
    status_code=status.HTTP_200_OK,
    summary="Update Count",
    description="Refits needed when every non-teamwork epoch triggers an update",
)
async def update_count(
    decisions: int = Query(..., ge=1, description="Total user-level decisions"),
    n_users: int = Query(..., ge=1, description="Batch size N"),
    k: int = Query(..., ge=1, description="Number of arms"),
) -> UpdateCountResponse:
    return UpdateCountResponse(
        total_decisions=decisions, n_users=n_users, k=k, updates=batched_update_count(decisions, n_users, k)
    )


@router.post(
    "/episodes",
    response_model=List[EpisodeSummary],
    status_code=status.HTTP_200_OK,
    summary="Run Episodes",
    description="Simulate every replication of one cell and return per-replication summaries",
)
def run_episodes(config: RunConfig) -> List[EpisodeSummary]:
    """
    Run a cell synchronously in the request's worker thread.

    **Limits:**
    - total_decisions x replications may not exceed API_MAX_DECISIONS
    """
    limit = get_settings().API_MAX_DECISIONS
    if config.total_decisions * config.replications > limit:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"at most {limit} decisions per request",
        )
    logs = run_replications(config, workers=1)
    return [EpisodeSummary.from_log(log) for log in logs]
