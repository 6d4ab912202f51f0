"""
Scheduler API endpoints.

Read-only views of the teamwork schedule and of the analysis constants.
"""

from fastapi import APIRouter, Path, Query, status
from pydantic import BaseModel, Field

from domains.environment.models import EnvironmentSpec

from .models import Constants, EpochMode, TeamworkSchedule
from .service import classify_epoch, derive_constants

router = APIRouter()


class ConstantsRequest(BaseModel):
    """World and schedule for which the constants are evaluated."""

    spec: EnvironmentSpec
    p_star: float = Field(..., gt=0, le=1)
    phi0: float = Field(..., gt=0)
    q: int = Field(1, ge=1)
    n_users: int = Field(1, ge=1)
    margin_c0: float = Field(1.0, gt=0)


@router.post(
    "/constants",
    response_model=Constants,
    status_code=status.HTTP_200_OK,
    summary="Derive Constants",
    description="Evaluate C1..C5, q0 and the theory penalties for a world",
)
async def constants(request: ConstantsRequest) -> Constants:
    return derive_constants(
        request.spec,
        p_star=request.p_star,
        phi0=request.phi0,
        q=request.q,
        n_users=request.n_users,
        margin_c0=request.margin_c0,
    )


@router.get(
    "/epochs/{t}",
    response_model=EpochMode,
    status_code=status.HTTP_200_OK,
    summary="Classify Epoch",
)
async def epoch_mode(
    t: int = Path(..., ge=1, description="Epoch index"),
    k: int = Query(..., ge=1, description="Number of arms"),
    q: int = Query(..., ge=1, description="Teamwork epochs per arm per round"),
) -> EpochMode:
    """
    Classify an epoch as teamwork (with its arm and round) or selfish.

    **Examples:**
    - `GET /scheduler/epochs/1?k=3&q=1` → teamwork, arm 0, round 0
    - `GET /scheduler/epochs/4?k=3&q=1` → selfish
    """
    return classify_epoch(TeamworkSchedule(k=k, q=q), t)
