"""
premcheck Double Point API
Canonical form and zero test of signed double coset sums.
"""

from typing import List
from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from app.services.reports import Report, cmd_theta


router = APIRouter()


class ThetaPoint(BaseModel):
    sign: int = Field(..., description="+1 or -1")
    word: List[int]


class ThetaRequest(BaseModel):
    """Signed double coset sum over H in the free group of the given rank."""
    rank: int = Field(..., ge=1)
    H: List[List[int]] = Field(default_factory=list, description="Generators of H")
    covering: bool = False
    points: List[ThetaPoint] = Field(default_factory=list)


@router.post("/theta", response_model=Report)
async def analyze_theta(request: ThetaRequest):
    try:
        return cmd_theta(request.model_dump())
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
