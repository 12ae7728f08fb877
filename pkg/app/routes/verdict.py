"""
premcheck Verdict API
2-prem verdict for a torsion element of the transverse fundamental group.
"""

from typing import List, Optional, Union
from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from app.services.reports import Report, cmd_verdict


router = APIRouter()


class VerdictRequest(BaseModel):
    """Torsion order and monodromy permutation."""
    torsion: int = Field(..., description="Finite order m >= 2 of the element")
    permutation: Union[List[int], str] = Field(..., description="1-based images or cycle notation")
    degree: Optional[int] = Field(None, ge=1, description="Degree for cycle notation")


@router.post("/verdict", response_model=Report)
async def verdict(request: VerdictRequest):
    try:
        return cmd_verdict(request.torsion, request.permutation, request.degree)
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
