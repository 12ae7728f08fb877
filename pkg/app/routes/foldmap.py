"""
premcheck Fold Map API
Pullbacks, monodromy, word invariants and alternation certificates for
combinatorial fold map models, mirroring `premcheck foldmap`.
"""

from typing import Any, Dict, List
from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from app.services.reports import FOLDMAP_ANALYSES, Report, cmd_foldmap


router = APIRouter()


class FoldmapRequest(BaseModel):
    """Fold map analysis request."""
    arrangement: Dict[str, Any] = Field(..., description="STANDARD or NESTED arrangement")
    loops: List[Dict[str, Any]] = Field(default_factory=list, description="Crossing words or region words")
    analyses: List[str] = Field(default_factory=lambda: list(FOLDMAP_ANALYSES))
    dot: bool = False


@router.post("/foldmap", response_model=Report)
async def analyze_foldmap(request: FoldmapRequest):
    """Validate an arrangement and analyze each loop."""
    try:
        return cmd_foldmap(request.arrangement, request.loops, request.analyses, request.dot)
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
