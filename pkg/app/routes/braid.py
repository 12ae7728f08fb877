"""
premcheck Braid API
Braid analyses over HTTP, mirroring `premcheck braid`.

Features:
- Underlying permutation and its order
- Triviality in B_d and in the homotopy braid group HB_d
- Linking numbers of pure braids
- Humphries certificate and automorphism tower levels
"""

from typing import List, Optional
from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field

from app.config import config
from app.services.reports import BRAID_ANALYSES, Report, cmd_braid


router = APIRouter()


class BraidRequest(BaseModel):
    """Braid analysis request."""
    word: List[int] = Field(..., description="Signed generator indices, [1,-2] = s1 s2^-1")
    strands: Optional[int] = Field(None, ge=1, description="Number of strands (default: max index + 1)")
    analyses: List[str] = Field(default_factory=lambda: list(BRAID_ANALYSES))
    level: Optional[int] = Field(None, ge=2, description="Automorphism tower level to report")
    cap: int = Field(config.DEFAULT_CAP, ge=2, description="Truncation cap for kernel degree and profile")


@router.post("/braid", response_model=Report)
async def analyze_braid(request: BraidRequest):
    """
    Analyze a braid word.

    Per-analysis precondition failures (e.g. linking numbers of a non-pure braid)
    are reported under `errors`.
    """
    unknown = sorted(set(request.analyses) - set(BRAID_ANALYSES))
    if unknown:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Unknown analyses {unknown}. Expected a subset of {list(BRAID_ANALYSES)}"
        )
    try:
        return cmd_braid(request.word, request.strands, request.analyses, request.level, request.cap)
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
