"""
premcheck FastAPI Main Application
Obstruction engines for 2-prems over HTTP.

Endpoints mirror the command-line subcommands:
1. /api/braid: permutation, B_d / HB_d triviality, linking, Humphries, towers
2. /api/foldmap: pullbacks, monodromy, word invariants, alternation
3. /api/theta: double point obstruction
4. /api/verdict: torsion-monodromy verdict
"""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import uvicorn

from app import __version__
from app.config import config
from app.routes import braid, foldmap, theta, verdict
from app.services.linkhomotopy import FAITHFULNESS_NOTE


# Initialize FastAPI app
app = FastAPI(
    title="premcheck",
    description="""
    Exact group-theoretic obstructions to 2-prems.

    ## Engines
    - **Braids**: Artin representation, homotopy braids, Humphries criterion
    - **Towers**: finite levels of Aut(F_d / gamma_n)
    - **Fold maps**: pullbacks and monodromy of combinatorial fold map models
    - **Double points**: signed double coset sums
    """,
    version=__version__,
    docs_url="/api/docs",
    redoc_url="/api/redoc"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(braid.router, prefix="/api", tags=["Braids"])
app.include_router(foldmap.router, prefix="/api", tags=["Fold Maps"])
app.include_router(theta.router, prefix="/api", tags=["Double Points"])
app.include_router(verdict.router, prefix="/api", tags=["Verdicts"])


@app.on_event("startup")
async def startup_event():
    """Report engine settings."""
    print("\n" + "=" * 60)
    print(f"premcheck v{__version__}")
    print("=" * 60)

    try:
        config.validate_cap(config.DEFAULT_CAP)
        print(f"✓ Truncation: default cap {config.DEFAULT_CAP} (max {config.MAX_CAP})")
    except ValueError as e:
        print(f"⚠ Truncation: {e}")

    print(f"✓ Reduced ring: dense basis up to d = {config.DENSE_BASIS_MAX_RANK}")
    print(f"✓ Loop analyses: {config.MAX_WORKERS} workers")
    print(f"⚠ Homotopy braid verdicts {FAITHFULNESS_NOTE}")

    print("=" * 60)
    print(f"API available at: http://{config.API_HOST}:{config.API_PORT}")
    print(f"Documentation at: http://{config.API_HOST}:{config.API_PORT}/api/docs")
    print("=" * 60 + "\n")


@app.get("/api/health")
async def health_check():
    """Health check endpoint."""
    return {
        "status": "healthy",
        "service": "premcheck",
        "version": __version__,
        "engines": ["freegroup", "linkhomotopy", "braid", "towers", "foldmap", "theta"]
    }


@app.get("/api/config")
async def get_config():
    """Public configuration."""
    return {
        "version": __version__,
        "truncation": {
            "default_cap": config.DEFAULT_CAP,
            "max_cap": config.MAX_CAP
        },
        "reduced_ring": {
            "dense_basis_max_rank": config.DENSE_BASIS_MAX_RANK,
            "imported_theorem": FAITHFULNESS_NOTE
        },
        "max_workers": config.MAX_WORKERS
    }


if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=config.API_HOST,
        port=config.API_PORT,
        log_level=config.API_LOG_LEVEL,
        reload=True
    )
