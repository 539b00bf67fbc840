"""
Main FastAPI application
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from prometheus_client import make_asgi_app

from harmony import __version__
from harmony.api.endpoints import router
from harmony.core.config import settings
from harmony.core.logging import configure_logging

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events"""
    configure_logging(settings.log_level)
    logger.info(f"Starting harmony decoding service {__version__}...")
    yield
    logger.info("Shutting down harmony decoding service...")


app = FastAPI(
    title="Harmony Decoding API",
    description="Correlated matching ensembles and tensor network decoding for stabilizer codes",
    version=__version__,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

if settings.enable_metrics:
    metrics_app = make_asgi_app()
    app.mount("/metrics", metrics_app)

app.include_router(router, prefix="/api/v1")


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "Harmony Decoding API",
        "version": __version__,
        "docs": "/docs",
        "health": "/api/v1/health",
    }


if __name__ == "__main__":
    import uvicorn

    uvicorn.run("harmony.main:app", host=settings.api_host, port=settings.api_port, reload=True, workers=1)
