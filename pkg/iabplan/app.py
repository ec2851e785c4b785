from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from src.config import configure_logging, settings
from src.routers import bap_router, experiments_router
from src.schemas import HealthCheck

from .errors import EXIT_CONFIG, EXIT_REFUSED, IabError, LoopDetectedError, error_envelope

logger = logging.getLogger(__name__)


def _status_for(exc: IabError) -> int:
    if exc.exit_code == EXIT_CONFIG:
        return 422
    if exc.exit_code == EXIT_REFUSED or isinstance(exc, LoopDetectedError):
        return 409
    return 400


def create_app() -> FastAPI:
    configure_logging(settings.LOG_LEVEL)
    app = FastAPI(
        title=settings.APP_NAME,
        version=settings.APP_VERSION,
        debug=settings.DEBUG,
        docs_url="/docs",
        redoc_url="/redoc",
    )

    # Configure CORS
    app.add_middleware(
        CORSMiddleware,
        allow_origins=settings.CORS_ORIGINS,
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.include_router(experiments_router, prefix=settings.API_PREFIX)
    app.include_router(bap_router, prefix=settings.API_PREFIX)

    @app.exception_handler(IabError)
    async def _iab_error(request: Request, exc: IabError) -> JSONResponse:
        logger.warning("%s %s -> %s: %s", request.method, request.url.path, exc.code, exc.message)
        return JSONResponse(status_code=_status_for(exc), content=exc.envelope())

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        errors = exc.errors()
        loc = ".".join(str(p) for p in errors[0]["loc"]) if errors else "body"
        detail = jsonable_encoder([{k: v for k, v in e.items() if k != "ctx"} for e in errors])
        body = error_envelope("INVALID_REQUEST", f"invalid request field {loc!r}", detail)
        return JSONResponse(status_code=422, content=body)

    @app.get("/")
    async def root():
        return {
            "message": settings.APP_NAME,
            "version": settings.APP_VERSION,
            "docs": "/docs",
            "health": "/healthz",
        }

    @app.get("/health", response_model=HealthCheck)
    @app.get("/healthz", response_model=HealthCheck)
    async def health():
        return HealthCheck(
            status="healthy",
            service=settings.APP_NAME,
            version=settings.APP_VERSION,
            build_sha=settings.BUILD_SHA,
        )

    return app

