"""HTTP front ends for the platform (and, optionally, the authority)."""

from __future__ import annotations

import time
from typing import Callable

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from . import wire
from .authority import AlreadyIssued, Authority
from .model import ElectionConfig, ErrorCode, ValidationError
from .platform import Platform

STATUS_BY_CODE = {
    ErrorCode.OUTSIDE_WINDOW: 403,
    ErrorCode.BAD_MANDATE_SIGNATURE: 401,
    ErrorCode.DUPLICATE_MANDATE: 409,
    ErrorCode.UNKNOWN_STAMP: 404,
    ErrorCode.STALE_STAMP: 410,
    ErrorCode.USED_STAMP: 423,
    ErrorCode.DUPLICATE_VOTER_STAMP: 412,
    ErrorCode.INVALID_CHOICE: 422,
    ErrorCode.INSUFFICIENT_WORK: 402,
    ErrorCode.HUMAN_CHALLENGE_FAILED: 428,
}


def _error(code: str, detail: str, status: int) -> JSONResponse:
    return JSONResponse({"code": code, "detail": detail}, status_code=status)


def create_platform_app(platform: Platform, clock: Callable[[], float] = time.time) -> FastAPI:
    app = FastAPI(title="edvote platform")

    @app.post("/stamp")
    def stamp():
        try:
            return wire.stamp_to_json(platform.issue_stamp(clock()))
        except ValidationError as exc:
            return _error(exc.code.value, exc.detail, STATUS_BY_CODE[exc.code])

    # plain def: FastAPI runs it in a worker thread; Platform.submit is thread-safe
    @app.post("/submit")
    def submit(payload: dict = Body(...)):
        try:
            submission = wire.submission_from_json(payload)
        except wire.MalformedInput as exc:
            return _error("MALFORMED_INPUT", str(exc), 400)
        try:
            ack = platform.submit(submission, clock())
        except ValidationError as exc:
            return _error(exc.code.value, exc.detail, STATUS_BY_CODE[exc.code])
        return wire.ack_to_json(ack)

    @app.get("/published")
    def published():
        platform.publish_due(clock())
        return [wire.published_to_json(u) for u in platform.published()]

    @app.get("/pubkey")
    def pubkey():
        return {"public_key": platform.public_key.hex()}

    @app.get("/config")
    def config():
        return wire.config_to_json(platform.config)

    return app


def create_authority_app(authority: Authority, config: ElectionConfig) -> FastAPI:
    app = FastAPI(title="edvote authority")

    @app.post("/mandate")
    def mandate(payload: dict = Body(...)):
        ref = payload.get("citizen_ref")
        if not isinstance(ref, str) or not ref:
            return _error("MALFORMED_INPUT", "citizen_ref must be a non-empty string", 400)
        try:
            return wire.mandate_to_json(authority.issue_mandate(config, ref))
        except AlreadyIssued as exc:
            return _error(AlreadyIssued.code, str(exc), 409)

    @app.get("/pubkey")
    def pubkey():
        return {"public_key": authority.public_key.hex()}

    return app
