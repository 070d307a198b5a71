"""HTTP JSON API over the session manager.

Request bodies are pydantic models with unknown fields rejected (422).
Conflicts with the session's phase machine map to 409, unknown sessions
to 404. The response payload shapes are documented in
``api_schema.json`` next to this module.
"""

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .errors import IllegalTransition, ValidationError
from .service import SessionManager, UnknownSession


class _Body(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CreateSession(_Body):
    task_id: str
    condition: Optional[str] = None
    request_id: Optional[str] = None


class ResponseItem(_Body):
    profile_id: str
    decision: int = Field(ge=0, le=1)


class SubmitResponses(_Body):
    responses: list[ResponseItem]
    request_id: Optional[str] = None


class SubmitCheckTest(_Body):
    answers: dict[str, int]
    request_id: Optional[str] = None


class SubmitAttributes(_Body):
    phase: str
    attributes: list[str]
    request_id: Optional[str] = None


class SubmitQuestionnaire(_Body):
    phase: str
    answers: dict
    request_id: Optional[str] = None


def create_app(manager: SessionManager) -> FastAPI:
    app = FastAPI(title="fairguide", docs_url=None, redoc_url=None)

    @app.exception_handler(UnknownSession)
    async def _unknown(request: Request, exc):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(IllegalTransition)
    async def _conflict(request: Request, exc):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def _invalid(request: Request, exc):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.post("/sessions")
    def create_session(body: CreateSession):
        return manager.create_session(
            body.task_id, condition=body.condition, request_id=body.request_id
        )

    @app.get("/sessions/{session_id}/next")
    def next_payload(session_id: str):
        return manager.next_payload(session_id)

    @app.post("/sessions/{session_id}/responses")
    def submit_responses(session_id: str, body: SubmitResponses):
        return manager.submit_responses(
            session_id,
            [item.model_dump() for item in body.responses],
            request_id=body.request_id,
        )

    @app.post("/sessions/{session_id}/checktest")
    def submit_checktest(session_id: str, body: SubmitCheckTest):
        return manager.submit_checktest(
            session_id, body.answers, request_id=body.request_id
        )

    @app.post("/sessions/{session_id}/attributes")
    def submit_attributes(session_id: str, body: SubmitAttributes):
        return manager.submit_attributes(
            session_id, body.phase, body.attributes, request_id=body.request_id
        )

    @app.post("/sessions/{session_id}/questionnaire")
    def submit_questionnaire(session_id: str, body: SubmitQuestionnaire):
        return manager.submit_questionnaire(
            session_id, body.phase, body.answers, request_id=body.request_id
        )

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str):
        return manager.report(session_id)

    return app
