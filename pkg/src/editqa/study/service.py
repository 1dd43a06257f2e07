"""HTTP front end for subjective studies.

Endpoints (all JSON bodies/responses carry ``schema_version``):

- ``POST /studies`` create a study from inline items or a manifest file
- ``POST /studies/{id}/enroll`` enroll or resume an annotator
- ``GET  /sessions/{id}/next`` next unrated item or the done marker
- ``POST /sessions/{id}/ratings`` submit ``{triplet_id, score}``
- ``GET  /studies/{id}/progress`` per-annotator completion + ITU warning
- ``GET  /studies/{id}/export.csv`` ratings in the MOS-pipeline schema
- ``GET  /media/{path}`` static clip files
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from ..errors import UserInputError
from ..manifest import load_manifest
from ..mos import RATINGS_CSV_HEADER
from .store import (DEFAULT_INSTRUCTIONS, DEFAULT_MIN_PARTICIPANTS, SCHEMA_VERSION,
                    Session, StudyError, StudyItem, StudyStore)


class StudyItemBody(BaseModel):
    triplet_id: str
    source_url: str
    edited_url: str
    prompt: str


class CreateStudyBody(BaseModel):
    study_id: str | None = None
    seed: int = 0
    min_participants: int = DEFAULT_MIN_PARTICIPANTS
    instructions: str = DEFAULT_INSTRUCTIONS
    triplets: list[StudyItemBody] | None = None
    manifest: str | None = None


class EnrollBody(BaseModel):
    annotator_id: str = Field(min_length=1)


class RatingBody(BaseModel):
    triplet_id: str
    score: int


def _session_payload(session: Session) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "session_id": session.session_id,
        "study_id": session.study_id,
        "annotator_id": session.annotator_id,
        "cursor": session.cursor,
        "total": len(session.order),
        "complete": session.complete,
        "status": "complete" if session.complete else "active",
    }


def create_app(store: StudyStore, media_root: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="editqa study service")
    media_root = Path(media_root).resolve() if media_root is not None else None

    @app.exception_handler(StudyError)
    async def study_error_handler(request: Request, exc: StudyError):
        return JSONResponse(status_code=exc.status, content={
            "schema_version": SCHEMA_VERSION,
            "error": {"code": exc.code, "message": str(exc)}})

    @app.exception_handler(UserInputError)
    async def user_error_handler(request: Request, exc: UserInputError):
        return JSONResponse(status_code=400, content={
            "schema_version": SCHEMA_VERSION,
            "error": {"code": "bad_request", "message": str(exc)}})

    @app.get("/healthz")
    def healthz():
        return {"schema_version": SCHEMA_VERSION, "status": "ok"}

    @app.post("/studies")
    def create_study(body: CreateStudyBody):
        if body.triplets:
            items = [StudyItem(**t.model_dump()) for t in body.triplets]
        elif body.manifest:
            items = [StudyItem.from_triplet(t) for t in load_manifest(body.manifest)]
        else:
            raise StudyError("supply 'triplets' inline or a 'manifest' path",
                             "empty_study", 400)
        study = store.create_study(items, seed=body.seed, study_id=body.study_id,
                                   min_participants=body.min_participants,
                                   instructions=body.instructions)
        return {"schema_version": SCHEMA_VERSION, "study_id": study.study_id,
                "n_items": len(study.items), "instructions": study.instructions}

    @app.post("/studies/{study_id}/enroll")
    def enroll(study_id: str, body: EnrollBody):
        session = store.enroll(study_id, body.annotator_id)
        payload = _session_payload(session)
        payload["instructions"] = store.get_study(study_id).instructions
        return payload

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        return _session_payload(store.get_session(session_id))

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str):
        item, session = store.next_item(session_id)
        payload = _session_payload(session)
        if item is None:
            payload["done"] = True
            payload["item"] = None
        else:
            payload["done"] = False
            payload["item"] = {"triplet_id": item.triplet_id,
                               "source_url": item.source_url,
                               "edited_url": item.edited_url,
                               "prompt": item.prompt,
                               "index": session.cursor}
        return payload

    @app.post("/sessions/{session_id}/ratings")
    def submit_rating(session_id: str, body: RatingBody):
        ack = store.submit_rating(session_id, body.triplet_id, body.score)
        return {"schema_version": SCHEMA_VERSION, "accepted": True, **ack}

    @app.get("/studies/{study_id}/progress")
    def progress(study_id: str):
        return {"schema_version": SCHEMA_VERSION, **store.progress(study_id)}

    @app.get("/studies/{study_id}/export.csv")
    def export_csv(study_id: str):
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(RATINGS_CSV_HEADER)
        for row in store.export_rows(study_id):
            writer.writerow(row)
        return PlainTextResponse(buffer.getvalue(), media_type="text/csv")

    @app.get("/media/{path:path}")
    def media(path: str):
        if media_root is None:
            raise StudyError("this deployment serves no media files",
                             "media_disabled", 404)
        target = (media_root / path).resolve()
        if not str(target).startswith(str(media_root)):
            raise StudyError("path escapes the media root", "bad_path", 400)
        if not target.is_file():
            raise StudyError(f"no such media file: {path}", "media_not_found", 404)
        return FileResponse(target)

    return app
