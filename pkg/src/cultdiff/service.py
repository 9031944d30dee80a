"""HTTP JSON API for serving surveys to annotators."""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, Field

from .catalog import Catalog
from .errors import DuplicateResponse, LikertOutOfRange, UnknownQuestion
from .survey import ASPECT_LABELS, LIKERT_ANCHORS, SurveyStore


class ResponsePayload(BaseModel):
    question_id: str
    q1: list[int] = Field(min_length=4, max_length=4)
    q2: int
    q3: int
    inappropriate: bool = False


def question_labels(category: str) -> list[dict]:
    aspects = ASPECT_LABELS[category]
    labels = [{"key": f"q1_{i + 1}", "label": aspects[i]} for i in range(4)]
    labels.append({"key": "q2", "label": "description match"})
    labels.append({"key": "q3", "label": "realism"})
    return labels


def create_app(store: SurveyStore) -> FastAPI:
    app = FastAPI(title="cultdiff survey service")
    catalog: Catalog = store.catalog

    @app.get("/images/{image_id}")
    def image(image_id: str):
        try:
            record = catalog.get_image(image_id)
        except KeyError:
            raise HTTPException(404, "unknown image")
        return FileResponse(catalog.image_path(record))

    @app.get("/api/surveys/{sid}/annotators/{aid}/next")
    def next_question(sid: str, aid: str):
        if store.survey_country(sid) is None:
            raise HTTPException(404, "unknown survey")
        if not store.annotator_exists(aid, sid):
            raise HTTPException(404, "unknown annotator")
        questions = store.questions(sid)
        answered = store.answered(sid, aid)
        pending = [q for q in questions if q.id not in answered]
        if not pending:
            return {"done": True, "answered": len(answered), "total": len(questions)}
        q = pending[0]
        category = catalog.get_artifact(q.artifact_id).category
        return {
            "done": False,
            "question_id": q.id,
            "position": q.position,
            "total": len(questions),
            "answered": len(answered),
            "image_urls": {
                "references": [f"/images/{r}" for r in q.reference_image_ids],
                "candidate": f"/images/{q.generated_image_id}",
            },
            "questions": question_labels(category),
            "scale": list(LIKERT_ANCHORS),
        }

    @app.post("/api/surveys/{sid}/annotators/{aid}/responses", status_code=201)
    def submit(sid: str, aid: str, payload: ResponsePayload):
        if store.survey_country(sid) is None:
            raise HTTPException(404, "unknown survey")
        if not store.annotator_exists(aid, sid):
            raise HTTPException(404, "unknown annotator")
        question = store.get_question(payload.question_id)
        if question is None or question.survey_id != sid:
            raise HTTPException(404, "unknown question")
        try:
            store.record_response(
                payload.question_id,
                aid,
                payload.q1,
                payload.q2,
                payload.q3,
                payload.inappropriate,
            )
        except DuplicateResponse:
            raise HTTPException(409, "already answered")
        except (LikertOutOfRange, UnknownQuestion) as exc:
            raise HTTPException(422, str(exc))
        answered = len(store.answered(sid, aid))
        return {"ok": True, "answered": answered}

    @app.get("/api/surveys/{sid}/progress")
    def progress(sid: str):
        if store.survey_country(sid) is None:
            raise HTTPException(404, "unknown survey")
        total = len(store.questions(sid))
        rows = store.catalog.connection.execute(
            "SELECT a.annotator_id, COUNT(*) FROM annotations a JOIN survey_questions q"
            " ON q.id = a.question_id WHERE q.survey_id=? GROUP BY a.annotator_id",
            (sid,),
        ).fetchall()
        return {
            "total": total,
            "annotators": {aid: n for aid, n in rows},
        }

    @app.exception_handler(Exception)
    async def unhandled(request, exc):  # pragma: no cover
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    return app
