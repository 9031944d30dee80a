"""Survey assembly, annotation ingestion, and inter-annotator agreement.

A survey question shows three real reference images of one artifact next to
one generated candidate; annotators answer four similarity aspects, a
description-match question, and a realism question on a 1-5 scale, plus an
inappropriate-content flag.
"""

from __future__ import annotations

import datetime as dt
import sqlite3
import uuid
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .catalog import CATEGORIES, Catalog
from .errors import (
    DegenerateAgreement,
    DuplicateResponse,
    InsufficientImages,
    LikertOutOfRange,
    UnknownQuestion,
)
from .stats import FleissKappaResult, fleiss_kappa

LIKERT_ANCHORS = ("Not at all", "Slightly", "Somewhat", "Mostly", "Completely")

ASPECT_LABELS = {
    "architecture": (
        "overall similarity",
        "shapes",
        "materials/textures",
        "background/surroundings",
    ),
    "clothing": (
        "overall similarity",
        "color/texture",
        "design/patterns",
        "background elements",
    ),
    "food": (
        "overall similarity",
        "presentation/plating",
        "colors/textures",
        "ingredients/components",
    ),
}

QUESTION_KEYS = ("q1_1", "q1_2", "q1_3", "q1_4", "q2", "q3")

_SCHEMA = """
CREATE TABLE IF NOT EXISTS surveys (
    id TEXT PRIMARY KEY,
    country TEXT NOT NULL,
    seed INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS survey_questions (
    id TEXT PRIMARY KEY,
    survey_id TEXT NOT NULL REFERENCES surveys(id),
    artifact_id TEXT NOT NULL,
    ref1 TEXT NOT NULL,
    ref2 TEXT NOT NULL,
    ref3 TEXT NOT NULL,
    generated_image_id TEXT NOT NULL,
    model_id TEXT NOT NULL,
    position INTEGER NOT NULL,
    UNIQUE (survey_id, position)
);
CREATE TABLE IF NOT EXISTS annotators (
    id TEXT NOT NULL,
    survey_id TEXT NOT NULL REFERENCES surveys(id),
    PRIMARY KEY (id, survey_id)
);
CREATE TABLE IF NOT EXISTS annotations (
    question_id TEXT NOT NULL REFERENCES survey_questions(id),
    annotator_id TEXT NOT NULL,
    q1_1 INTEGER NOT NULL, q1_2 INTEGER NOT NULL,
    q1_3 INTEGER NOT NULL, q1_4 INTEGER NOT NULL,
    q2 INTEGER NOT NULL, q3 INTEGER NOT NULL,
    inappropriate INTEGER NOT NULL DEFAULT 0,
    submitted_at TEXT NOT NULL,
    PRIMARY KEY (question_id, annotator_id)
);
"""


@dataclass(frozen=True)
class SurveyQuestion:
    id: str
    survey_id: str
    artifact_id: str
    reference_image_ids: tuple[str, str, str]
    generated_image_id: str
    model_id: str
    position: int


@dataclass(frozen=True)
class AnnotationRecord:
    question_id: str
    annotator_id: str
    q1: tuple[int, int, int, int]
    q2: int
    q3: int
    inappropriate: bool
    submitted_at: str

    def value(self, key: str) -> int:
        if key.startswith("q1_"):
            return self.q1[int(key[3]) - 1]
        return {"q2": self.q2, "q3": self.q3}[key]

    @property
    def similarity_mean(self) -> float:
        """Mean of the four similarity aspects (the image-image score)."""
        return sum(self.q1) / 4.0

    @property
    def six_question_mean(self) -> float:
        return (sum(self.q1) + self.q2 + self.q3) / 6.0


@dataclass
class AgreementReport:
    country: str
    kappa: Optional[float]  # mean over per-question kappas; None if all undefined
    per_question: dict = field(default_factory=dict)  # key -> float | None
    n_items: int = 0
    n_raters: int = 0
    n_categories: int = 5
    aggregation: str = "mean of per-question Fleiss' kappa over the six Likert questions"


@dataclass
class RowError:
    row: int
    reason: str


class SurveyStore:
    """Survey persistence on the catalog's sqlite connection."""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self._conn = catalog.connection
        self._lock = catalog.write_lock
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    # -- assembly ---------------------------------------------------------

    def build_survey(
        self,
        country: str,
        rng_seed: int,
        models: Sequence[str] = ("sdxl", "sd3m", "flux"),
        questions_per_category: int = 50,
        shuffle: bool = False,
    ) -> str:
        """Build one survey for a country, one question per artifact.

        Reference triple and shown model are both drawn from rng_seed, so the
        same inputs always produce the same question list.
        """
        code = self.catalog.resolve_country(country).code
        rng = np.random.default_rng(rng_seed)
        questions = []
        for category in CATEGORIES:
            arts = self.catalog.artifacts(country=code, category=category)
            if len(arts) < questions_per_category:
                raise InsufficientImages(
                    f"{code}/{category}: {len(arts)} artifacts, need {questions_per_category}"
                )
            for art in arts[:questions_per_category]:
                real = self.catalog.images(artifact_id=art.id, source="real")
                if len(real) < 3:
                    raise InsufficientImages(
                        f"artifact {art.name} ({art.id}) has {len(real)} real images, need 3"
                    )
                model = models[int(rng.integers(0, len(models)))]
                generated = self.catalog.images(
                    artifact_id=art.id, source="generated", model_id=model
                )
                if not generated:
                    raise InsufficientImages(
                        f"artifact {art.name} ({art.id}) has no generated image for {model}"
                    )
                refs = [real[i].id for i in rng.choice(len(real), size=3, replace=False)]
                gen = generated[int(rng.integers(0, len(generated)))]
                questions.append((art.id, refs, gen.id, model))
        if shuffle:
            rng.shuffle(questions)

        survey_id = uuid.uuid4().hex
        with self._lock:
            self._conn.execute(
                "INSERT INTO surveys (id, country, seed) VALUES (?,?,?)",
                (survey_id, code, rng_seed),
            )
            for pos, (artifact_id, refs, gen_id, model) in enumerate(questions):
                self._conn.execute(
                    "INSERT INTO survey_questions (id, survey_id, artifact_id, ref1, ref2,"
                    " ref3, generated_image_id, model_id, position) VALUES (?,?,?,?,?,?,?,?,?)",
                    (uuid.uuid4().hex, survey_id, artifact_id, *refs, gen_id, model, pos),
                )
            self._conn.commit()
        return survey_id

    def survey_country(self, survey_id: str) -> Optional[str]:
        row = self._conn.execute("SELECT country FROM surveys WHERE id=?", (survey_id,)).fetchone()
        return row[0] if row else None

    def surveys(self) -> list[tuple[str, str, int]]:
        return list(self._conn.execute("SELECT id, country, seed FROM surveys ORDER BY country"))

    def questions(self, survey_id: str) -> list[SurveyQuestion]:
        rows = self._conn.execute(
            "SELECT id, survey_id, artifact_id, ref1, ref2, ref3, generated_image_id,"
            " model_id, position FROM survey_questions WHERE survey_id=? ORDER BY position",
            (survey_id,),
        ).fetchall()
        return [
            SurveyQuestion(r[0], r[1], r[2], (r[3], r[4], r[5]), r[6], r[7], r[8]) for r in rows
        ]

    def get_question(self, question_id: str) -> Optional[SurveyQuestion]:
        r = self._conn.execute(
            "SELECT id, survey_id, artifact_id, ref1, ref2, ref3, generated_image_id,"
            " model_id, position FROM survey_questions WHERE id=?",
            (question_id,),
        ).fetchone()
        if r is None:
            return None
        return SurveyQuestion(r[0], r[1], r[2], (r[3], r[4], r[5]), r[6], r[7], r[8])

    # -- annotators -------------------------------------------------------

    def register_annotator(self, annotator_id: str, survey_id: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR IGNORE INTO annotators (id, survey_id) VALUES (?,?)",
                (annotator_id, survey_id),
            )
            self._conn.commit()

    def annotator_exists(self, annotator_id: str, survey_id: str) -> bool:
        return (
            self._conn.execute(
                "SELECT 1 FROM annotators WHERE id=? AND survey_id=?", (annotator_id, survey_id)
            ).fetchone()
            is not None
        )

    # -- responses --------------------------------------------------------

    @staticmethod
    def _validate_likert(values: Mapping[str, int]) -> None:
        for key in QUESTION_KEYS:
            v = values[key]
            if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= 5:
                raise LikertOutOfRange(f"{key}={v!r}")

    def record_response(
        self,
        question_id: str,
        annotator_id: str,
        q1: Sequence[int],
        q2: int,
        q3: int,
        inappropriate: bool = False,
    ) -> AnnotationRecord:
        """Persist one complete response; all-or-nothing per record."""
        question = self.get_question(question_id)
        if question is None:
            raise UnknownQuestion(question_id)
        if len(q1) != 4:
            raise LikertOutOfRange(f"q1 needs 4 values, got {len(q1)}")
        values = dict(zip(("q1_1", "q1_2", "q1_3", "q1_4"), q1)) | {"q2": q2, "q3": q3}
        self._validate_likert(values)
        stamp = dt.datetime.now(dt.timezone.utc).isoformat()
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO annotations (question_id, annotator_id, q1_1, q1_2, q1_3,"
                    " q1_4, q2, q3, inappropriate, submitted_at) VALUES (?,?,?,?,?,?,?,?,?,?)",
                    (question_id, annotator_id, *q1, q2, q3, int(bool(inappropriate)), stamp),
                )
                self._conn.commit()
            except sqlite3.IntegrityError:
                raise DuplicateResponse(f"{annotator_id} already answered {question_id}") from None
        return AnnotationRecord(
            question_id, annotator_id, tuple(q1), q2, q3, bool(inappropriate), stamp
        )

    def ingest_annotations(
        self, rows: Iterable[Mapping[str, object]]
    ) -> tuple[list[AnnotationRecord], list[RowError]]:
        """Ingest CSV-shaped rows; invalid rows are reported, valid rows kept."""
        records, errors = [], []
        for idx, row in enumerate(rows, start=1):
            try:
                q1 = [int(row[f"q1_{i}"]) for i in range(1, 5)]
                q2, q3 = int(row["q2"]), int(row["q3"])
                flag = str(row.get("inappropriate", "0")).strip().lower() in ("1", "true", "yes")
                question_id = str(row["question_id"])
                annotator_id = str(row["annotator_id"])
            except (KeyError, ValueError) as exc:
                errors.append(RowError(idx, f"malformed row: {exc}"))
                continue
            question = self.get_question(question_id)
            if question is not None:
                self.register_annotator(annotator_id, question.survey_id)
            try:
                records.append(
                    self.record_response(question_id, annotator_id, q1, q2, q3, flag)
                )
            except (LikertOutOfRange, UnknownQuestion, DuplicateResponse) as exc:
                errors.append(RowError(idx, f"{type(exc).__name__}: {exc}"))
        return records, errors

    def annotations(self, survey_id: str | None = None) -> list[AnnotationRecord]:
        query = (
            "SELECT a.question_id, a.annotator_id, a.q1_1, a.q1_2, a.q1_3, a.q1_4,"
            " a.q2, a.q3, a.inappropriate, a.submitted_at FROM annotations a"
        )
        params: tuple = ()
        if survey_id is not None:
            query += (
                " JOIN survey_questions q ON q.id = a.question_id WHERE q.survey_id=?"
            )
            params = (survey_id,)
        return [
            AnnotationRecord(r[0], r[1], (r[2], r[3], r[4], r[5]), r[6], r[7], bool(r[8]), r[9])
            for r in self._conn.execute(query, params)
        ]

    def answered(self, survey_id: str, annotator_id: str) -> set[str]:
        rows = self._conn.execute(
            "SELECT a.question_id FROM annotations a JOIN survey_questions q"
            " ON q.id = a.question_id WHERE q.survey_id=? AND a.annotator_id=?",
            (survey_id, annotator_id),
        ).fetchall()
        return {r[0] for r in rows}

    # -- agreement --------------------------------------------------------

    def agreement_report(self, survey_id: str) -> AgreementReport:
        """Per-country agreement: Fleiss' kappa per Likert question.

        Items are the survey's questions regardless of which model produced
        each image; the headline number is the mean of the six per-question
        kappas (per-question values are always carried alongside).
        """
        country = self.survey_country(survey_id)
        annotations = self.annotations(survey_id)
        by_question: dict[str, list[AnnotationRecord]] = {}
        for rec in annotations:
            by_question.setdefault(rec.question_id, []).append(rec)
        if not by_question:
            raise ValueError(f"survey {survey_id} has no annotations")
        rater_counts = {len(v) for v in by_question.values()}
        n_raters = max(rater_counts)
        # only fully-rated items enter the kappa matrix
        complete = {q: recs for q, recs in by_question.items() if len(recs) == n_raters}

        per_question: dict[str, Optional[float]] = {}
        result_meta: Optional[FleissKappaResult] = None
        for key in QUESTION_KEYS:
            matrix = []
            for recs in complete.values():
                row = [0] * 5
                for rec in recs:
                    row[rec.value(key) - 1] += 1
                matrix.append(row)
            try:
                result = fleiss_kappa(matrix)
                per_question[key] = result.kappa
                result_meta = result
            except DegenerateAgreement:
                per_question[key] = None
        defined = [v for v in per_question.values() if v is not None]
        return AgreementReport(
            country=country or "?",
            kappa=float(np.mean(defined)) if defined else None,
            per_question=per_question,
            n_items=len(complete),
            n_raters=n_raters,
        )
