"""Registry of countries, artifacts, and images.

Storage is one sqlite file plus an optional content-addressed image
directory. All writes funnel through a single lock; reads are safe from any
thread.
"""

from __future__ import annotations

import hashlib
import io
import json
import sqlite3
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from PIL import Image, UnidentifiedImageError

from .errors import (
    DuplicateArtifact,
    EmptyName,
    MissingArtifact,
    MissingModelId,
    UnknownCountry,
    UnreadableImage,
)

CATEGORIES = ("architecture", "clothing", "food")


@dataclass(frozen=True)
class Country:
    code: str
    name: str
    prompt_name: str  # as rendered inside prompts ("the United States")
    demonym: str


DEFAULT_COUNTRIES = (
    Country("AZ", "Azerbaijan", "Azerbaijan", "Azerbaijani"),
    Country("PK", "Pakistan", "Pakistan", "Pakistani"),
    Country("ET", "Ethiopia", "Ethiopia", "Ethiopian"),
    Country("KR", "South Korea", "South Korea", "South Korean"),
    Country("ID", "Indonesia", "Indonesia", "Indonesian"),
    Country("CN", "China", "China", "Chinese"),
    Country("ES", "Spain", "Spain", "Spanish"),
    Country("MX", "Mexico", "Mexico", "Mexican"),
    Country("US", "USA", "the United States", "American"),
    Country("GB", "UK", "the United Kingdom", "British"),
)


@dataclass(frozen=True)
class Artifact:
    id: str
    country: str  # country code
    category: str
    name: str
    prompt_id: Optional[str] = None


@dataclass(frozen=True)
class ImageRecord:
    id: str
    artifact_id: str
    source: str  # "real" | "generated"
    uri: str
    checksum: str
    width: int
    height: int
    model_id: Optional[str] = None
    seed: Optional[int] = None


@dataclass(frozen=True)
class CatalogTargets:
    artifacts_per_cell: int = 50
    real_per_artifact: int = 5
    models: tuple[str, ...] = ("sdxl", "sd3m", "flux")


@dataclass
class CatalogValidationReport:
    artifact_counts: dict = field(default_factory=dict)  # (country, category) -> n
    real_image_counts: dict = field(default_factory=dict)  # artifact_id -> n
    generated_counts: dict = field(default_factory=dict)  # (artifact_id, model) -> n
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def file_checksum(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


_SCHEMA = """
CREATE TABLE IF NOT EXISTS artifacts (
    id TEXT PRIMARY KEY,
    country TEXT NOT NULL,
    category TEXT NOT NULL,
    name TEXT NOT NULL,
    prompt_id TEXT,
    UNIQUE (country, category, name)
);
CREATE TABLE IF NOT EXISTS images (
    id TEXT PRIMARY KEY,
    artifact_id TEXT NOT NULL REFERENCES artifacts(id),
    source TEXT NOT NULL CHECK (source IN ('real', 'generated')),
    uri TEXT NOT NULL,
    checksum TEXT NOT NULL,
    width INTEGER NOT NULL,
    height INTEGER NOT NULL,
    model_id TEXT,
    seed INTEGER
);
CREATE INDEX IF NOT EXISTS idx_images_artifact ON images(artifact_id);
CREATE TABLE IF NOT EXISTS prompts (
    id TEXT PRIMARY KEY,
    artifact_id TEXT NOT NULL REFERENCES artifacts(id),
    text TEXT NOT NULL,
    template_version TEXT NOT NULL
);
"""


class Catalog:
    """Single-writer, multi-reader artifact and image registry."""

    def __init__(
        self,
        db_path: str | Path = ":memory:",
        image_root: str | Path | None = None,
        countries: Iterable[Country] = DEFAULT_COUNTRIES,
    ):
        self._db_path = str(db_path)
        self._conn = sqlite3.connect(self._db_path, check_same_thread=False)
        self._conn.execute("PRAGMA foreign_keys = ON")
        self._lock = threading.RLock()
        self.image_root = Path(image_root) if image_root else None
        self.countries = {c.code: c for c in countries}
        self._by_name = {c.name.lower(): c for c in countries}
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    # -- countries -------------------------------------------------------

    def resolve_country(self, country: str) -> Country:
        if country in self.countries:
            return self.countries[country]
        c = self._by_name.get(country.lower())
        if c is None:
            raise UnknownCountry(country)
        return c

    # -- artifacts -------------------------------------------------------

    def register_artifact(self, country: str, category: str, name: str) -> str:
        name = name.strip()
        if not name:
            raise EmptyName("artifact name is empty")
        if category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        code = self.resolve_country(country).code
        # deterministic id: the same (country, category, name) always maps to
        # the same artifact id, so downstream sampling is reproducible
        artifact_id = hashlib.sha256(
            f"artifact:{code}:{category}:{name}".encode()
        ).hexdigest()[:32]
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO artifacts (id, country, category, name) VALUES (?,?,?,?)",
                    (artifact_id, code, category, name),
                )
                self._conn.commit()
            except sqlite3.IntegrityError:
                raise DuplicateArtifact(f"({code}, {category}, {name})") from None
        return artifact_id

    def find_artifact(self, country: str, category: str, name: str) -> Optional[Artifact]:
        code = self.resolve_country(country).code
        row = self._conn.execute(
            "SELECT id, country, category, name, prompt_id FROM artifacts"
            " WHERE country=? AND category=? AND name=?",
            (code, category, name.strip()),
        ).fetchone()
        return Artifact(*row) if row else None

    def get_artifact(self, artifact_id: str) -> Artifact:
        row = self._conn.execute(
            "SELECT id, country, category, name, prompt_id FROM artifacts WHERE id=?",
            (artifact_id,),
        ).fetchone()
        if row is None:
            raise MissingArtifact(artifact_id)
        return Artifact(*row)

    def artifacts(
        self, country: str | None = None, category: str | None = None
    ) -> list[Artifact]:
        query = "SELECT id, country, category, name, prompt_id FROM artifacts"
        clauses, params = [], []
        if country is not None:
            clauses.append("country=?")
            params.append(self.resolve_country(country).code)
        if category is not None:
            clauses.append("category=?")
            params.append(category)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY country, category, name"
        return [Artifact(*r) for r in self._conn.execute(query, params)]

    # -- prompts ---------------------------------------------------------

    def save_prompt(self, artifact_id: str, text: str, template_version: str) -> str:
        self.get_artifact(artifact_id)
        n_prior = self._conn.execute(
            "SELECT COUNT(*) FROM prompts WHERE artifact_id=?", (artifact_id,)
        ).fetchone()[0]
        prompt_id = hashlib.sha256(
            f"prompt:{artifact_id}:{template_version}:{n_prior}".encode()
        ).hexdigest()[:32]
        with self._lock:
            self._conn.execute(
                "INSERT INTO prompts (id, artifact_id, text, template_version) VALUES (?,?,?,?)",
                (prompt_id, artifact_id, text, template_version),
            )
            self._conn.execute(
                "UPDATE artifacts SET prompt_id=? WHERE id=?", (prompt_id, artifact_id)
            )
            self._conn.commit()
        return prompt_id

    def get_prompt(self, prompt_id: str) -> tuple[str, str, str]:
        """Returns (artifact_id, text, template_version)."""
        row = self._conn.execute(
            "SELECT artifact_id, text, template_version FROM prompts WHERE id=?",
            (prompt_id,),
        ).fetchone()
        if row is None:
            raise KeyError(prompt_id)
        return row

    # -- images ----------------------------------------------------------

    def _probe_image(self, path: Path) -> tuple[int, int]:
        try:
            with Image.open(path) as im:
                im.load()
                return im.width, im.height
        except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
            raise UnreadableImage(f"{path}: {exc}") from exc

    def register_image(
        self,
        artifact_id: str,
        source: str,
        uri: str | Path,
        model_id: str | None = None,
        seed: int | None = None,
    ) -> str:
        if source not in ("real", "generated"):
            raise ValueError(f"unknown source {source!r}")
        if source == "generated" and not model_id:
            raise MissingModelId(f"generated image for {artifact_id} lacks model_id")
        if source == "real" and model_id:
            raise ValueError("real images must not carry a model_id")
        self.get_artifact(artifact_id)
        path = Path(uri)
        if self.image_root and not path.is_absolute():
            path = self.image_root / path
        width, height = self._probe_image(path)
        checksum = file_checksum(path)
        with self._lock:
            n_prior = self._conn.execute(
                "SELECT COUNT(*) FROM images WHERE artifact_id=?", (artifact_id,)
            ).fetchone()[0]
            image_id = hashlib.sha256(
                f"image:{artifact_id}:{n_prior}".encode()
            ).hexdigest()[:32]
            self._conn.execute(
                "INSERT INTO images (id, artifact_id, source, uri, checksum, width,"
                " height, model_id, seed) VALUES (?,?,?,?,?,?,?,?,?)",
                (image_id, artifact_id, source, str(uri), checksum, width, height, model_id, seed),
            )
            self._conn.commit()
        return image_id

    def register_image_bytes(
        self,
        artifact_id: str,
        source: str,
        data: bytes,
        model_id: str | None = None,
        seed: int | None = None,
        suffix: str = ".png",
    ) -> str:
        """Write bytes into the content-addressed store, then register."""
        if self.image_root is None:
            raise ValueError("catalog has no image_root for content-addressed storage")
        try:
            Image.open(io.BytesIO(data)).load()
        except (UnidentifiedImageError, OSError) as exc:
            raise UnreadableImage(str(exc)) from exc
        digest = hashlib.sha256(data).hexdigest()
        rel = Path("objects") / digest[:2] / (digest + suffix)
        path = self.image_root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if not path.exists():
            path.write_bytes(data)
        return self.register_image(artifact_id, source, rel, model_id=model_id, seed=seed)

    def get_image(self, image_id: str) -> ImageRecord:
        row = self._conn.execute(
            "SELECT id, artifact_id, source, uri, checksum, width, height, model_id, seed"
            " FROM images WHERE id=?",
            (image_id,),
        ).fetchone()
        if row is None:
            raise KeyError(image_id)
        return ImageRecord(*row)

    def image_path(self, image: ImageRecord | str) -> Path:
        if isinstance(image, str):
            image = self.get_image(image)
        path = Path(image.uri)
        if self.image_root and not path.is_absolute():
            path = self.image_root / path
        return path

    def images(
        self,
        artifact_id: str | None = None,
        source: str | None = None,
        model_id: str | None = None,
    ) -> list[ImageRecord]:
        query = (
            "SELECT id, artifact_id, source, uri, checksum, width, height, model_id, seed"
            " FROM images"
        )
        clauses, params = [], []
        if artifact_id is not None:
            clauses.append("artifact_id=?")
            params.append(artifact_id)
        if source is not None:
            clauses.append("source=?")
            params.append(source)
        if model_id is not None:
            clauses.append("model_id=?")
            params.append(model_id)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY artifact_id, source, id"
        return [ImageRecord(*r) for r in self._conn.execute(query, params)]

    # -- validation ------------------------------------------------------

    def validate(self, targets: CatalogTargets = CatalogTargets()) -> CatalogValidationReport:
        report = CatalogValidationReport()
        for code in sorted(self.countries):
            for category in CATEGORIES:
                arts = self.artifacts(country=code, category=category)
                report.artifact_counts[(code, category)] = len(arts)
                if len(arts) != targets.artifacts_per_cell:
                    report.violations.append(
                        {
                            "kind": "artifact_count",
                            "country": code,
                            "category": category,
                            "expected": targets.artifacts_per_cell,
                            "actual": len(arts),
                        }
                    )
                for art in arts:
                    n_real = len(self.images(artifact_id=art.id, source="real"))
                    report.real_image_counts[art.id] = n_real
                    if n_real < targets.real_per_artifact:
                        report.violations.append(
                            {
                                "kind": "real_image_count",
                                "artifact_id": art.id,
                                "expected": targets.real_per_artifact,
                                "actual": n_real,
                            }
                        )
                    for model in targets.models:
                        n_gen = len(
                            self.images(artifact_id=art.id, source="generated", model_id=model)
                        )
                        report.generated_counts[(art.id, model)] = n_gen
                        if n_gen < 1:
                            report.violations.append(
                                {
                                    "kind": "missing_generated",
                                    "artifact_id": art.id,
                                    "model": model,
                                }
                            )
        return report

    # -- export / import -------------------------------------------------

    def export_manifest(self, path: str | Path) -> None:
        manifest = {
            "artifacts": [
                {
                    "id": a.id,
                    "country": a.country,
                    "category": a.category,
                    "name": a.name,
                    "prompt_id": a.prompt_id,
                }
                for a in self.artifacts()
            ],
            "images": [
                {
                    "id": i.id,
                    "artifact_id": i.artifact_id,
                    "source": i.source,
                    "uri": i.uri,
                    "checksum": i.checksum,
                    "model_id": i.model_id,
                    "seed": i.seed,
                    "width": i.width,
                    "height": i.height,
                }
                for i in self.images()
            ],
        }
        Path(path).write_text(json.dumps(manifest, indent=2))

    def import_manifest(self, path: str | Path) -> None:
        manifest = json.loads(Path(path).read_text())
        with self._lock:
            for a in manifest["artifacts"]:
                self._conn.execute(
                    "INSERT OR IGNORE INTO artifacts (id, country, category, name, prompt_id)"
                    " VALUES (?,?,?,?,?)",
                    (a["id"], a["country"], a["category"], a["name"], a.get("prompt_id")),
                )
            for i in manifest["images"]:
                self._conn.execute(
                    "INSERT OR IGNORE INTO images (id, artifact_id, source, uri, checksum,"
                    " width, height, model_id, seed) VALUES (?,?,?,?,?,?,?,?,?)",
                    (
                        i["id"],
                        i["artifact_id"],
                        i["source"],
                        i["uri"],
                        i["checksum"],
                        i["width"],
                        i["height"],
                        i.get("model_id"),
                        i.get("seed"),
                    ),
                )
            self._conn.commit()

    @property
    def connection(self) -> sqlite3.Connection:
        return self._conn

    @property
    def write_lock(self) -> threading.RLock:
        return self._lock

    def close(self) -> None:
        self._conn.close()
