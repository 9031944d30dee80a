"""Procedural pseudo-culture fixture for offline end-to-end runs.

Each pseudo-culture owns a color palette and a shape grammar; artifacts are
fixed shape layouts rendered with jitter. Generated variants blend an
artifact toward a foreign culture by a corruption level in [0, 1], which is
the ground-truth dissimilarity the oracle annotator rates. Corruption mostly
rotates hue and swaps shape types in place, so luminance-structure baselines
see much less of it than a color-aware encoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import io

import numpy as np
from PIL import Image

from .catalog import CATEGORIES, Catalog, Country
from .pairs import AnnotatedGenerated

FIXTURE_MODELS = ("m1", "m2", "m3")
VARIANT_CORRUPTION = (0.15, 0.5, 0.85)  # one level per pseudo-model

# saturated, roughly isoluminant palettes: hue carries the cultural signal
_PALETTES = np.array(
    [
        [[0.85, 0.25, 0.20], [0.90, 0.55, 0.15], [0.80, 0.40, 0.30]],  # warm reds
        [[0.15, 0.45, 0.85], [0.20, 0.65, 0.80], [0.30, 0.35, 0.80]],  # blues
        [[0.20, 0.70, 0.30], [0.45, 0.75, 0.20], [0.25, 0.60, 0.45]],  # greens
        [[0.70, 0.25, 0.75], [0.85, 0.30, 0.55], [0.55, 0.35, 0.80]],  # magentas
    ]
)
_BACKGROUNDS = np.array(
    [[0.45, 0.35, 0.30], [0.30, 0.35, 0.45], [0.32, 0.42, 0.33], [0.40, 0.32, 0.42]]
)
# preferred shape types per culture (indices into the mask table)
_GRAMMARS = ((0, 1), (1, 2), (2, 3), (3, 0))


def fixture_countries(n: int = 4) -> list[Country]:
    return [
        Country(f"P{i + 1}", f"Pseudoland {i + 1}", f"Pseudoland {i + 1}", f"Pseudolandic {i + 1}")
        for i in range(n)
    ]


@dataclass
class _Shape:
    kind: int
    cx: float
    cy: float
    radius: float
    color_idx: int


@dataclass
class ArtifactPrototype:
    culture: int
    shapes: list[_Shape]


def make_prototype(culture: int, artifact_index: int, n_shapes: int = 6) -> ArtifactPrototype:
    rng = np.random.default_rng(hash((culture, artifact_index)) % (2**32))
    grammar = _GRAMMARS[culture % len(_GRAMMARS)]
    shapes = [
        _Shape(
            kind=int(grammar[int(rng.integers(0, len(grammar)))]),
            cx=float(rng.uniform(0.15, 0.85)),
            cy=float(rng.uniform(0.15, 0.85)),
            radius=float(rng.uniform(0.08, 0.18)),
            color_idx=int(rng.integers(0, 3)),
        )
        for _ in range(n_shapes)
    ]
    return ArtifactPrototype(culture=culture, shapes=shapes)


def _shape_mask(kind: int, cx: float, cy: float, radius: float, size: int) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size] / size
    dx, dy = xs - cx, ys - cy
    if kind == 0:  # circle
        return dx * dx + dy * dy < radius * radius
    if kind == 1:  # square
        return (np.abs(dx) < radius) & (np.abs(dy) < radius)
    if kind == 2:  # triangle
        return (dy > -radius) & (np.abs(dx) < (radius - dy) * 0.7) & (dy < radius)
    # cross
    return ((np.abs(dx) < radius * 0.4) & (np.abs(dy) < radius)) | (
        (np.abs(dy) < radius * 0.4) & (np.abs(dx) < radius)
    )


def render_image(
    proto: ArtifactPrototype,
    rng: np.random.Generator,
    corruption: float = 0.0,
    foreign_culture: int | None = None,
    size: int = 64,
) -> np.ndarray:
    """Render one view of an artifact; corruption blends toward a foreign
    culture's palette and grammar. Returns uint8 HxWx3."""
    culture = proto.culture
    if foreign_culture is None:
        foreign_culture = (culture + 1) % len(_PALETTES)
    background = (1 - corruption) * _BACKGROUNDS[culture] + corruption * _BACKGROUNDS[
        foreign_culture
    ]
    canvas = np.ones((size, size, 3)) * background
    foreign_grammar = _GRAMMARS[foreign_culture % len(_GRAMMARS)]
    for shape in proto.shapes:
        kind = shape.kind
        if rng.random() < corruption:
            kind = int(foreign_grammar[int(rng.integers(0, len(foreign_grammar)))])
        color = (1 - corruption) * _PALETTES[culture][shape.color_idx] + corruption * _PALETTES[
            foreign_culture
        ][shape.color_idx]
        cx = shape.cx + float(rng.normal(0, 0.015))
        cy = shape.cy + float(rng.normal(0, 0.015))
        mask = _shape_mask(kind, cx, cy, shape.radius, size)
        canvas[mask] = color
    canvas += rng.normal(0, 0.02, canvas.shape)
    return (np.clip(canvas, 0, 1) * 255).astype(np.uint8)


def image_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr, "RGB").save(buf, format="PNG")
    return buf.getvalue()


class OracleAnnotator:
    """Noisy monotone rater: Likert = clip(round(1 + 4 * similarity + noise))."""

    def __init__(self, annotator_id: str, seed: int, noise_sd: float = 0.35):
        self.annotator_id = annotator_id
        self.rng = np.random.default_rng(seed)
        self.noise_sd = noise_sd

    def likert(self, similarity: float) -> int:
        raw = 1.0 + 4.0 * similarity + self.rng.normal(0, self.noise_sd)
        return int(np.clip(round(raw), 1, 5))

    def rate_question(self, similarity: float) -> dict[str, int]:
        """All six Likert answers for one question."""
        values = {f"q1_{i}": self.likert(similarity) for i in range(1, 5)}
        values["q2"] = self.likert(similarity)
        values["q3"] = self.likert(min(1.0, similarity + 0.1))
        return values


@dataclass
class FixtureData:
    catalog: Catalog
    truth: dict = field(default_factory=dict)  # generated image id -> ground-truth similarity
    inputs: list = field(default_factory=list)  # AnnotatedGenerated per generated image
    artifact_protos: dict = field(default_factory=dict)  # artifact_id -> prototype


def build_fixture(
    root: str | Path,
    seed: int = 0,
    n_cultures: int = 4,
    artifacts_per_culture: int = 12,
    references_per_artifact: int = 5,
    n_annotators: int = 3,
    image_size: int = 64,
) -> FixtureData:
    """Materialize the pseudo-culture corpus with oracle annotations.

    Artifacts are spread evenly over the three categories. Every artifact
    gets `references_per_artifact` real renders and one generated variant per
    pseudo-model at that model's corruption level.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    catalog = Catalog(
        db_path=root / "fixture.db",
        image_root=root / "images",
        countries=fixture_countries(n_cultures),
    )
    rng = np.random.default_rng(seed)
    annotators = [
        OracleAnnotator(f"oracle-{i + 1}", seed=seed * 1000 + i) for i in range(n_annotators)
    ]
    data = FixtureData(catalog=catalog)
    per_category = artifacts_per_culture // len(CATEGORIES)
    for culture in range(n_cultures):
        code = f"P{culture + 1}"
        for c_idx, category in enumerate(CATEGORIES):
            for j in range(per_category):
                art_index = c_idx * per_category + j
                name = f"{category}-{art_index + 1}"
                artifact_id = catalog.register_artifact(code, category, name)
                proto = make_prototype(culture, art_index)
                data.artifact_protos[artifact_id] = proto

                ref_ids = []
                for _ in range(references_per_artifact):
                    arr = render_image(proto, rng, corruption=0.0, size=image_size)
                    ref_ids.append(
                        catalog.register_image_bytes(artifact_id, "real", image_bytes(arr))
                    )
                for model, corruption in zip(FIXTURE_MODELS, VARIANT_CORRUPTION):
                    foreign = (culture + 1 + int(rng.integers(0, n_cultures - 1))) % n_cultures
                    if foreign == culture:
                        foreign = (culture + 1) % n_cultures
                    arr = render_image(
                        proto, rng, corruption=corruption, foreign_culture=foreign, size=image_size
                    )
                    gen_id = catalog.register_image_bytes(
                        artifact_id,
                        "generated",
                        image_bytes(arr),
                        model_id=model,
                        seed=int(rng.integers(0, 2**31)),
                    )
                    similarity = 1.0 - corruption
                    data.truth[gen_id] = similarity
                    scores = []
                    for annotator in annotators:
                        aspects = [annotator.likert(similarity) for _ in range(4)]
                        scores.append(float(np.mean(aspects)))
                    data.inputs.append(
                        AnnotatedGenerated(
                            generated_image_id=gen_id,
                            artifact_id=artifact_id,
                            reference_ids=tuple(ref_ids[:3]),
                            annotator_scores=tuple(scores),
                        )
                    )
    return data
