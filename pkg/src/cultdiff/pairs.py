"""Training-pair construction and prompt-disjoint dataset splits.

Real-real pairs carry weight 1.0. Real-synthetic pairs take their label from
the threshold rule (mean similarity score >= 3 is positive) and their weight
from the affine normalization (s - 1) / 4 of the mean score.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .catalog import CATEGORIES, Catalog
from .errors import MissingReferences, OutOfRange, SplitOverlap, UnplannedPrompt
from .survey import SurveyStore

POSITIVE_THRESHOLD = 3.0


@dataclass(frozen=True)
class ImagePair:
    image_a: str
    image_b: str
    y: int  # 1 positive, 0 negative
    w: float
    origin: str  # "real_real" | "real_synthetic"
    artifact_a: str
    artifact_b: str
    split: Optional[str] = None  # "train" | "val" | "test"
    source_score: Optional[float] = None  # mean Likert, real_synthetic only


@dataclass(frozen=True)
class AnnotatedGenerated:
    """One generated image with its fixed references and annotator scores."""

    generated_image_id: str
    artifact_id: str
    reference_ids: tuple[str, str, str]
    annotator_scores: tuple[float, ...]  # per-annotator mean of the 4 similarity aspects

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.annotator_scores))


@dataclass
class SplitPlan:
    """Artifact-to-split assignment; prompts and artifacts are one-to-one."""

    assignment: dict  # artifact_id -> "train" | "val" | "test"
    counts: tuple[int, int, int]
    seed: int


def normalize_score(mean_likert: float) -> float:
    """Map a mean Likert score in [1, 5] onto [0, 1]: (s - 1) / 4."""
    if not 1.0 <= mean_likert <= 5.0:
        raise OutOfRange(f"mean Likert {mean_likert} outside [1, 5]")
    return (mean_likert - 1.0) / 4.0


def build_real_pairs(
    catalog: Catalog,
    negatives_per_positive: float = 1.0,
    seed: int = 0,
    positives_per_artifact: int | None = None,
) -> list[ImagePair]:
    """All within-artifact real pairs as positives, sampled cross-artifact
    negatives at the given ratio, stratified 50/50 between same-country and
    cross-country.

    positives_per_artifact, when set, subsamples each artifact's positive
    pairs (seeded) to bound the real-pair budget.
    """
    rng = np.random.default_rng(seed)
    positives: list[ImagePair] = []
    real_by_artifact: dict[str, list[str]] = {}
    artifact_country: dict[str, str] = {}
    for art in catalog.artifacts():
        real = [im.id for im in catalog.images(artifact_id=art.id, source="real")]
        if real:
            real_by_artifact[art.id] = real
            artifact_country[art.id] = art.country
        pairs = list(combinations(real, 2))
        if positives_per_artifact is not None and len(pairs) > positives_per_artifact:
            idx = rng.choice(len(pairs), size=positives_per_artifact, replace=False)
            pairs = [pairs[i] for i in sorted(idx)]
        positives.extend(
            ImagePair(a, b, 1, 1.0, "real_real", art.id, art.id) for a, b in pairs
        )

    n_neg = int(round(len(positives) * negatives_per_positive))
    negatives: list[ImagePair] = []
    artifact_ids = sorted(real_by_artifact)
    by_country: dict[str, list[str]] = {}
    for aid in artifact_ids:
        by_country.setdefault(artifact_country[aid], []).append(aid)
    attempts = 0
    while len(negatives) < n_neg and attempts < 50 * max(n_neg, 1):
        attempts += 1
        same_country = len(negatives) % 2 == 0
        a = artifact_ids[int(rng.integers(0, len(artifact_ids)))]
        pool = by_country[artifact_country[a]] if same_country else [
            x for x in artifact_ids if artifact_country[x] != artifact_country[a]
        ]
        pool = [x for x in pool if x != a]
        if not pool:
            continue
        b = pool[int(rng.integers(0, len(pool)))]
        img_a = real_by_artifact[a][int(rng.integers(0, len(real_by_artifact[a])))]
        img_b = real_by_artifact[b][int(rng.integers(0, len(real_by_artifact[b])))]
        negatives.append(ImagePair(img_a, img_b, 0, 1.0, "real_real", a, b))
    return positives + negatives


def synthetic_inputs_from_survey(store: SurveyStore) -> tuple[list[AnnotatedGenerated], list[str]]:
    """Collect per-generated-image annotation means from all surveys.

    Returns (inputs, skipped) where skipped lists generated images whose
    survey question received no annotations.
    """
    inputs, skipped = [], []
    for survey_id, _, _ in store.surveys():
        annotations = store.annotations(survey_id)
        by_question: dict[str, list[float]] = {}
        for rec in annotations:
            by_question.setdefault(rec.question_id, []).append(rec.similarity_mean)
        for q in store.questions(survey_id):
            scores = by_question.get(q.id)
            if not scores:
                skipped.append(q.generated_image_id)
                continue
            inputs.append(
                AnnotatedGenerated(
                    q.generated_image_id, q.artifact_id, q.reference_image_ids, tuple(scores)
                )
            )
    return inputs, skipped


def build_synthetic_pairs(
    inputs: Iterable[AnnotatedGenerated],
    catalog: Catalog,
    invert_negative_weights: bool = False,
) -> list[ImagePair]:
    """Three pairs per annotated generated image, one against each reference.

    The label is positive iff the mean similarity score is >= 3 (inclusive);
    the weight is the normalized mean. invert_negative_weights flips the
    weight of negatives to 1 - normalized mean (off by default: the literal
    normalization rule is the recorded behavior).
    """
    pairs: list[ImagePair] = []
    for item in inputs:
        for ref in item.reference_ids:
            try:
                catalog.get_image(ref)
            except KeyError:
                raise MissingReferences(
                    f"reference {ref} for generated {item.generated_image_id} missing"
                ) from None
        mean = item.mean_score
        y = 1 if mean >= POSITIVE_THRESHOLD else 0
        w = normalize_score(mean)
        if invert_negative_weights and y == 0:
            w = 1.0 - w
        for ref in item.reference_ids:
            pairs.append(
                ImagePair(
                    item.generated_image_id,
                    ref,
                    y,
                    w,
                    "real_synthetic",
                    item.artifact_id,
                    item.artifact_id,
                    source_score=mean,
                )
            )
    return pairs


def make_split_plan(
    catalog: Catalog,
    counts: tuple[int, int, int] = (30, 10, 10),
    seed: int = 0,
) -> SplitPlan:
    """Assign each (country, category) cell's artifacts to disjoint splits."""
    rng = np.random.default_rng(seed)
    n_train, n_val, n_test = counts
    assignment: dict[str, str] = {}
    for code in sorted(catalog.countries):
        for category in CATEGORIES:
            arts = catalog.artifacts(country=code, category=category)
            if not arts:
                continue
            need = n_train + n_val + n_test
            if len(arts) < need:
                raise ValueError(
                    f"{code}/{category}: {len(arts)} artifacts, split counts need {need}"
                )
            order = rng.permutation(len(arts))
            chosen = [arts[i].id for i in order[:need]]
            for aid in chosen[:n_train]:
                assignment[aid] = "train"
            for aid in chosen[n_train : n_train + n_val]:
                assignment[aid] = "val"
            for aid in chosen[n_train + n_val : need]:
                assignment[aid] = "test"
    return SplitPlan(assignment=assignment, counts=counts, seed=seed)


def split_dataset(
    pairs: Sequence[ImagePair], plan: SplitPlan
) -> dict[str, list[ImagePair]]:
    """Assign pairs to the split owning their prompt.

    Real-real pairs are train-only: any real pair touching a val/test
    artifact is dropped so no image crosses splits. Synthetic val/test pairs
    keep val and test free of real-real pairs by construction.
    """
    valid = {"train", "val", "test"}
    if not set(plan.assignment.values()) <= valid:
        raise SplitOverlap(f"bad split labels: {set(plan.assignment.values()) - valid}")
    out: dict[str, list[ImagePair]] = {"train": [], "val": [], "test": []}
    for pair in pairs:
        split_a = plan.assignment.get(pair.artifact_a)
        split_b = plan.assignment.get(pair.artifact_b)
        if split_a is None or split_b is None:
            raise UnplannedPrompt(f"pair {pair.image_a}/{pair.image_b} has unplanned artifact")
        if pair.origin == "real_real":
            if split_a == "train" and split_b == "train":
                out["train"].append(_with_split(pair, "train"))
            continue  # real pairs never enter val/test
        out[split_a].append(_with_split(pair, split_a))
    return out


def _with_split(pair: ImagePair, split: str) -> ImagePair:
    return ImagePair(**{**asdict(pair), "split": split})


def write_pairs_jsonl(pairs: Iterable[ImagePair], path: str | Path) -> None:
    with open(path, "w") as f:
        for pair in pairs:
            f.write(json.dumps(asdict(pair)) + "\n")


def read_pairs_jsonl(path: str | Path) -> list[ImagePair]:
    pairs = []
    with open(path) as f:
        for line in f:
            if line.strip():
                pairs.append(ImagePair(**json.loads(line)))
    return pairs


def write_split_plan(plan: SplitPlan, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(
            {"assignment": plan.assignment, "counts": list(plan.counts), "seed": plan.seed},
            indent=2,
        )
    )


def read_split_plan(path: str | Path) -> SplitPlan:
    data = json.loads(Path(path).read_text())
    return SplitPlan(
        assignment=data["assignment"], counts=tuple(data["counts"]), seed=data["seed"]
    )
