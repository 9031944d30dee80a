"""Similarity scoring, baseline metrics, and human-judgment correlation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
from PIL import Image
from skimage.metrics import structural_similarity

from .catalog import Catalog
from .encoder import ImageEncoder
from .errors import (
    EmptyReferences,
    EmptySlice,
    FeatureExtractorUnavailable,
    NoAnnotations,
    ZeroVariance,
)
from .stats import kendall_tau_b, kendall_tau_c, pearson_r, sem, spearman_rho
from .survey import AnnotationRecord, SurveyStore


# ---------------------------------------------------------------------------
# learned metric


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def similarity_score(
    generated: str | Path | Image.Image,
    references: Sequence[str | Path | Image.Image],
    encoder: ImageEncoder,
) -> float:
    """Mean cosine similarity between the candidate and each reference."""
    if not references:
        raise EmptyReferences("need at least one reference image")
    g = encoder.embed(generated)
    return float(np.mean([cosine_similarity(g, encoder.embed(r)) for r in references]))


# ---------------------------------------------------------------------------
# baselines


def _load_rgb(image: str | Path | Image.Image) -> np.ndarray:
    if isinstance(image, Image.Image):
        return np.asarray(image.convert("RGB"), dtype=np.float64) / 255.0
    with Image.open(image) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def _luminance(rgb: np.ndarray) -> np.ndarray:
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def _resize(arr: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    im = Image.fromarray((np.clip(arr, 0, 1) * 255).astype(np.uint8))
    return np.asarray(im.resize(size, Image.BILINEAR), dtype=np.float64) / 255.0


def ssim_pair(image_a, image_b) -> float:
    """Luminance SSIM after resizing both images to the smaller resolution."""
    a = _load_rgb(image_a)
    b = _load_rgb(image_b)
    h = min(a.shape[0], b.shape[0])
    w = min(a.shape[1], b.shape[1])
    la = _luminance(a if a.shape[:2] == (h, w) else _resize(a, (w, h)))
    lb = _luminance(b if b.shape[:2] == (h, w) else _resize(b, (w, h)))
    win = min(7, h - (h + 1) % 2, w - (w + 1) % 2)
    return float(structural_similarity(la, lb, data_range=1.0, win_size=max(3, win)))


class PerceptualDistance:
    """Multi-scale filter-response distance used as the LPIPS baseline.

    Pretrained perceptual backbones are not assumed available offline, so the
    feature pyramid uses fixed, seeded random convolution filters with
    channel-normalized responses. Identical inputs score exactly 0.
    """

    def __init__(self, seed: int = 1234, n_filters: int = 24, kernel: int = 5, scales: int = 3):
        rng = np.random.default_rng(seed)
        self.kernel = kernel
        self.scales = scales
        self.filters = rng.standard_normal((n_filters, 3, kernel, kernel))
        self.filters -= self.filters.mean(axis=(2, 3), keepdims=True)

    def _features(self, rgb: np.ndarray) -> list[np.ndarray]:
        feats = []
        arr = rgb
        for _ in range(self.scales):
            responses = self._conv(arr)
            norm = np.sqrt(np.sum(responses**2, axis=0, keepdims=True)) + 1e-10
            feats.append(responses / norm)
            arr = _resize(arr, (max(1, arr.shape[1] // 2), max(1, arr.shape[0] // 2)))
        return feats

    def _conv(self, rgb: np.ndarray) -> np.ndarray:
        k = self.kernel
        h, w, _ = rgb.shape
        if h < k or w < k:
            rgb = _resize(rgb, (max(w, k), max(h, k)))
            h, w, _ = rgb.shape
        # valid convolution via stride tricks
        windows = np.lib.stride_tricks.sliding_window_view(rgb, (k, k), axis=(0, 1))
        # windows: (h-k+1, w-k+1, 3, k, k); filters: (F, 3, k, k)
        return np.einsum("hwcij,fcij->fhw", windows, self.filters)

    def distance(self, image_a, image_b, size: int = 64) -> float:
        a = _resize(_load_rgb(image_a), (size, size))
        b = _resize(_load_rgb(image_b), (size, size))
        total = 0.0
        for fa, fb in zip(self._features(a), self._features(b)):
            total += float(np.mean((fa - fb) ** 2))
        return total / self.scales


_default_perceptual = PerceptualDistance()


def lpips_pair(image_a, image_b) -> float:
    return _default_perceptual.distance(image_a, image_b)


FeatureExtractor = Callable[[np.ndarray], np.ndarray]


def pixel_feature_extractor(rgb: np.ndarray, size: int = 8) -> np.ndarray:
    """Offline FID features: downsampled RGB, flattened."""
    return _resize(rgb, (size, size)).reshape(-1)


def inception_feature_extractor(rgb: np.ndarray) -> np.ndarray:
    """Standard inception-style embedding; needs pretrained weights on disk."""
    try:
        import torch
        from torchvision.models import Inception_V3_Weights, inception_v3

        model = inception_v3(weights=Inception_V3_Weights.IMAGENET1K_V1)
    except Exception as exc:  # download failure, missing torchvision, ...
        raise FeatureExtractorUnavailable(str(exc)) from exc
    model.fc = torch.nn.Identity()
    model.eval()
    arr = _resize(rgb, (299, 299)).astype(np.float32)
    tensor = torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)
    with torch.no_grad():
        return model(tensor).squeeze(0).numpy()


def fid_point(
    generated,
    references: Sequence,
    extractor: FeatureExtractor = pixel_feature_extractor,
) -> float:
    """Frechet distance between the reference feature Gaussian and one point.

    With a point mass at the generated feature x this reduces to
    ||mu_r - x||^2 + tr(Sigma_r). The population covariance is used so that
    identical references give exactly ||mu_r - x||^2.
    """
    if not references:
        raise EmptyReferences("need at least one reference image")
    ref_feats = np.stack([extractor(_load_rgb(r)) for r in references])
    x = extractor(_load_rgb(generated))
    if np.all(ref_feats == ref_feats[0]):
        # identical references: mean is the common row exactly (no /n rounding)
        return float(np.sum((ref_feats[0] - x) ** 2))
    mu = ref_feats.mean(axis=0)
    centered = ref_feats - mu
    trace_sigma = float(np.sum(centered * centered) / len(references))
    return float(np.sum((mu - x) ** 2)) + trace_sigma


def baseline_scores(
    generated,
    references: Sequence,
    fid_extractor: FeatureExtractor | None = pixel_feature_extractor,
) -> dict[str, float | None]:
    """Per-pair FID, LPIPS, SSIM; LPIPS/SSIM are means over references."""
    if not references:
        raise EmptyReferences("need at least one reference image")
    scores: dict[str, float | None] = {
        "lpips": float(np.mean([lpips_pair(generated, r) for r in references])),
        "ssim": float(np.mean([ssim_pair(generated, r) for r in references])),
    }
    if fid_extractor is None:
        scores["fid"] = None
    else:
        scores["fid"] = fid_point(generated, references, extractor=fid_extractor)
    return scores


# ---------------------------------------------------------------------------
# human scores and correlation


def human_pair_score(annotations: Sequence[AnnotationRecord]) -> float:
    """Mean over annotators of the mean of the four similarity aspects."""
    if not annotations:
        raise NoAnnotations("no annotations for this generated image")
    return float(np.mean([a.similarity_mean for a in annotations]))


@dataclass
class CorrelationReport:
    metric: str
    spearman: Optional[float]
    pearson: Optional[float]
    kendall_tau_b: Optional[float]
    kendall_tau_c: Optional[float]
    n: int
    undefined: list = field(default_factory=list)
    notes: str = (
        "tau_c table size m = min(distinct values per array, n); "
        "undefined statistics are reported as absent, never as 0"
    )


def correlate(
    metric_values: Sequence[float], human_values: Sequence[float], metric: str = "metric"
) -> CorrelationReport:
    stats: dict[str, Optional[float]] = {}
    undefined = []
    for name, fn in (
        ("spearman", spearman_rho),
        ("pearson", pearson_r),
        ("kendall_tau_b", kendall_tau_b),
        ("kendall_tau_c", kendall_tau_c),
    ):
        try:
            stats[name] = fn(metric_values, human_values)
        except ZeroVariance:
            stats[name] = None
            undefined.append(name)
    return CorrelationReport(
        metric=metric, n=len(metric_values), undefined=undefined, **stats
    )


# ---------------------------------------------------------------------------
# aggregate reports over annotations


def annotation_rows(store: SurveyStore) -> list[dict]:
    """Flatten annotations with their country/category/model context."""
    rows = []
    for survey_id, country, _ in store.surveys():
        questions = {q.id: q for q in store.questions(survey_id)}
        for rec in store.annotations(survey_id):
            q = questions[rec.question_id]
            artifact = store.catalog.get_artifact(q.artifact_id)
            rows.append(
                {
                    "country": country,
                    "category": artifact.category,
                    "model": q.model_id,
                    "artifact_id": q.artifact_id,
                    "question_id": rec.question_id,
                    "generated_image_id": q.generated_image_id,
                    "annotator_id": rec.annotator_id,
                    "q1_1": rec.q1[0],
                    "q1_2": rec.q1[1],
                    "q1_3": rec.q1[2],
                    "q1_4": rec.q1[3],
                    "q2": rec.q2,
                    "q3": rec.q3,
                    "six_mean": rec.six_question_mean,
                    "similarity_mean": rec.similarity_mean,
                }
            )
    return rows


@dataclass(frozen=True)
class RankedCountry:
    country: str
    mean: float
    n: int
    tied: bool


def rank_countries(
    rows: Sequence[Mapping],
    question: str,
    model: str | None = None,
    category: str | None = None,
) -> list[RankedCountry]:
    """Countries sorted descending by mean score of one question; ties broken
    lexicographically and flagged."""
    selected = [
        r
        for r in rows
        if (model is None or r["model"] == model)
        and (category is None or r["category"] == category)
    ]
    if not selected:
        raise EmptySlice(f"no annotations for model={model}, category={category}")
    by_country: dict[str, list[float]] = {}
    for r in selected:
        by_country.setdefault(r["country"], []).append(float(r[question]))
    means = {c: float(np.mean(v)) for c, v in by_country.items()}
    mean_counts: dict[float, int] = {}
    for m in means.values():
        mean_counts[m] = mean_counts.get(m, 0) + 1
    ordered = sorted(means, key=lambda c: (-means[c], c))
    return [
        RankedCountry(c, means[c], len(by_country[c]), mean_counts[means[c]] > 1)
        for c in ordered
    ]


@dataclass(frozen=True)
class AggregateRow:
    group: tuple
    mean: float
    sem: Optional[float]
    n: int


def aggregate_report(
    rows: Sequence[Mapping],
    grouping: Sequence[str],
    question_set: str = "six",
) -> list[AggregateRow]:
    """Per-group mean and SEM; question_set is 'six' or a single question key."""
    key_fn = (lambda r: r["six_mean"]) if question_set == "six" else (lambda r: float(r[question_set]))
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault(tuple(r[g] for g in grouping), []).append(key_fn(r))
    return [
        AggregateRow(group, float(np.mean(vals)), sem(vals) if len(vals) > 1 else None, len(vals))
        for group, vals in sorted(groups.items())
    ]


def question_correlations(
    rows: Sequence[Mapping],
    question_a: str,
    question_b: str,
    grouping: str = "country",
) -> dict[str, Optional[float]]:
    """Per-group Pearson r between per-artifact average scores of two
    questions, averaging responses across annotators and models first."""
    per_artifact: dict[tuple, dict[str, list[float]]] = {}
    for r in rows:
        key = (r[grouping], r["artifact_id"])
        bucket = per_artifact.setdefault(key, {"a": [], "b": []})
        bucket["a"].append(float(r[question_a]))
        bucket["b"].append(float(r[question_b]))
    per_group: dict[str, tuple[list[float], list[float]]] = {}
    for (group, _), bucket in per_artifact.items():
        xs, ys = per_group.setdefault(group, ([], []))
        xs.append(float(np.mean(bucket["a"])))
        ys.append(float(np.mean(bucket["b"])))
    out: dict[str, Optional[float]] = {}
    for group, (xs, ys) in sorted(per_group.items()):
        if len(xs) < 2:
            continue
        try:
            out[group] = pearson_r(xs, ys)
        except ZeroVariance:
            out[group] = None
    return out


# ---------------------------------------------------------------------------
# scores table


@dataclass
class PairScore:
    pair_id: str
    cultdiff_s: float
    fid: Optional[float]
    lpips: float
    ssim: float
    human: Optional[float]


def score_pairs(
    catalog: Catalog,
    inputs: Iterable,  # AnnotatedGenerated-like: generated id, references, mean score
    encoder: ImageEncoder,
    fid_extractor: FeatureExtractor | None = pixel_feature_extractor,
) -> list[PairScore]:
    """Score each annotated generated image against its references."""
    results = []
    for item in inputs:
        gen_path = catalog.image_path(item.generated_image_id)
        ref_paths = [catalog.image_path(r) for r in item.reference_ids]
        cult = similarity_score(gen_path, ref_paths, encoder)
        base = baseline_scores(gen_path, ref_paths, fid_extractor=fid_extractor)
        results.append(
            PairScore(
                pair_id=item.generated_image_id,
                cultdiff_s=cult,
                fid=base["fid"],
                lpips=base["lpips"],
                ssim=base["ssim"],
                human=item.mean_score,
            )
        )
    return results


def write_scores_csv(scores: Sequence[PairScore], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["pair_id", "cultdiff_s", "fid", "lpips", "ssim", "human"])
        for s in scores:
            writer.writerow(
                [
                    s.pair_id,
                    f"{s.cultdiff_s:.6f}",
                    "" if s.fid is None else f"{s.fid:.6f}",
                    f"{s.lpips:.6f}",
                    f"{s.ssim:.6f}",
                    "" if s.human is None else f"{s.human:.6f}",
                ]
            )


def correlation_table(scores: Sequence[PairScore]) -> list[CorrelationReport]:
    """Correlate every metric column with the human scores.

    FID and LPIPS are distances, so their raw values are correlated as-is
    (negative correlations are expected and meaningful).
    """
    with_human = [s for s in scores if s.human is not None]
    human = [s.human for s in with_human]
    reports = [
        correlate([s.cultdiff_s for s in with_human], human, metric="cultdiff_s"),
        correlate([s.lpips for s in with_human], human, metric="lpips"),
        correlate([s.ssim for s in with_human], human, metric="ssim"),
    ]
    with_fid = [s for s in with_human if s.fid is not None]
    if with_fid:
        reports.append(
            correlate([s.fid for s in with_fid], [s.human for s in with_fid], metric="fid")
        )
    return reports
