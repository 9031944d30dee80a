import math

import pytest

from cultdiff.catalog import CATEGORIES, Catalog
from cultdiff.errors import MissingReferences, OutOfRange, UnplannedPrompt
from cultdiff.pairs import (
    AnnotatedGenerated,
    build_real_pairs,
    build_synthetic_pairs,
    make_split_plan,
    normalize_score,
    read_pairs_jsonl,
    read_split_plan,
    split_dataset,
    write_pairs_jsonl,
    write_split_plan,
)


@pytest.mark.parametrize(
    "score,expected",
    [(1.0, 0.0), (3.0, 0.5), (5.0, 1.0), (2.75, 0.4375), (4.0, 0.75)],
)
def test_normalize_score_exact(score, expected):
    assert normalize_score(score) == expected


def test_normalize_score_range():
    with pytest.raises(OutOfRange):
        normalize_score(0.5)
    with pytest.raises(OutOfRange):
        normalize_score(5.01)


@pytest.fixture
def small_catalog(tmp_path, make_png):
    catalog = Catalog(db_path=tmp_path / "c.db", image_root=tmp_path)
    img = make_png()
    for code in ("AZ", "KR"):
        for cat in CATEGORIES:
            for i in range(4):
                aid = catalog.register_artifact(code, cat, f"{cat} {i}")
                for _ in range(5):
                    catalog.register_image(aid, "real", img)
                for model in ("m1",):
                    catalog.register_image(aid, "generated", img, model_id=model, seed=0)
    return catalog


def test_real_pairs_all_combinations_and_ratio(small_catalog):
    pairs = build_real_pairs(small_catalog, negatives_per_positive=1.0, seed=3)
    positives = [p for p in pairs if p.y == 1]
    negatives = [p for p in pairs if p.y == 0]
    # 24 artifacts x C(5,2)=10 within-artifact pairs
    assert len(positives) == 24 * 10
    assert len(negatives) == len(positives)
    assert all(p.w == 1.0 and p.origin == "real_real" for p in pairs)
    assert all(p.artifact_a == p.artifact_b for p in positives)
    assert all(p.artifact_a != p.artifact_b for p in negatives)
    # stratification: about half the negatives pair same-country artifacts
    country = {a.id: a.country for a in small_catalog.artifacts()}
    same = sum(1 for p in negatives if country[p.artifact_a] == country[p.artifact_b])
    assert abs(same - len(negatives) / 2) <= 1


def test_real_pairs_positive_cap_and_fractional_ratio(small_catalog):
    pairs = build_real_pairs(
        small_catalog, negatives_per_positive=0.5, seed=0, positives_per_artifact=2
    )
    positives = [p for p in pairs if p.y == 1]
    negatives = [p for p in pairs if p.y == 0]
    assert len(positives) == 24 * 2
    assert len(negatives) == round(len(positives) * 0.5)


def test_real_pairs_deterministic(small_catalog):
    a = build_real_pairs(small_catalog, seed=11, positives_per_artifact=3)
    b = build_real_pairs(small_catalog, seed=11, positives_per_artifact=3)
    assert a == b


def synthetic_input(catalog, artifact, scores):
    gen = [i for i in catalog.images(artifact_id=artifact.id, source="generated")][0]
    refs = tuple(i.id for i in catalog.images(artifact_id=artifact.id, source="real")[:3])
    return AnnotatedGenerated(gen.id, artifact.id, refs, tuple(scores))


def test_synthetic_pairs_threshold_and_weight_law(small_catalog):
    arts = small_catalog.artifacts()
    # boundary: mean exactly 3.0 is positive with weight 0.5
    at_threshold = synthetic_input(small_catalog, arts[0], (3.0, 3.0, 3.0))
    below = synthetic_input(small_catalog, arts[1], (2.75, 2.75, 2.75))
    high = synthetic_input(small_catalog, arts[2], (5.0, 4.0, 3.0))
    pairs = build_synthetic_pairs([at_threshold, below, high], small_catalog)
    assert len(pairs) == 9  # 3 references per generated image
    by_gen = {}
    for p in pairs:
        by_gen.setdefault(p.image_a, []).append(p)
    p_thr = by_gen[at_threshold.generated_image_id]
    assert all(p.y == 1 and p.w == 0.5 for p in p_thr)
    p_below = by_gen[below.generated_image_id]
    assert all(p.y == 0 and p.w == 0.4375 for p in p_below)
    p_high = by_gen[high.generated_image_id]
    assert all(p.y == 1 and p.w == normalize_score(4.0) == 0.75 for p in p_high)
    assert all(p.origin == "real_synthetic" and p.source_score is not None for p in pairs)


def test_synthetic_pairs_invert_negative_weights(small_catalog):
    below = synthetic_input(small_catalog, small_catalog.artifacts()[0], (2.0,))
    [p, *_] = build_synthetic_pairs([below], small_catalog, invert_negative_weights=True)
    assert p.w == 1.0 - normalize_score(2.0) == 0.75


def test_synthetic_pairs_missing_reference(small_catalog):
    item = AnnotatedGenerated("gen-x", "art-x", ("r1", "r2", "r3"), (4.0,))
    with pytest.raises(MissingReferences):
        build_synthetic_pairs([item], small_catalog)


def test_split_plan_counts_and_determinism(small_catalog):
    plan = make_split_plan(small_catalog, counts=(2, 1, 1), seed=5)
    assert len(plan.assignment) == 24
    for code in ("AZ", "KR"):
        for cat in CATEGORIES:
            arts = [a.id for a in small_catalog.artifacts(country=code, category=cat)]
            labels = sorted(plan.assignment[a] for a in arts)
            assert labels == ["test", "train", "train", "val"]
    again = make_split_plan(small_catalog, counts=(2, 1, 1), seed=5)
    assert plan.assignment == again.assignment


def test_split_plan_insufficient_artifacts(small_catalog):
    with pytest.raises(ValueError):
        make_split_plan(small_catalog, counts=(30, 10, 10))


def test_split_dataset_prompt_disjoint(small_catalog):
    plan = make_split_plan(small_catalog, counts=(2, 1, 1), seed=1)
    real = build_real_pairs(small_catalog, seed=0, positives_per_artifact=2)
    inputs = [
        synthetic_input(small_catalog, art, (4.0,)) for art in small_catalog.artifacts()
    ]
    synth = build_synthetic_pairs(inputs, small_catalog)
    splits = split_dataset(real + synth, plan)
    # no artifact appears in two splits
    seen = {}
    for name, pairs in splits.items():
        for p in pairs:
            for aid in (p.artifact_a, p.artifact_b):
                assert seen.setdefault(aid, name) == name
    # real pairs are train-only, val/test purely synthetic
    assert all(p.origin == "real_synthetic" for p in splits["val"] + splits["test"])
    # synthetic pair lands in the split that owns its prompt
    for name, pairs in splits.items():
        for p in pairs:
            assert plan.assignment[p.artifact_a] == name
            assert p.split == name
    # every synthetic pair is routed somewhere; dropped real pairs touch val/test
    total_synth = sum(1 for ps in splits.values() for p in ps if p.origin == "real_synthetic")
    assert total_synth == len(synth)


def test_split_dataset_unplanned_artifact(small_catalog):
    plan = make_split_plan(small_catalog, counts=(2, 1, 1), seed=1)
    missing = dict(plan.assignment)
    missing.pop(next(iter(missing)))
    plan.assignment = missing
    pairs = build_real_pairs(small_catalog, seed=0, positives_per_artifact=1)
    with pytest.raises(UnplannedPrompt):
        split_dataset(pairs, plan)


def test_jsonl_and_plan_roundtrip(small_catalog, tmp_path):
    plan = make_split_plan(small_catalog, counts=(2, 1, 1), seed=9)
    pairs = build_real_pairs(small_catalog, seed=9, positives_per_artifact=1)
    splits = split_dataset(pairs, plan)
    path = tmp_path / "pairs_train.jsonl"
    write_pairs_jsonl(splits["train"], path)
    assert read_pairs_jsonl(path) == splits["train"]
    plan_path = tmp_path / "split_plan.json"
    write_split_plan(plan, plan_path)
    loaded = read_split_plan(plan_path)
    assert loaded.assignment == plan.assignment and loaded.counts == plan.counts


def test_full_scale_split_arithmetic(tmp_path, make_png):
    """Paper-scale shape on a thin catalog: 2 countries to keep it fast, then
    scaled arithmetic checked per country-cell."""
    catalog = Catalog(db_path=tmp_path / "c.db", image_root=tmp_path)
    img = make_png()
    models = ("m1", "m2", "m3")
    for code in ("AZ",):
        for cat in CATEGORIES:
            for i in range(50):
                aid = catalog.register_artifact(code, cat, f"{cat} {i}")
                for _ in range(5):
                    catalog.register_image(aid, "real", img)
                for model in models:
                    catalog.register_image(aid, "generated", img, model_id=model, seed=0)
    plan = make_split_plan(catalog, counts=(30, 10, 10), seed=0)
    inputs = []
    for art in catalog.artifacts():
        refs = tuple(i.id for i in catalog.images(artifact_id=art.id, source="real")[:3])
        for gen in catalog.images(artifact_id=art.id, source="generated"):
            inputs.append(AnnotatedGenerated(gen.id, art.id, refs, (4.0,)))
    synth = build_synthetic_pairs(inputs, catalog)
    splits = split_dataset(synth, plan)
    # per country: 10 prompts x 3 categories x 3 models x 3 refs = 270 val/test
    assert len(splits["val"]) == 270
    assert len(splits["test"]) == 270
    assert len(splits["train"]) == 810
