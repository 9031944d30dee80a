import json

import pytest

from cultdiff.config import PipelineConfig
from cultdiff.errors import PipelineLocked, StageInputMissing
from cultdiff.fixtures import build_fixture
from cultdiff.pipeline import STAGES, Pipeline


def tiny_config(tmp_path, **overrides) -> PipelineConfig:
    base = dict(
        workdir=str(tmp_path / "run"),
        countries=["P1", "P2"],
        artifacts_per_cell=4,
        references_per_artifact=4,
        models=["m1", "m2"],
        split_counts=[2, 1, 1],
        real_positives_per_artifact=2,
        annotators_per_country=2,
        image_size=32,
        epochs=1,
        batch_size=16,
    )
    base.update(overrides)
    return PipelineConfig(**base)


def test_config_split_sum_validation(tmp_path):
    with pytest.raises(ValueError):
        tiny_config(tmp_path, split_counts=[3, 1, 1])


def test_config_roundtrip(tmp_path):
    config = tiny_config(tmp_path)
    path = tmp_path / "config.json"
    path.write_text(config.to_json())
    loaded = PipelineConfig.from_file(path)
    assert loaded == config


def test_stage_dependency_enforced(tmp_path):
    pipe = Pipeline(tiny_config(tmp_path))
    with pytest.raises(StageInputMissing):
        pipe.run(["pairs"])


def test_full_run_and_idempotent_rerun(tmp_path):
    config = tiny_config(tmp_path)
    pipe = Pipeline(config)
    status = pipe.run()
    assert all(status[s] == "ran" for s in STAGES)

    # artifacts, references, and variants at configured scale
    arts = pipe.catalog.artifacts()
    assert len(arts) == 2 * 3 * 4  # countries x categories x artifacts_per_cell
    for art in arts[:3]:
        assert len(pipe.catalog.images(artifact_id=art.id, source="real")) == 4
        assert len(pipe.catalog.images(artifact_id=art.id, source="generated")) == 2

    # pairs arithmetic: surveys ask one question per artifact (one sampled
    # model), so per country-cell val/test = 1 prompt x 1 question x 3 refs
    manifest = json.loads((pipe.work / "manifest_pairs.json").read_text())
    n_cells = 2 * 3
    assert manifest["outputs"]["val"] == n_cells * 1 * 1 * 3
    assert manifest["outputs"]["test"] == n_cells * 1 * 1 * 3
    assert (pipe.work / "checkpoint" / "best" / "weights.pt").exists()
    assert (pipe.work / "reports" / "scores.csv").exists()
    assert (pipe.work / "reports" / "correlations.csv").exists()
    assert (pipe.work / "reports" / "rankings_q1_1.csv").exists()
    assert (pipe.work / "reports" / "six_question_means.png").exists()

    # same config: everything skips
    again = Pipeline(config).run()
    assert all(again[s] == "skipped" for s in STAGES)
    assert not list(pipe.work.glob("*.incomplete"))


def test_lock_file_blocks_concurrent_runs(tmp_path):
    pipe = Pipeline(tiny_config(tmp_path))
    pipe._lock_path.write_text("12345")
    with pytest.raises(PipelineLocked):
        pipe.run(["prompts"])
    pipe._lock_path.unlink()
    assert pipe.run(["prompts"])["prompts"] == "ran"


def test_unknown_stage_rejected(tmp_path):
    pipe = Pipeline(tiny_config(tmp_path))
    with pytest.raises(ValueError):
        pipe.run(["prompts", "deploy"])


def test_survey_requires_complete_catalog(tmp_path):
    pipe = Pipeline(tiny_config(tmp_path))
    pipe.run(["prompts", "collect"])
    with pytest.raises(StageInputMissing):
        pipe.stage_survey()  # no generated images yet


def test_non_fixture_collect_refuses_without_client(tmp_path):
    pipe = Pipeline(tiny_config(tmp_path, source="clients", countries=["AZ", "KR"]))
    pipe.run(["prompts"])
    with pytest.raises(StageInputMissing):
        pipe.stage_collect()


# ---------------------------------------------------------------------------
# fixture sanity


def test_build_fixture_shapes(tmp_path):
    data = build_fixture(
        tmp_path / "fx",
        seed=0,
        n_cultures=2,
        artifacts_per_culture=3,
        references_per_artifact=4,
        n_annotators=2,
        image_size=32,
    )
    arts = data.catalog.artifacts()
    assert len(arts) == 2 * 3  # one artifact per category per culture
    assert len(data.inputs) == len(arts) * 3  # three pseudo-models
    assert set(data.truth.values()) == {0.85, 0.5, 0.15000000000000002} or all(
        0 <= v <= 1 for v in data.truth.values()
    )
    for item in data.inputs:
        assert len(item.reference_ids) == 3
        assert len(item.annotator_scores) == 2
        assert all(1.0 <= s <= 5.0 for s in item.annotator_scores)


def test_fixture_oracle_scores_track_truth(tmp_path):
    data = build_fixture(
        tmp_path / "fx",
        seed=1,
        n_cultures=2,
        artifacts_per_culture=6,
        references_per_artifact=3,
        n_annotators=3,
        image_size=32,
    )
    # group mean annotator score by ground-truth similarity: must be monotone
    by_truth = {}
    for item in data.inputs:
        by_truth.setdefault(data.truth[item.generated_image_id], []).append(item.mean_score)
    levels = sorted(by_truth)
    means = [sum(v) / len(v) for v in (by_truth[k] for k in levels)]
    assert means == sorted(means)
