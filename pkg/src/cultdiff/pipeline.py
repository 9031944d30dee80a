"""Staged pipeline runner: prompts -> collect -> generate -> survey -> pairs
-> train -> eval, with per-stage manifests and fingerprint-based skipping."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from pathlib import Path

import numpy as np

from . import fixtures, genpipe, pairs as pairs_mod
from .catalog import Catalog, CatalogTargets, DEFAULT_COUNTRIES
from .config import PipelineConfig
from .encoder import EncoderSpec
from .errors import PipelineLocked, StageInputMissing
from .metrics import (
    aggregate_report,
    annotation_rows,
    correlation_table,
    question_correlations,
    rank_countries,
    score_pairs,
    write_scores_csv,
)
from .plots import bar_chart_with_sem
from .survey import SurveyStore
from .training import TrainConfig, train

log = logging.getLogger(__name__)

STAGES = ("prompts", "collect", "generate", "survey", "pairs", "train", "eval")
_DEPS = {
    "prompts": (),
    "collect": ("prompts",),
    "generate": ("prompts",),
    "survey": ("collect", "generate"),
    "pairs": ("survey",),
    "train": ("pairs",),
    "eval": ("train",),
}


def _fingerprint(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.work = config.workpath
        self.work.mkdir(parents=True, exist_ok=True)
        countries = (
            fixtures.fixture_countries(len(config.countries))
            if config.source == "fixture"
            else [c for c in DEFAULT_COUNTRIES if c.code in config.countries]
        )
        self.catalog = Catalog(
            db_path=self.work / "catalog.db",
            image_root=self.work / "images",
            countries=countries,
        )
        self.store = SurveyStore(self.catalog)
        self._lock_path = self.work / ".lock"

    # -- manifests --------------------------------------------------------

    def _manifest_path(self, stage: str) -> Path:
        return self.work / f"manifest_{stage}.json"

    def _stage_fingerprint(self, stage: str) -> str:
        upstream = []
        for dep in _DEPS[stage]:
            path = self._manifest_path(dep)
            if not path.exists():
                raise StageInputMissing(f"stage '{stage}' needs '{dep}' to run first")
            upstream.append(json.loads(path.read_text())["fingerprint"])
        return _fingerprint(
            {
                "stage": stage,
                "config": json.loads(self.config.to_json()),
                "upstream": upstream,
            }
        )

    def _write_manifest(self, stage: str, fingerprint: str, outputs: dict) -> None:
        manifest = {
            "stage": stage,
            "fingerprint": fingerprint,
            "seeds": self.config.seeds,
            "outputs": outputs,
        }
        self._manifest_path(stage).write_text(json.dumps(manifest, indent=2, sort_keys=True))

    def _is_current(self, stage: str, fingerprint: str) -> bool:
        path = self._manifest_path(stage)
        if not path.exists():
            return False
        return json.loads(path.read_text()).get("fingerprint") == fingerprint

    # -- stages -----------------------------------------------------------

    def _artifact_names(self) -> list[tuple[str, str, str]]:
        out = []
        for code in sorted(self.catalog.countries):
            for category in self.config.categories:
                for i in range(self.config.artifacts_per_cell):
                    out.append((code, category, f"{category}-{i + 1}"))
        return out

    def stage_prompts(self) -> dict:
        n = 0
        for code, category, name in self._artifact_names():
            if self.catalog.find_artifact(code, category, name) is None:
                artifact_id = self.catalog.register_artifact(code, category, name)
                genpipe.render_prompt(self.catalog, self.catalog.get_artifact(artifact_id))
                n += 1
        return {"artifacts_registered": n}

    def _prototype(self, artifact) -> fixtures.ArtifactPrototype:
        culture = int(artifact.country[1:]) - 1
        digest = hashlib.sha256(f"{artifact.category}:{artifact.name}".encode()).hexdigest()
        return fixtures.make_prototype(culture, int(digest[:8], 16) % 10_000)

    def stage_collect(self) -> dict:
        if self.config.source != "fixture":
            raise StageInputMissing(
                "live collection needs a configured search client; use source='fixture'"
            )
        rng = np.random.default_rng(self.config.seeds["collect"])
        n = 0
        for artifact in self.catalog.artifacts():
            have = len(self.catalog.images(artifact_id=artifact.id, source="real"))
            proto = self._prototype(artifact)
            for _ in range(max(0, self.config.references_per_artifact - have)):
                arr = fixtures.render_image(proto, rng, 0.0, size=self.config.image_size)
                self.catalog.register_image_bytes(
                    artifact.id, "real", fixtures.image_bytes(arr)
                )
                n += 1
        return {"references_added": n}

    def stage_generate(self) -> dict:
        rng = np.random.default_rng(self.config.seeds["generate"])
        n_cultures = len(self.config.countries)
        corruption = dict(
            zip(self.config.models, fixtures.VARIANT_CORRUPTION[: len(self.config.models)])
        )
        n = 0
        for artifact in self.catalog.artifacts():
            proto = self._prototype(artifact)
            culture = int(artifact.country[1:]) - 1
            for model in self.config.models:
                if self.catalog.images(artifact_id=artifact.id, source="generated", model_id=model):
                    continue
                foreign = (culture + 1) % max(n_cultures, 2)
                arr = fixtures.render_image(
                    proto,
                    rng,
                    corruption.get(model, 0.5),
                    foreign_culture=foreign,
                    size=self.config.image_size,
                )
                self.catalog.register_image_bytes(
                    artifact.id,
                    "generated",
                    fixtures.image_bytes(arr),
                    model_id=model,
                    seed=int(rng.integers(0, 2**31)),
                )
                n += 1
        return {"images_generated": n}

    def stage_survey(self) -> dict:
        targets = CatalogTargets(
            artifacts_per_cell=self.config.artifacts_per_cell,
            real_per_artifact=self.config.references_per_artifact,
            models=tuple(self.config.models),
        )
        report = self.catalog.validate(targets)
        if not report.ok:
            raise StageInputMissing(
                f"catalog has {len(report.violations)} violations; first:"
                f" {report.violations[0]}"
            )
        seed = self.config.seeds["survey"]
        survey_ids = {}
        corruption = dict(
            zip(self.config.models, fixtures.VARIANT_CORRUPTION[: len(self.config.models)])
        )
        for i, code in enumerate(sorted(self.catalog.countries)):
            sid = self.store.build_survey(
                code,
                rng_seed=seed + i,
                models=self.config.models,
                questions_per_category=self.config.artifacts_per_cell,
            )
            survey_ids[code] = sid
            if self.config.source == "fixture":
                for a in range(self.config.annotators_per_country):
                    annotator = fixtures.OracleAnnotator(
                        f"{code}-annotator-{a + 1}", seed=seed * 100 + i * 10 + a
                    )
                    self.store.register_annotator(annotator.annotator_id, sid)
                    for q in self.store.questions(sid):
                        similarity = 1.0 - corruption.get(q.model_id, 0.5)
                        values = annotator.rate_question(similarity)
                        self.store.record_response(
                            q.id,
                            annotator.annotator_id,
                            [values[f"q1_{k}"] for k in range(1, 5)],
                            values["q2"],
                            values["q3"],
                        )
        return {"surveys": survey_ids}

    def stage_pairs(self) -> dict:
        seed = self.config.seeds["pairs"]
        real = pairs_mod.build_real_pairs(
            self.catalog,
            negatives_per_positive=self.config.negatives_per_positive,
            seed=seed,
            positives_per_artifact=self.config.real_positives_per_artifact,
        )
        inputs, skipped = pairs_mod.synthetic_inputs_from_survey(self.store)
        synthetic = pairs_mod.build_synthetic_pairs(inputs, self.catalog)
        plan = pairs_mod.make_split_plan(
            self.catalog, counts=tuple(self.config.split_counts), seed=seed
        )
        splits = pairs_mod.split_dataset(real + synthetic, plan)
        pairs_mod.write_split_plan(plan, self.work / "split_plan.json")
        for name, split_pairs in splits.items():
            pairs_mod.write_pairs_jsonl(split_pairs, self.work / f"pairs_{name}.jsonl")
        return {
            "train": len(splits["train"]),
            "val": len(splits["val"]),
            "test": len(splits["test"]),
            "skipped_generated": len(skipped),
        }

    def _encoder_spec(self) -> EncoderSpec:
        if self.config.encoder_size == "base":
            return EncoderSpec(init_seed=self.config.seeds["train"])
        return EncoderSpec.small(
            input_resolution=self.config.image_size, init_seed=self.config.seeds["train"]
        )

    def stage_train(self) -> dict:
        splits = {
            name: pairs_mod.read_pairs_jsonl(self.work / f"pairs_{name}.jsonl")
            for name in ("train", "val")
        }
        tc = TrainConfig(
            epochs=self.config.epochs,
            learning_rate=self.config.learning_rate,
            batch_size=self.config.batch_size,
            margin=self.config.margin,
            seed=self.config.seeds["train"],
            normalize_embeddings=self.config.normalize_embeddings,
        )
        fingerprint = _fingerprint(
            {"train": sorted((p.image_a, p.image_b) for p in splits["train"])}
        )
        _, history = train(
            self.catalog,
            splits,
            self._encoder_spec(),
            tc,
            checkpoint_dir=self.work / "checkpoint",
            data_fingerprint=fingerprint,
        )
        return {"epochs": len(history.train_loss), "final_val_loss": history.val_loss[-1]}

    def stage_eval(self) -> dict:
        from .encoder import ImageEncoder

        encoder = ImageEncoder.load(self.work / "checkpoint" / "best")
        test_pairs = pairs_mod.read_pairs_jsonl(self.work / "pairs_test.jsonl")
        test_artifacts = {p.artifact_a for p in test_pairs}
        inputs, _ = pairs_mod.synthetic_inputs_from_survey(self.store)
        test_inputs = [i for i in inputs if i.artifact_id in test_artifacts]
        scores = score_pairs(self.catalog, test_inputs, encoder)
        reports_dir = self.work / "reports"
        reports_dir.mkdir(exist_ok=True)
        write_scores_csv(scores, reports_dir / "scores.csv")

        table = correlation_table(scores)
        with open(reports_dir / "correlations.csv", "w") as f:
            f.write("metric,spearman,pearson,kendall_tau_b,kendall_tau_c,n\n")
            for rep in table:
                cells = [
                    "" if v is None else f"{v:.4f}"
                    for v in (rep.spearman, rep.pearson, rep.kendall_tau_b, rep.kendall_tau_c)
                ]
                f.write(f"{rep.metric},{','.join(cells)},{rep.n}\n")

        rows = annotation_rows(self.store)
        rankings = rank_countries(rows, "q1_1")
        with open(reports_dir / "rankings_q1_1.csv", "w") as f:
            f.write("country,mean,n,tied\n")
            for r in rankings:
                f.write(f"{r.country},{r.mean:.4f},{r.n},{int(r.tied)}\n")
        agg = aggregate_report(rows, grouping=("country",), question_set="six")
        bar_chart_with_sem(agg, reports_dir / "six_question_means.png", title="six-question means")
        qcorr = question_correlations(rows, "q1_1", "q2")
        (reports_dir / "q1_1_vs_q2_pearson.json").write_text(json.dumps(qcorr, indent=2))
        return {"reports_dir": str(reports_dir), "n_scored": len(scores)}

    # -- runner -----------------------------------------------------------

    def run(self, stages: list[str] | None = None) -> dict[str, str]:
        """Run the requested stages; returns stage -> 'ran' | 'skipped'."""
        requested = list(STAGES) if not stages or stages == ["all"] else list(stages)
        for stage in requested:
            if stage not in STAGES:
                raise ValueError(f"unknown stage {stage!r}")
        if self._lock_path.exists():
            raise PipelineLocked(f"{self._lock_path} exists; another run in progress?")
        self._lock_path.write_text(str(os.getpid()))
        status: dict[str, str] = {}
        try:
            for stage in STAGES:
                if stage not in requested:
                    continue
                fingerprint = self._stage_fingerprint(stage)
                if self._is_current(stage, fingerprint):
                    status[stage] = "skipped"
                    log.info("stage %s: up to date, skipped", stage)
                    continue
                marker = self.work / f"{stage}.incomplete"
                marker.write_text("")
                outputs = getattr(self, f"stage_{stage}")()
                self._write_manifest(stage, fingerprint, outputs)
                marker.unlink(missing_ok=True)
                status[stage] = "ran"
                log.info("stage %s: done %s", stage, outputs)
        finally:
            self._lock_path.unlink(missing_ok=True)
        return status
