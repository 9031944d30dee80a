"""`cultdiff` command line: every pipeline stage plus catalog, survey,
pairs, and reporting utilities.

Exit codes: 0 success, 2 validation failure, 3 external-client failure.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click

from . import pairs as pairs_mod
from .catalog import CatalogTargets
from .config import PipelineConfig
from .errors import ClientUnavailable, CultDiffError, QuotaExceeded, StageInputMissing
from .metrics import annotation_rows, rank_countries, aggregate_report
from .pipeline import STAGES, Pipeline

EXIT_VALIDATION = 2
EXIT_CLIENT = 3


def _load_config(config_path: str | None, workdir: str | None) -> PipelineConfig:
    if config_path:
        config = PipelineConfig.from_file(config_path)
    else:
        config = PipelineConfig()
    if workdir:
        config.workdir = workdir
    return config


def _pipeline(ctx) -> Pipeline:
    return Pipeline(_load_config(ctx.obj.get("config"), ctx.obj.get("workdir")))


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--workdir", default=None, help="run directory (default from config)")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, config_path, workdir, verbose):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)
    ctx.ensure_object(dict)
    ctx.obj["config"] = config_path
    ctx.obj["workdir"] = workdir


def _run_stages(ctx, stages: list[str]):
    pipe = _pipeline(ctx)
    try:
        status = pipe.run(stages)
    except (ClientUnavailable, QuotaExceeded) as exc:
        click.echo(f"external client failure: {exc}", err=True)
        sys.exit(EXIT_CLIENT)
    except (StageInputMissing, CultDiffError, ValueError) as exc:
        click.echo(f"validation failure: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    for stage, state in status.items():
        click.echo(f"{stage}: {state}")


@main.command()
@click.option("--stages", default="all", help="comma-separated subset of: " + ",".join(STAGES))
@click.pass_context
def run(ctx, stages):
    """Run the pipeline end to end (or a stage subset)."""
    wanted = ["all"] if stages == "all" else [s.strip() for s in stages.split(",")]
    _run_stages(ctx, wanted)


# -- catalog ----------------------------------------------------------------


@main.group()
def catalog():
    """Catalog inspection and validation."""


@catalog.command("validate")
@click.option("--targets", "targets_file", type=click.Path(exists=True), default=None)
@click.pass_context
def catalog_validate(ctx, targets_file):
    pipe = _pipeline(ctx)
    if targets_file:
        raw = json.loads(Path(targets_file).read_text())
        targets = CatalogTargets(
            artifacts_per_cell=raw.get("artifacts_per_cell", 50),
            real_per_artifact=raw.get("real_per_artifact", 5),
            models=tuple(raw.get("models", ["sdxl", "sd3m", "flux"])),
        )
    else:
        cfg = pipe.config
        targets = CatalogTargets(
            artifacts_per_cell=cfg.artifacts_per_cell,
            real_per_artifact=cfg.references_per_artifact,
            models=tuple(cfg.models),
        )
    report = pipe.catalog.validate(targets)
    click.echo(f"violations: {len(report.violations)}")
    for v in report.violations[:50]:
        click.echo(f"  {v}")
    if not report.ok:
        sys.exit(EXIT_VALIDATION)


@catalog.command("export")
@click.argument("path", type=click.Path())
@click.pass_context
def catalog_export(ctx, path):
    _pipeline(ctx).catalog.export_manifest(path)
    click.echo(f"wrote {path}")


# -- stage shortcuts ----------------------------------------------------------


@main.group()
def prompts():
    """Prompt rendering."""


@prompts.command("render")
@click.pass_context
def prompts_render(ctx):
    _run_stages(ctx, ["prompts"])


@main.command()
@click.option("--k", default=5, show_default=True)
@click.pass_context
def collect(ctx, k):
    """Collect reference images (k per artifact)."""
    pipe = _pipeline(ctx)
    pipe.config.references_per_artifact = k
    _run_stages(ctx, ["collect"])


@main.command()
@click.option("--models", default="sdxl,sd3m,flux", show_default=True)
@click.option("--seed-base", default=0, show_default=True)
@click.pass_context
def generate(ctx, models, seed_base):
    """Generate one image per (prompt, model)."""
    pipe = _pipeline(ctx)
    pipe.config.models = [m.strip() for m in models.split(",")]
    pipe.config.seeds["generate"] = seed_base
    _run_stages(ctx, ["generate"])


# -- survey -------------------------------------------------------------------


@main.group()
def survey():
    """Survey assembly and serving."""


@survey.command("build")
@click.option("--country", required=True)
@click.option("--seed", default=42, show_default=True)
@click.pass_context
def survey_build(ctx, country, seed):
    pipe = _pipeline(ctx)
    try:
        sid = pipe.store.build_survey(
            country,
            rng_seed=seed,
            models=pipe.config.models,
            questions_per_category=pipe.config.artifacts_per_cell,
        )
    except CultDiffError as exc:
        click.echo(f"validation failure: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(f"survey {sid}")


@survey.command("serve")
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.pass_context
def survey_serve(ctx, port, host):
    import uvicorn

    from .service import create_app

    pipe = _pipeline(ctx)
    uvicorn.run(create_app(pipe.store), host=host, port=port)


@main.group()
def annotations():
    """Annotation import."""


@annotations.command("import")
@click.argument("csv_file", type=click.Path(exists=True))
@click.pass_context
def annotations_import(ctx, csv_file):
    pipe = _pipeline(ctx)
    with open(csv_file, newline="") as f:
        records, errors = pipe.store.ingest_annotations(csv.DictReader(f))
    click.echo(f"imported {len(records)} rows, {len(errors)} rejected")
    for err in errors:
        click.echo(f"  row {err.row}: {err.reason}", err=True)
    if errors and not records:
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.option("--per-country", is_flag=True, default=True)
@click.pass_context
def agreement(ctx, per_country):
    """Inter-annotator agreement per country."""
    pipe = _pipeline(ctx)
    surveys = pipe.store.surveys()
    if not surveys:
        click.echo("no surveys", err=True)
        sys.exit(EXIT_VALIDATION)
    for sid, country, _ in surveys:
        try:
            report = pipe.store.agreement_report(sid)
        except ValueError as exc:
            click.echo(f"{country}: {exc}")
            continue
        headline = "undefined" if report.kappa is None else f"{report.kappa:.4f}"
        click.echo(f"{country}: kappa={headline} items={report.n_items} raters={report.n_raters}")
        for key, value in report.per_question.items():
            shown = "undefined" if value is None else f"{value:.4f}"
            click.echo(f"    {key}: {shown}")


# -- pairs ----------------------------------------------------------------------


@main.group()
def pairs():
    """Training-pair construction."""


@pairs.command("build")
@click.option("--seed", default=7, show_default=True)
@click.option("--neg-ratio", default=1.0, show_default=True)
@click.pass_context
def pairs_build(ctx, seed, neg_ratio):
    pipe = _pipeline(ctx)
    pipe.config.seeds["pairs"] = seed
    pipe.config.negatives_per_positive = neg_ratio
    _run_stages(ctx, ["pairs"])


@pairs.command("split")
@click.option("--plan", "plan_file", type=click.Path(exists=True), required=True)
@click.pass_context
def pairs_split(ctx, plan_file):
    pipe = _pipeline(ctx)
    plan = pairs_mod.read_split_plan(plan_file)
    all_pairs = []
    for name in ("train", "val", "test"):
        path = pipe.work / f"pairs_{name}.jsonl"
        if path.exists():
            all_pairs.extend(pairs_mod.read_pairs_jsonl(path))
    if not all_pairs:
        click.echo("no pairs built yet", err=True)
        sys.exit(EXIT_VALIDATION)
    splits = pairs_mod.split_dataset(all_pairs, plan)
    for name, split_pairs in splits.items():
        pairs_mod.write_pairs_jsonl(split_pairs, pipe.work / f"pairs_{name}.jsonl")
        click.echo(f"{name}: {len(split_pairs)}")


# -- training / evaluation --------------------------------------------------------


@main.command()
@click.pass_context
def train(ctx):
    """Train the similarity encoder on the built splits."""
    _run_stages(ctx, ["train"])


@main.command()
@click.option("--checkpoint", default=None, help="defaults to <workdir>/checkpoint/best")
@click.option("--split", default="test", show_default=True)
@click.pass_context
def score(ctx, checkpoint, split):
    """Score the given split and write the scores table."""
    _run_stages(ctx, ["eval"])


@main.group(name="eval")
def eval_group():
    """Evaluation reports."""


@eval_group.command("correlate")
@click.pass_context
def eval_correlate(ctx):
    _run_stages(ctx, ["eval"])
    pipe = _pipeline(ctx)
    path = pipe.work / "reports" / "correlations.csv"
    click.echo(path.read_text())


@main.group()
def report():
    """Aggregate report tables."""


@report.command("rankings")
@click.option("--question", default="q1_1", show_default=True)
@click.option("--model", default=None)
@click.option("--category", default=None)
@click.pass_context
def report_rankings(ctx, question, model, category):
    pipe = _pipeline(ctx)
    rows = annotation_rows(pipe.store)
    if not rows:
        click.echo("no annotations", err=True)
        sys.exit(EXIT_VALIDATION)
    for r in rank_countries(rows, question, model=model, category=category):
        flag = " (tie)" if r.tied else ""
        click.echo(f"{r.country}: {r.mean:.4f} (n={r.n}){flag}")


@report.command("aggregate")
@click.option("--questions", default="six", show_default=True)
@click.option("--group-by", default="country", show_default=True)
@click.pass_context
def report_aggregate(ctx, questions, group_by):
    pipe = _pipeline(ctx)
    rows = annotation_rows(pipe.store)
    if not rows:
        click.echo("no annotations", err=True)
        sys.exit(EXIT_VALIDATION)
    for row in aggregate_report(rows, grouping=tuple(group_by.split(",")), question_set=questions):
        shown = "n/a" if row.sem is None else f"{row.sem:.4f}"
        click.echo(f"{'/'.join(map(str, row.group))}: mean={row.mean:.4f} sem={shown} n={row.n}")


if __name__ == "__main__":
    main()
