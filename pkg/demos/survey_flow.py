"""Survey lifecycle: build questions, collect responses, report agreement.

Uses the fixture corpus and oracle annotators; the same store backs the
HTTP API (`cultdiff survey serve`) that the frontend/ annotator UI talks
to.

Run: python3 demos/survey_flow.py
"""

import tempfile

from cultdiff.fixtures import OracleAnnotator, VARIANT_CORRUPTION, build_fixture
from cultdiff.metrics import aggregate_report, annotation_rows, rank_countries
from cultdiff.survey import SurveyStore

root = tempfile.mkdtemp(prefix="cultdiff_survey_demo_")
data = build_fixture(root, seed=0, n_cultures=3, artifacts_per_culture=6)
store = SurveyStore(data.catalog)
corruption = dict(zip(("m1", "m2", "m3"), VARIANT_CORRUPTION))

for i, code in enumerate(sorted(data.catalog.countries)):
    sid = store.build_survey(code, rng_seed=42 + i, models=("m1", "m2", "m3"),
                             questions_per_category=2)
    questions = store.questions(sid)
    print(f"{code}: survey {sid[:8]}… with {len(questions)} questions")
    for a in range(3):
        rater = OracleAnnotator(f"{code}-rater-{a + 1}", seed=100 * i + a)
        store.register_annotator(rater.annotator_id, sid)
        for q in questions:
            similarity = 1.0 - corruption[q.model_id]
            v = rater.rate_question(similarity)
            store.record_response(
                q.id, rater.annotator_id,
                [v[f"q1_{k}"] for k in range(1, 5)], v["q2"], v["q3"],
            )
    report = store.agreement_report(sid)
    shown = "undefined" if report.kappa is None else f"{report.kappa:+.3f}"
    print(f"  agreement: kappa={shown} over {report.n_items} items,"
          f" {report.n_raters} raters")

rows = annotation_rows(store)
print("\ncountry ranking by cultural representativeness (q1_1):")
for r in rank_countries(rows, "q1_1"):
    tie = " (tie)" if r.tied else ""
    print(f"  {r.country}: {r.mean:.3f} (n={r.n}){tie}")

print("\nmean of all six questions, per country and model (±SEM):")
for row in aggregate_report(rows, grouping=("country", "model")):
    shown = "n/a" if row.sem is None else f"{row.sem:.3f}"
    print(f"  {row.group[0]}/{row.group[1]}: {row.mean:.3f} ± {shown} (n={row.n})")
