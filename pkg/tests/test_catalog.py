import shutil

import pytest

from cultdiff.catalog import Catalog, CatalogTargets, file_checksum
from cultdiff.errors import (
    DuplicateArtifact,
    EmptyName,
    MissingArtifact,
    MissingModelId,
    UnknownCountry,
    UnreadableImage,
)


@pytest.fixture
def catalog(tmp_path):
    return Catalog(db_path=tmp_path / "cat.db", image_root=tmp_path)


def test_register_and_lookup_roundtrip(catalog):
    aid = catalog.register_artifact("Azerbaijan", "architecture", "Flame Towers")
    found = catalog.find_artifact("Azerbaijan", "architecture", "Flame Towers")
    assert found is not None and found.id == aid
    assert found.country == "AZ"


def test_duplicate_artifact_rejected(catalog):
    catalog.register_artifact("AZ", "architecture", "Flame Towers")
    with pytest.raises(DuplicateArtifact):
        catalog.register_artifact("AZ", "architecture", "Flame Towers")


def test_unknown_country_and_empty_name(catalog):
    with pytest.raises(UnknownCountry):
        catalog.register_artifact("Atlantis", "food", "ambrosia")
    with pytest.raises(EmptyName):
        catalog.register_artifact("AZ", "food", "   ")


def test_register_image_real_and_generated(catalog, make_png):
    aid = catalog.register_artifact("AZ", "architecture", "Flame Towers")
    real = catalog.get_image(catalog.register_image(aid, "real", make_png()))
    assert real.source == "real" and real.model_id is None
    assert real.width == 16 and real.height == 16
    gen = catalog.get_image(
        catalog.register_image(aid, "generated", make_png(), model_id="sdxl", seed=7)
    )
    assert gen.model_id == "sdxl" and gen.seed == 7


def test_generated_requires_model_id(catalog, make_png):
    aid = catalog.register_artifact("AZ", "architecture", "Flame Towers")
    with pytest.raises(MissingModelId):
        catalog.register_image(aid, "generated", make_png())


def test_missing_artifact_and_unreadable(catalog, make_png, tmp_path):
    with pytest.raises(MissingArtifact):
        catalog.register_image("nope", "real", make_png())
    aid = catalog.register_artifact("AZ", "food", "plov")
    bad = tmp_path / "not_an_image.png"
    bad.write_text("hello")
    with pytest.raises(UnreadableImage):
        catalog.register_image(aid, "real", bad)


def test_checksum_identity(make_png, tmp_path):
    a = make_png(seed=1)
    b = tmp_path / "copy.png"
    shutil.copy(a, b)
    c = make_png(seed=2)
    assert file_checksum(a) == file_checksum(b)
    assert file_checksum(a) != file_checksum(c)


def test_validate_empty_catalog_has_30_cell_violations(catalog):
    report = catalog.validate(CatalogTargets())
    assert len(report.violations) == 30
    assert all(v["kind"] == "artifact_count" for v in report.violations)


def test_validate_undercount_and_monotone_improvement(tmp_path, make_png):
    catalog = Catalog(db_path=tmp_path / "c.db", image_root=tmp_path)
    targets = CatalogTargets(artifacts_per_cell=1, real_per_artifact=5, models=("sdxl",))
    aid = None
    for code in catalog.countries:
        for cat in ("architecture", "clothing", "food"):
            new = catalog.register_artifact(code, cat, f"{cat} item")
            aid = aid or new
    for _ in range(4):
        catalog.register_image(aid, "real", make_png())
    report = catalog.validate(targets)
    under = [v for v in report.violations if v.get("artifact_id") == aid and v["kind"] == "real_image_count"]
    assert len(under) == 1 and under[0]["actual"] == 4
    before = len(report.violations)
    catalog.register_image(aid, "real", make_png())
    after = len(catalog.validate(targets).violations)
    assert after < before


def test_full_shape_small_catalog_validates_clean(tmp_path, make_png):
    catalog = Catalog(db_path=tmp_path / "c.db", image_root=tmp_path)
    targets = CatalogTargets(artifacts_per_cell=2, real_per_artifact=2, models=("sdxl", "flux"))
    img = make_png()
    for code in catalog.countries:
        for cat in ("architecture", "clothing", "food"):
            for i in range(2):
                aid = catalog.register_artifact(code, cat, f"{cat} {i}")
                for _ in range(2):
                    catalog.register_image(aid, "real", img)
                for model in targets.models:
                    catalog.register_image(aid, "generated", img, model_id=model, seed=0)
    assert catalog.validate(targets).ok


def test_export_import_roundtrip(catalog, make_png, tmp_path):
    aid = catalog.register_artifact("CN", "clothing", "Hanfu")
    catalog.register_image(aid, "real", make_png())
    manifest = tmp_path / "catalog.json"
    catalog.export_manifest(manifest)
    other = Catalog(db_path=tmp_path / "other.db", image_root=tmp_path)
    other.import_manifest(manifest)
    assert other.get_artifact(aid).name == "Hanfu"
    assert len(other.images(artifact_id=aid)) == 1
