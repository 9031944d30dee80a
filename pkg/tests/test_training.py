import numpy as np
import pytest
import torch

from cultdiff.catalog import Catalog
from cultdiff.encoder import EncoderSpec, ImageEncoder
from cultdiff.errors import EmptySplit
from cultdiff.pairs import ImagePair
from cultdiff.training import TrainConfig, TrainHistory, train

SPEC = EncoderSpec.small(input_resolution=32)


@pytest.fixture
def tiny_dataset(tmp_path, make_png):
    """Two artifacts with distinct real images plus train/val pairs."""
    catalog = Catalog(db_path=tmp_path / "c.db", image_root=tmp_path)
    a = catalog.register_artifact("AZ", "food", "plov")
    b = catalog.register_artifact("KR", "food", "bibimbap")
    imgs = {}
    for i, aid in enumerate([a] * 3 + [b] * 3):
        imgs.setdefault(aid, []).append(
            catalog.register_image(aid, "real", make_png(seed=100 + i))
        )
    def pair(x, y, label, w=1.0):
        art_x = catalog.get_image(x).artifact_id
        art_y = catalog.get_image(y).artifact_id
        return ImagePair(x, y, label, w, "real_real", art_x, art_y)
    ia, ib = imgs[a], imgs[b]
    train_pairs = [
        pair(ia[0], ia[1], 1), pair(ib[0], ib[1], 1),
        pair(ia[0], ib[0], 0), pair(ia[1], ib[1], 0),
    ]
    val_pairs = [pair(ia[0], ia[2], 1), pair(ia[2], ib[2], 0)]
    return catalog, {"train": train_pairs, "val": val_pairs}


def test_embeddings_unit_norm_and_deterministic(make_png):
    encoder = ImageEncoder(SPEC, normalize_embeddings=True)
    img = make_png(seed=1)
    e1 = encoder.embed(img)
    e2 = encoder.embed(img)
    assert np.linalg.norm(e1) == pytest.approx(1.0, abs=1e-5)
    assert np.array_equal(e1, e2)


def test_batch_matches_single(make_png):
    encoder = ImageEncoder(SPEC, normalize_embeddings=True)
    tensors = [encoder.preprocess_path(make_png(seed=s)) for s in range(4)]
    batched = encoder.embed_batch(tensors)
    singles = np.stack([encoder.embed_batch([t])[0] for t in tensors])
    assert np.max(np.abs(batched - singles)) <= 1e-5


def test_unnormalized_embeddings_not_unit(make_png):
    encoder = ImageEncoder(SPEC, normalize_embeddings=False)
    norm = np.linalg.norm(encoder.embed(make_png(seed=2)))
    assert abs(norm - 1.0) > 1e-3  # LayerNorm output, not unit-norm


def test_train_runs_and_records_history(tiny_dataset, tmp_path):
    catalog, splits = tiny_dataset
    config = TrainConfig(epochs=2, learning_rate=1e-3, batch_size=4, seed=0)
    encoder, history = train(
        catalog, splits, SPEC, config, checkpoint_dir=tmp_path / "ckpt"
    )
    assert len(history.train_loss) == len(history.val_loss) == 2
    assert all(np.isfinite(v) for v in history.train_loss + history.val_loss)
    assert (tmp_path / "ckpt" / "best" / "weights.pt").exists()
    assert (tmp_path / "ckpt" / "final" / "config.json").exists()
    metrics = (tmp_path / "ckpt" / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "epoch,train_loss,val_loss,seconds"
    assert len(metrics) == 3


def test_zero_weight_stream_gives_zero_loss(tiny_dataset):
    catalog, splits = tiny_dataset
    zeroed = {
        name: [
            ImagePair(p.image_a, p.image_b, p.y, 0.0, p.origin, p.artifact_a, p.artifact_b)
            for p in pairs
        ]
        for name, pairs in splits.items()
    }
    _, history = train(
        catalog, zeroed, SPEC, TrainConfig(epochs=1, batch_size=4, seed=0)
    )
    assert history.train_loss[0] == 0.0
    assert history.val_loss[0] == 0.0


def test_same_seed_reproducible(tiny_dataset):
    catalog, splits = tiny_dataset
    config = TrainConfig(epochs=2, learning_rate=1e-3, batch_size=2, seed=7)
    _, h1 = train(catalog, splits, SPEC, config)
    _, h2 = train(catalog, splits, SPEC, config)
    assert h1.train_loss == h2.train_loss
    assert h1.val_loss == h2.val_loss


def test_empty_splits_are_rejected(tiny_dataset):
    catalog, splits = tiny_dataset
    with pytest.raises(EmptySplit):
        train(catalog, {"train": [], "val": splits["val"]}, SPEC, TrainConfig(epochs=1))
    with pytest.raises(EmptySplit):
        train(catalog, {"train": splits["train"], "val": []}, SPEC, TrainConfig(epochs=1))


def test_checkpoint_roundtrip_identical_embeddings(tiny_dataset, tmp_path, make_png):
    catalog, splits = tiny_dataset
    encoder, _ = train(
        catalog, splits, SPEC,
        TrainConfig(epochs=1, batch_size=4, seed=0),
        checkpoint_dir=tmp_path / "ckpt",
    )
    reloaded = ImageEncoder.load(tmp_path / "ckpt" / "final")
    probe = make_png(seed=55)
    assert np.array_equal(encoder.embed(probe), reloaded.embed(probe))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(margin=0.0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)


def test_training_reduces_loss_on_separable_pairs(tmp_path, make_png):
    """A few epochs on clearly separable images should cut the train loss."""
    catalog = Catalog(db_path=tmp_path / "c.db", image_root=tmp_path)
    a = catalog.register_artifact("AZ", "food", "plov")
    b = catalog.register_artifact("KR", "food", "bibimbap")
    reds = [catalog.register_image(a, "real", make_png(solid=(200, 30 + 5 * i, 30))) for i in range(3)]
    blues = [catalog.register_image(b, "real", make_png(solid=(30, 30 + 5 * i, 200))) for i in range(3)]
    def pair(x, y, label):
        return ImagePair(
            x, y, label, 1.0, "real_real",
            catalog.get_image(x).artifact_id, catalog.get_image(y).artifact_id,
        )
    train_pairs = [
        pair(reds[0], reds[1], 1), pair(blues[0], blues[1], 1),
        pair(reds[0], blues[0], 0), pair(reds[1], blues[1], 0),
    ]
    val_pairs = [pair(reds[1], reds[2], 1), pair(reds[2], blues[2], 0)]
    _, history = train(
        catalog,
        {"train": train_pairs, "val": val_pairs},
        SPEC,
        TrainConfig(epochs=8, learning_rate=1e-3, batch_size=4, seed=0),
    )
    assert history.train_loss[-1] < history.train_loss[0]
