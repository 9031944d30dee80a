"""Contrastive training loop for the similarity encoder."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .catalog import Catalog
from .encoder import EncoderSpec, ImageEncoder
from .errors import EmptySplit, NonFiniteLoss
from .pairs import ImagePair

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 32
    margin: float = 1.0
    seed: int = 0
    normalize_embeddings: bool = True

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size, learning_rate must be positive")
        if not (self.margin > 0 and math.isfinite(self.margin)):
            raise ValueError("margin must be positive and finite")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "train_loss", "val_loss", "seconds"])
            for i, (tr, va, sec) in enumerate(
                zip(self.train_loss, self.val_loss, self.seconds), start=1
            ):
                writer.writerow([i, f"{tr:.6f}", f"{va:.6f}", f"{sec:.2f}"])


def margin_loss_torch(
    d: torch.Tensor, y: torch.Tensor, w: torch.Tensor, margin: float
) -> torch.Tensor:
    hinge = torch.clamp(margin - d, min=0.0)
    return torch.mean(w * (y * d.square() + (1.0 - y) * hinge.square()))


class _PairTensors:
    """Decoded image cache keyed by image id; pairs as index tensors."""

    def __init__(self, catalog: Catalog, pairs: Sequence[ImagePair], encoder: ImageEncoder):
        image_ids = sorted({p.image_a for p in pairs} | {p.image_b for p in pairs})
        self.index = {iid: i for i, iid in enumerate(image_ids)}
        tensors = [
            encoder.preprocess_path(catalog.image_path(iid)) for iid in image_ids
        ]
        self.images = torch.stack(tensors) if tensors else torch.empty(0)
        self.a = torch.tensor([self.index[p.image_a] for p in pairs], dtype=torch.long)
        self.b = torch.tensor([self.index[p.image_b] for p in pairs], dtype=torch.long)
        self.y = torch.tensor([p.y for p in pairs], dtype=torch.float32)
        self.w = torch.tensor([p.w for p in pairs], dtype=torch.float32)

    def __len__(self) -> int:
        return len(self.y)


def _epoch_loss(
    encoder: ImageEncoder, data: _PairTensors, margin: float, batch_size: int
) -> float:
    encoder.module.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(data), batch_size):
            sl = slice(start, start + batch_size)
            ea = encoder.forward(data.images[data.a[sl]])
            eb = encoder.forward(data.images[data.b[sl]])
            d = torch.linalg.vector_norm(ea - eb, dim=1)
            loss = margin_loss_torch(d, data.y[sl], data.w[sl], margin)
            n = len(data.y[sl])
            total += float(loss) * n
            count += n
    return total / max(count, 1)


def train(
    catalog: Catalog,
    splits: dict[str, Sequence[ImagePair]],
    encoder_spec: EncoderSpec,
    config: TrainConfig,
    checkpoint_dir: str | Path | None = None,
    data_fingerprint: str | None = None,
) -> tuple[ImageEncoder, TrainHistory]:
    """Minimize the weighted margin loss over shuffled mini-batches.

    Keeps the best-validation weights; when a checkpoint directory is given,
    writes `best/` and `final/` checkpoints plus a metrics CSV.
    """
    train_pairs = list(splits.get("train", []))
    val_pairs = list(splits.get("val", []))
    if not train_pairs:
        raise EmptySplit("train split is empty")
    if not val_pairs:
        raise EmptySplit("val split is empty")

    torch.manual_seed(config.seed)
    encoder = ImageEncoder(encoder_spec, normalize_embeddings=config.normalize_embeddings)
    train_data = _PairTensors(catalog, train_pairs, encoder)
    val_data = _PairTensors(catalog, val_pairs, encoder)
    optimizer = torch.optim.Adam(encoder.module.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    history = TrainHistory()
    best_val = float("inf")
    best_state = {k: v.clone() for k, v in encoder.module.state_dict().items()}
    for epoch in range(1, config.epochs + 1):
        started = time.monotonic()
        encoder.module.train()
        order = rng.permutation(len(train_data))
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = torch.from_numpy(order[start : start + config.batch_size].copy())
            ea = encoder.forward(train_data.images[train_data.a[idx]], train=True)
            eb = encoder.forward(train_data.images[train_data.b[idx]], train=True)
            d = torch.linalg.vector_norm(ea - eb, dim=1)
            loss = margin_loss_torch(d, train_data.y[idx], train_data.w[idx], config.margin)
            if not torch.isfinite(loss):
                log.error("non-finite loss at epoch %d, batch indices %s", epoch, idx.tolist())
                raise NonFiniteLoss(f"epoch {epoch}, batch starting at {start}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(idx)
            count += len(idx)
        train_loss = total / count
        val_loss = _epoch_loss(encoder, val_data, config.margin, config.batch_size)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.seconds.append(time.monotonic() - started)
        if val_loss < best_val:
            best_val = val_loss
            best_state = {k: v.clone() for k, v in encoder.module.state_dict().items()}
        log.info("epoch %d: train %.5f val %.5f", epoch, train_loss, val_loss)

    encoder.module.eval()
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        extra = {"train_config": asdict(config), "data_fingerprint": data_fingerprint}
        encoder.save(checkpoint_dir / "final", extra=extra)
        final_state = encoder.module.state_dict()
        encoder.module.load_state_dict(best_state)
        encoder.save(checkpoint_dir / "best", extra=extra)
        encoder.module.load_state_dict(final_state)
        history.write_csv(checkpoint_dir / "metrics.csv")
        (checkpoint_dir / "history.json").write_text(
            json.dumps(
                {
                    "train_loss": history.train_loss,
                    "val_loss": history.val_loss,
                    "best_val_loss": best_val,
                }
            )
        )
    return encoder, history
