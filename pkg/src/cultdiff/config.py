"""Single-document pipeline configuration with environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .catalog import CATEGORIES


@dataclass
class PipelineConfig:
    workdir: str = "cultdiff_run"
    source: str = "fixture"  # "fixture" renders procedural images; "clients" uses adapters
    countries: list = field(default_factory=lambda: ["P1", "P2", "P3", "P4"])
    categories: list = field(default_factory=lambda: list(CATEGORIES))
    artifacts_per_cell: int = 50
    references_per_artifact: int = 5
    models: list = field(default_factory=lambda: ["sdxl", "sd3m", "flux"])
    split_counts: list = field(default_factory=lambda: [30, 10, 10])
    negatives_per_positive: float = 1.0
    real_positives_per_artifact: int = 2
    annotators_per_country: int = 3
    image_size: int = 64
    # training
    epochs: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 32
    margin: float = 1.0
    normalize_embeddings: bool = True
    encoder_size: str = "small"  # "small" | "base"
    # seeds, all recorded in every manifest
    seeds: dict = field(
        default_factory=lambda: {
            "collect": 0,
            "generate": 0,
            "survey": 42,
            "pairs": 7,
            "train": 0,
        }
    )
    # external endpoints (overridable via CULTDIFF_GEN_ENDPOINT / _TOKEN)
    generation_endpoint: str | None = None

    def __post_init__(self):
        if sum(self.split_counts) != self.artifacts_per_cell:
            raise ValueError(
                f"split counts {self.split_counts} must sum to"
                f" artifacts_per_cell={self.artifacts_per_cell}"
            )
        env_endpoint = os.environ.get("CULTDIFF_GEN_ENDPOINT")
        if env_endpoint:
            self.generation_endpoint = env_endpoint

    @property
    def workpath(self) -> Path:
        return Path(self.workdir)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @staticmethod
    def from_file(path: str | Path) -> "PipelineConfig":
        data = json.loads(Path(path).read_text())
        return PipelineConfig(**data)
