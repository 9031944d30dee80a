"""Vision-transformer image encoder used for the similarity metric.

The default geometry is ViT-Base (12 layers, hidden 768, 12 heads, MLP 3072,
224x224 input); the synthetic fixture runs a shrunken variant of the same
architecture so the whole training loop fits on a laptop CPU.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torch import nn

from .errors import EncoderNotLoaded, UnreadableImage

# channel statistics applied after scaling pixels to [0, 1]
NORM_MEAN = (0.5, 0.5, 0.5)
NORM_STD = (0.5, 0.5, 0.5)


@dataclass(frozen=True)
class EncoderSpec:
    architecture: str = "vit"
    layers: int = 12
    hidden_dim: int = 768
    heads: int = 12
    mlp_dim: int = 3072
    input_resolution: int = 224
    patch_size: int = 16
    init_seed: int = 0
    init_checkpoint: str | None = None

    @staticmethod
    def small(input_resolution: int = 64, init_seed: int = 0) -> "EncoderSpec":
        """Compact geometry for desk-scale fixtures."""
        return EncoderSpec(
            layers=2,
            hidden_dim=64,
            heads=4,
            mlp_dim=128,
            input_resolution=input_resolution,
            patch_size=8,
            init_seed=init_seed,
        )


class _ViT(nn.Module):
    def __init__(self, spec: EncoderSpec):
        super().__init__()
        if spec.input_resolution % spec.patch_size:
            raise ValueError("input_resolution must be a multiple of patch_size")
        n_patches = (spec.input_resolution // spec.patch_size) ** 2
        self.patch_embed = nn.Conv2d(
            3, spec.hidden_dim, kernel_size=spec.patch_size, stride=spec.patch_size
        )
        self.cls_token = nn.Parameter(torch.zeros(1, 1, spec.hidden_dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, n_patches + 1, spec.hidden_dim))
        layer = nn.TransformerEncoderLayer(
            d_model=spec.hidden_dim,
            nhead=spec.heads,
            dim_feedforward=spec.mlp_dim,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.blocks = nn.TransformerEncoder(
            layer, num_layers=spec.layers, enable_nested_tensor=False
        )
        self.norm = nn.LayerNorm(spec.hidden_dim)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.patch_embed(x).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(tokens.shape[0], -1, -1)
        tokens = torch.cat([cls, tokens], dim=1) + self.pos_embed
        tokens = self.blocks(tokens)
        return self.norm(tokens[:, 0])


class ImageEncoder:
    """Preprocessing + ViT forward pass; embeddings optionally unit-norm."""

    def __init__(self, spec: EncoderSpec, normalize_embeddings: bool = True):
        self.spec = spec
        self.normalize_embeddings = normalize_embeddings
        torch.manual_seed(spec.init_seed)
        self.module = _ViT(spec)
        if spec.init_checkpoint:
            state = torch.load(spec.init_checkpoint, map_location="cpu", weights_only=True)
            self.module.load_state_dict(state)
        self.module.eval()
        self._loaded = True

    @property
    def embedding_dim(self) -> int:
        return self.spec.hidden_dim

    def preprocess_path(self, path: str | Path) -> torch.Tensor:
        try:
            with Image.open(path) as im:
                im = im.convert("RGB")
                return self.preprocess_pil(im)
        except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
            raise UnreadableImage(f"{path}: {exc}") from exc

    def preprocess_pil(self, im: Image.Image) -> torch.Tensor:
        size = self.spec.input_resolution
        im = im.convert("RGB").resize((size, size), Image.BILINEAR)
        arr = np.asarray(im, dtype=np.float32) / 255.0
        arr = (arr - np.array(NORM_MEAN, dtype=np.float32)) / np.array(NORM_STD, dtype=np.float32)
        return torch.from_numpy(arr).permute(2, 0, 1)

    def forward(self, batch: torch.Tensor, train: bool = False) -> torch.Tensor:
        if not self._loaded:
            raise EncoderNotLoaded("encoder weights not loaded")
        out = self.module(batch)
        if self.normalize_embeddings:
            out = nn.functional.normalize(out, dim=1)
        return out

    @torch.no_grad()
    def embed_batch(self, images: Sequence[torch.Tensor]) -> np.ndarray:
        self.module.eval()
        batch = torch.stack(list(images))
        return self.forward(batch).cpu().numpy()

    def embed(self, image: str | Path | Image.Image) -> np.ndarray:
        if isinstance(image, Image.Image):
            tensor = self.preprocess_pil(image)
        else:
            tensor = self.preprocess_path(image)
        return self.embed_batch([tensor])[0]

    # -- persistence -------------------------------------------------------

    def save(self, directory: str | Path, extra: dict | None = None) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        torch.save(self.module.state_dict(), directory / "weights.pt")
        config = {
            "encoder_spec": asdict(self.spec),
            "normalize_embeddings": self.normalize_embeddings,
        }
        if extra:
            config.update(extra)
        (directory / "config.json").write_text(json.dumps(config, indent=2))

    @staticmethod
    def load(directory: str | Path) -> "ImageEncoder":
        directory = Path(directory)
        config = json.loads((directory / "config.json").read_text())
        spec = EncoderSpec(**config["encoder_spec"])
        encoder = ImageEncoder(spec, normalize_embeddings=config["normalize_embeddings"])
        state = torch.load(directory / "weights.pt", map_location="cpu", weights_only=True)
        encoder.module.load_state_dict(state)
        encoder.module.eval()
        return encoder
