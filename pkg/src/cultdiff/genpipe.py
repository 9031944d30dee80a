"""Prompt rendering and external image clients.

Prompts are exact template instantiations; the adjectival country forms live
in the catalog's country table and are editable configuration. Search and
generation backends are small client interfaces with deterministic local
stubs so every pipeline stage runs offline.
"""

from __future__ import annotations

import hashlib
import io
import logging
import os
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np
from PIL import Image

from .catalog import Artifact, Catalog, Country, ImageRecord
from .errors import ClientUnavailable, GenerationRejected, MissingDemonym, UnknownModel

log = logging.getLogger(__name__)

TEMPLATE_VERSION = "v1"

DEFAULT_MODELS = ("sdxl", "sd3m", "flux")
DEFAULT_GENERATION_RESOLUTION = 1024


@dataclass(frozen=True)
class PromptText:
    id: str
    artifact_id: str
    text: str
    template_version: str = TEMPLATE_VERSION


@dataclass(frozen=True)
class GenerationRequest:
    prompt_id: str
    model_id: str
    seed: int
    resolution: int = DEFAULT_GENERATION_RESOLUTION


def render_prompt_text(artifact: Artifact, country: Country) -> str:
    if artifact.category == "architecture":
        return f"A panoramic view of {artifact.name} in {country.prompt_name}, realistic"
    if not country.demonym:
        raise MissingDemonym(country.code)
    if artifact.category == "clothing":
        return f"An image of {artifact.name} from {country.demonym} clothing, realistic"
    if artifact.category == "food":
        return f"An image of {artifact.name} from {country.demonym} cuisine, realistic"
    raise ValueError(f"unknown category {artifact.category!r}")


def render_prompt(catalog: Catalog, artifact: Artifact) -> PromptText:
    """Render and persist the canonical prompt for an artifact."""
    country = catalog.countries[artifact.country]
    text = render_prompt_text(artifact, country)
    prompt_id = catalog.save_prompt(artifact.id, text, TEMPLATE_VERSION)
    return PromptText(id=prompt_id, artifact_id=artifact.id, text=text)


class SearchClient(Protocol):
    def search(self, query: str, k: int) -> list[bytes]:
        """Return up to k encoded images for a query."""


class GenerationClient(Protocol):
    def generate(self, prompt: str, model_id: str, seed: int, width: int, height: int) -> bytes:
        """Return one encoded image for a prompt."""


def _procedural_image(key: str, size: int = 64) -> bytes:
    """Deterministic fixture image derived from a string key."""
    digest = hashlib.sha256(key.encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    base = rng.integers(0, 256, size=(size // 8, size // 8, 3), dtype=np.uint8)
    arr = np.kron(base, np.ones((8, 8, 1), dtype=np.uint8))
    buf = io.BytesIO()
    Image.fromarray(arr, "RGB").save(buf, format="PNG")
    return buf.getvalue()


class StubSearchClient:
    """Fixture-backed search; `holdings` maps query -> encoded images."""

    def __init__(self, holdings: dict[str, list[bytes]] | None = None, default_k: int = 7):
        self.holdings = holdings
        self.default_k = default_k
        self.available = True

    def search(self, query: str, k: int) -> list[bytes]:
        if not self.available:
            raise ClientUnavailable("stub search client is offline")
        if self.holdings is not None:
            found = self.holdings.get(query, [])
        else:
            found = [_procedural_image(f"search:{query}:{i}") for i in range(self.default_k)]
        return found[:k]


class StubGenerationClient:
    """Deterministic local generator: same (prompt, model, seed) -> same bytes."""

    def __init__(self, models: Sequence[str] = DEFAULT_MODELS, reject_substrings: Sequence[str] = ()):
        self.models = tuple(models)
        self.reject_substrings = tuple(reject_substrings)
        self.available = True

    def generate(self, prompt: str, model_id: str, seed: int, width: int, height: int) -> bytes:
        if not self.available:
            raise ClientUnavailable("stub generation client is offline")
        for bad in self.reject_substrings:
            if bad in prompt:
                raise GenerationRejected(f"prompt rejected: contains {bad!r}")
        return _procedural_image(f"gen:{model_id}:{seed}:{prompt}", size=min(width, 64))


class HttpGenerationClient:
    """POSTs {prompt, model_id, seed, width, height} and expects image bytes.

    Endpoint and bearer token come from arguments or the environment
    (CULTDIFF_GEN_ENDPOINT / CULTDIFF_GEN_TOKEN).
    """

    def __init__(self, endpoint: str | None = None, token: str | None = None, timeout: float = 120.0):
        self.endpoint = endpoint or os.environ.get("CULTDIFF_GEN_ENDPOINT")
        self.token = token or os.environ.get("CULTDIFF_GEN_TOKEN")
        self.timeout = timeout
        if not self.endpoint:
            raise ClientUnavailable("no generation endpoint configured")

    def generate(self, prompt: str, model_id: str, seed: int, width: int, height: int) -> bytes:
        import httpx

        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            resp = httpx.post(
                self.endpoint,
                json={
                    "prompt": prompt,
                    "model_id": model_id,
                    "seed": seed,
                    "width": width,
                    "height": height,
                },
                headers=headers,
                timeout=self.timeout,
            )
        except httpx.TransportError as exc:
            raise ClientUnavailable(str(exc)) from exc
        if resp.status_code == 422:
            raise GenerationRejected(resp.text)
        if resp.status_code != 200:
            raise ClientUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        return resp.content


def fetch_reference_images(
    catalog: Catalog, client: SearchClient, artifact: Artifact, k: int = 5
) -> list[ImageRecord]:
    """Register up to k real images for an artifact from the search client."""
    if k < 1:
        raise ValueError("k must be >= 1")
    prompt = catalog.get_prompt(artifact.prompt_id)[1] if artifact.prompt_id else artifact.name
    found = client.search(prompt, k)
    records = []
    for data in found:
        image_id = catalog.register_image_bytes(artifact.id, "real", data)
        records.append(catalog.get_image(image_id))
    if len(records) < k:
        log.warning(
            "reference shortfall for %s (%s): wanted %d, got %d",
            artifact.name,
            artifact.id,
            k,
            len(records),
        )
    return records


def generate_image(
    catalog: Catalog,
    client: GenerationClient,
    request: GenerationRequest,
    configured_models: Sequence[str] = DEFAULT_MODELS,
) -> ImageRecord:
    """Generate one image for a prompt and register it."""
    if request.model_id not in configured_models:
        raise UnknownModel(request.model_id)
    artifact_id, text, _ = catalog.get_prompt(request.prompt_id)
    data = client.generate(
        text, request.model_id, request.seed, request.resolution, request.resolution
    )
    image_id = catalog.register_image_bytes(
        artifact_id, "generated", data, model_id=request.model_id, seed=request.seed
    )
    return catalog.get_image(image_id)
