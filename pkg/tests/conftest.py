import io

import numpy as np
import pytest
from PIL import Image


def png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint8), "RGB").save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture
def make_png(tmp_path):
    """Write a small random (seeded) PNG and return its path."""

    counter = {"n": 0}

    def _make(seed=None, size=16, solid=None):
        counter["n"] += 1
        if solid is not None:
            arr = np.full((size, size, 3), solid, dtype=np.uint8)
        else:
            rng = np.random.default_rng(counter["n"] if seed is None else seed)
            arr = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
        path = tmp_path / f"img_{counter['n']}.png"
        path.write_bytes(png_bytes(arr))
        return path

    return _make
