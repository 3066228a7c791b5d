import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """20-image fixture: 2 classes x 10 images, deterministic content."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for class_name, base in (("cats", 40), ("dogs", 160)):
        class_dir = root / class_name
        class_dir.mkdir()
        for i in range(10):
            pixels = rng.integers(base, base + 80, size=(48, 48, 3), dtype=np.uint8)
            Image.fromarray(pixels, mode="RGB").save(class_dir / f"img_{i:02d}.png")
    return root
