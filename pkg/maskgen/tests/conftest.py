import numpy as np
import pytest
from PIL import Image

from scenefab import paint_scene


@pytest.fixture
def scene_dir(tmp_path):
    """Directory of three small photographs."""
    rng = np.random.default_rng(20260817)
    d = tmp_path / "photos"
    d.mkdir()
    for i, (w, h) in enumerate([(300, 200), (256, 256), (180, 240)]):
        img = paint_scene(rng, w, h)
        Image.fromarray(img, mode="RGB").save(d / f"photo_{i:02d}.png")
    return d
