"""Synthetic dataset generation.

Writes scene PNGs plus mask archives and sidecars in the directory
layout the experiment harness consumes: ``<id>.png``, ``<id>.pmsk`` and
``<id>.json`` per scene.  Object counts cycle through each clutter
stratum so the default output satisfies the session quotas.
"""

from __future__ import annotations

from pathlib import Path

from . import imaging, maskstore
from .experiment import CLUTTER_LEVELS, CLUTTER_RANGES


def make_synth_dataset(out_dir, seed: int, images_per_stratum: int = 10,
                       size: int = 1024) -> list[str]:
    """Generate a full dataset directory; returns the new image ids."""
    if images_per_stratum <= 0:
        raise ValueError(f"images_per_stratum must be positive, got {images_per_stratum}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = []
    scene_index = 0
    for level in CLUTTER_LEVELS:
        lo, hi = CLUTTER_RANGES[level]
        for i in range(images_per_stratum):
            count = lo + (i % (hi - lo + 1))
            image_id = f"scene_{level}_{i:02d}"
            spec = maskstore.SceneSpec(width=size, height=size, n_objects=count)
            # One derived seed per scene keeps the whole directory a pure
            # function of the top-level seed.
            img, archive = maskstore.synth_scene(spec, seed * 10007 + scene_index)
            archive.image_id = image_id
            imaging.write_rgb(out / f"{image_id}.png", img)
            maskstore.save_archive(archive, out / f"{image_id}.pmsk")
            maskstore.save_sidecar(archive, out / f"{image_id}.json",
                                   source=f"{image_id}.png")
            ids.append(image_id)
            scene_index += 1
    return ids
