"""Segmentation backends.

The only bundled backend is a deterministic coarse-grid region grower:
it needs no weights, no GPU and no network, so every environment can
generate valid archives.  Heavier models plug in through the registry;
loaders run lazily at :func:`load_model` time, so registering an id
whose import is expensive costs nothing until a job actually asks for
it.  Batch generation only; none of this is meant to run per frame.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .preprocess import resample_plane


class ModelLoadError(RuntimeError):
    """The requested segmentation model cannot be constructed."""


class Segmenter(Protocol):
    def segment(self, luma: np.ndarray) -> list[np.ndarray]:
        """Bool masks, each shaped like ``luma``, most salient first."""
        ...


@dataclass(frozen=True)
class GrowParams:
    """Region-growing knobs.

    ``grid`` is the working resolution: growing happens on a
    ``grid x grid`` bilinear reduction of the luma plane and masks are
    expanded back afterwards, which keeps the flood fill cheap at any
    stimulus size.  ``tol`` is the luma distance (on the [0, 1] scale)
    a cell may sit from its region's seed; ``min_cells`` drops specks.
    """

    grid: int = 128
    tol: float = 0.08
    min_cells: int = 16
    max_masks: int = 32

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError(f"grid must be at least 2, got {self.grid}")
        if not 0.0 < self.tol <= 1.0:
            raise ValueError(f"tol must be in (0, 1], got {self.tol}")
        if self.min_cells < 1:
            raise ValueError(f"min_cells must be positive, got {self.min_cells}")
        if self.max_masks < 1:
            raise ValueError(f"max_masks must be positive, got {self.max_masks}")


def _nearest_index(n_dst: int, n_src: int) -> np.ndarray:
    # Same half-pixel center convention as the bilinear reduction, so
    # the expansion lines up with where the cells were sampled.
    idx = np.floor((np.arange(n_dst) + 0.5) * (n_src / n_dst)).astype(np.intp)
    return np.clip(idx, 0, n_src - 1)


class RegionGrower:
    """Deterministic seeded region growing on a coarse luma grid.

    Cells are visited in raster order; each unassigned cell seeds a new
    region that absorbs 4-connected neighbors whose luma stays within
    ``tol`` of the seed value.  Raster seeding plus FIFO growth makes
    the output a pure function of the input plane.
    """

    name = "region-grow-v1"

    def __init__(self, params: GrowParams | None = None, device: str = "cpu"):
        # The device hint is accepted for interface parity with heavier
        # backends; growing is cheap enough that only the CPU path exists.
        self.params = params or GrowParams()
        self.device = device

    def segment(self, luma: np.ndarray) -> list[np.ndarray]:
        luma = np.asarray(luma, dtype=np.float64)
        if luma.ndim != 2:
            raise ValueError(f"expected a 2-D luma plane, got shape {luma.shape}")
        h, w = luma.shape
        p = self.params
        g = min(p.grid, h, w)
        small = resample_plane(luma, g, g)

        labels = np.full((g, g), -1, dtype=np.int32)
        regions: list[np.ndarray] = []
        for seed_y in range(g):
            for seed_x in range(g):
                if labels[seed_y, seed_x] >= 0:
                    continue
                region_id = len(regions)
                seed_val = small[seed_y, seed_x]
                labels[seed_y, seed_x] = region_id
                cells = [(seed_y, seed_x)]
                queue = deque(cells)
                while queue:
                    cy, cx = queue.popleft()
                    for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                        if not (0 <= ny < g and 0 <= nx < g):
                            continue
                        if labels[ny, nx] >= 0:
                            continue
                        if abs(small[ny, nx] - seed_val) > p.tol:
                            continue
                        labels[ny, nx] = region_id
                        cells.append((ny, nx))
                        queue.append((ny, nx))
                regions.append(np.array(cells, dtype=np.intp))

        kept = [cells for cells in regions if len(cells) >= p.min_cells]
        if not kept:
            return [np.ones((h, w), dtype=bool)]
        if len(kept) > p.max_masks:
            # Largest regions win; survivors keep their discovery order.
            order = sorted(range(len(kept)), key=lambda i: (-len(kept[i]), i))
            keep_ids = sorted(order[: p.max_masks])
            kept = [kept[i] for i in keep_ids]

        iy = _nearest_index(h, g)
        ix = _nearest_index(w, g)
        masks = []
        for cells in kept:
            cell_mask = np.zeros((g, g), dtype=bool)
            cell_mask[cells[:, 0], cells[:, 1]] = True
            masks.append(cell_mask[np.ix_(iy, ix)])
        return masks


_REGISTRY: dict[str, Callable[[str], Segmenter]] = {}


def register_model(name: str, loader: Callable[[str], Segmenter]):
    """Register a segmenter factory; ``loader(device)`` runs lazily."""
    if not name:
        raise ValueError("model name must be nonempty")
    _REGISTRY[name] = loader


def available_models() -> list[str]:
    return sorted(_REGISTRY)


def load_model(name: str, device: str = "cpu") -> Segmenter:
    try:
        loader = _REGISTRY[name]
    except KeyError:
        known = ", ".join(available_models()) or "none"
        raise ModelLoadError(f"unknown model {name!r} (available: {known})") from None
    try:
        return loader(device)
    except ModelLoadError:
        raise
    except Exception as exc:
        raise ModelLoadError(f"model {name!r} failed to load: {exc}") from exc


register_model(RegionGrower.name, lambda device: RegionGrower(device=device))
register_model("builtin", lambda device: RegionGrower(device=device))
