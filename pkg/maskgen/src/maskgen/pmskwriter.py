"""Mask archive serialization.

Own implementation of the archive format the engine reads: magic
``PMSK``, version 1, little endian, header ``u16 version, u16 width,
u16 height, u16 count``, then per mask ``u32 id, u8 shape_class,
u16 label_len, label UTF-8, u32 area`` followed by
``ceil(width / 8) * height`` bytes of row-major MSB-first bitmap.  The
image id travels in the file name and the JSON sidecar, not in the
binary payload.  The engine's loader is the compatibility oracle in the
tests; nothing here imports engine code.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"PMSK"
VERSION = 1

SHAPE_CLASSES = ("rectangle", "sphere", "cylinder", "other")

_MAX_DIM = 0xFFFF
_MAX_LABEL = 0xFFFF
_MAX_ID = 0xFFFFFFFF


@dataclass
class MaskRecord:
    mask_id: int
    bitmap: np.ndarray  # bool (H, W)
    label: str = ""
    shape_class: str = "other"

    def __post_init__(self):
        self.bitmap = np.ascontiguousarray(np.asarray(self.bitmap, dtype=bool))
        if self.bitmap.ndim != 2:
            raise ValueError(f"mask {self.mask_id}: bitmap must be 2-D")
        if not 0 <= self.mask_id <= _MAX_ID:
            raise ValueError(f"mask id {self.mask_id} does not fit u32")
        if self.shape_class not in SHAPE_CLASSES:
            raise ValueError(f"mask {self.mask_id}: unknown shape_class {self.shape_class!r}")


@dataclass
class ArchiveContent:
    image_id: str
    width: int
    height: int
    records: list[MaskRecord] = field(default_factory=list)


def write_archive(path, content: ArchiveContent):
    """Serialize records to one archive file."""
    width, height = content.width, content.height
    if not (0 < width <= _MAX_DIM and 0 < height <= _MAX_DIM):
        raise ValueError(f"archive dimensions {width}x{height} out of range")
    seen: set[int] = set()
    parts = [struct.pack("<4sHHHH", MAGIC, VERSION, width, height, len(content.records))]
    for rec in content.records:
        if rec.bitmap.shape != (height, width):
            raise ValueError(
                f"mask {rec.mask_id}: bitmap shape {rec.bitmap.shape} does not "
                f"match archive {height}x{width}"
            )
        if rec.mask_id in seen:
            raise ValueError(f"duplicate mask id {rec.mask_id}")
        seen.add(rec.mask_id)
        label = rec.label.encode("utf-8")
        if len(label) > _MAX_LABEL:
            raise ValueError(f"mask {rec.mask_id}: label too long ({len(label)} bytes)")
        area = int(rec.bitmap.sum())
        parts.append(struct.pack("<IBH", rec.mask_id,
                                 SHAPE_CLASSES.index(rec.shape_class), len(label)))
        parts.append(label)
        parts.append(struct.pack("<I", area))
        # Rows pack MSB first and pad to whole bytes with zeros.
        parts.append(np.packbits(rec.bitmap, axis=1).tobytes())
    Path(path).write_bytes(b"".join(parts))


def write_dataset_sidecar(path, image_id: str, source: str,
                          target_labels: list[str] | None = None):
    """JSON sidecar in the dataset layout the engine expects."""
    doc = {
        "image_id": image_id,
        "source": source,
        "target_labels": sorted(target_labels or []),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
