"""Segmentation mask archives and gaze-contingent composition.

Archive files use a compact binary layout (magic ``PMSK``, version 1,
little endian): header ``u16 version, u16 width, u16 height, u16 count``
followed per mask by ``u32 id, u8 shape_class, u16 label_len, label
UTF-8 bytes, u32 area`` and ``ceil(width / 8) * height`` bytes of
row-major, MSB-first bitmap data.  The image identifier is not part of
the binary payload; it comes from the file name and the JSON sidecar.
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

SELECTION_POLICIES = ("union", "smallest-area")

DEFAULT_EDGE_GAIN = 0.3


class ArchiveFormatError(ValueError):
    """Malformed archive payload."""


class BadMagicError(ArchiveFormatError):
    pass


class TruncatedArchiveError(ArchiveFormatError):
    pass


class BitCountMismatchError(ArchiveFormatError):
    pass


@dataclass
class GazePoint:
    """Gaze sample in stimulus pixel coordinates."""

    x: int
    y: int
    t: int = 0


@dataclass
class MaskEntry:
    id: int
    bitmap: np.ndarray  # bool (H, W)
    area: int
    label: str = ""
    shape_class: str = "other"


@dataclass
class MaskArchive:
    image_id: str
    width: int
    height: int
    masks: list[MaskEntry] = field(default_factory=list)


def make_entry(mask_id: int, bitmap: np.ndarray, label: str = "",
               shape_class: str = "other") -> MaskEntry:
    """Build a MaskEntry with the area derived from the bitmap."""
    bitmap = np.ascontiguousarray(np.asarray(bitmap, dtype=bool))
    if bitmap.ndim != 2:
        raise ValueError(f"bitmap must be 2-D, got shape {bitmap.shape}")
    if shape_class not in SHAPE_CLASSES:
        raise ValueError(f"unknown shape_class {shape_class!r}")
    return MaskEntry(
        id=mask_id,
        bitmap=bitmap,
        area=int(bitmap.sum()),
        label=label,
        shape_class=shape_class,
    )


def validate_archive(archive: MaskArchive):
    """Raise on internal inconsistencies (dimensions, ids, areas)."""
    if archive.width <= 0 or archive.height <= 0:
        raise ValueError(f"bad archive dimensions {archive.width}x{archive.height}")
    seen = set()
    for m in archive.masks:
        if m.bitmap.shape != (archive.height, archive.width):
            raise ValueError(
                f"mask {m.id}: bitmap shape {m.bitmap.shape} does not match "
                f"archive {archive.height}x{archive.width}"
            )
        if m.id in seen:
            raise ValueError(f"duplicate mask id {m.id}")
        seen.add(m.id)
        if m.area != int(m.bitmap.sum()):
            raise BitCountMismatchError(
                f"mask {m.id}: area field {m.area} != set bit count {int(m.bitmap.sum())}"
            )
        if m.shape_class not in SHAPE_CLASSES:
            raise ValueError(f"mask {m.id}: unknown shape_class {m.shape_class!r}")


def save_archive(archive: MaskArchive, path):
    """Serialize an archive.  save(load(p)) reproduces p byte for byte."""
    validate_archive(archive)
    row_bytes = (archive.width + 7) // 8
    chunks = [MAGIC, struct.pack("<HHHH", VERSION, archive.width, archive.height,
                                 len(archive.masks))]
    for m in archive.masks:
        label = m.label.encode("utf-8")
        if len(label) > 0xFFFF:
            raise ValueError(f"mask {m.id}: label too long")
        chunks.append(struct.pack("<IBH", m.id, SHAPE_CLASSES.index(m.shape_class),
                                  len(label)))
        chunks.append(label)
        chunks.append(struct.pack("<I", m.area))
        packed = np.packbits(m.bitmap, axis=1)
        if packed.shape[1] != row_bytes:
            raise ValueError(f"mask {m.id}: packing produced unexpected row width")
        chunks.append(packed.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_archive(path) -> MaskArchive:
    """Parse an archive file; the image id is the file name stem."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"{path.name}: bad magic {data[:4]!r}")
    if len(data) < 12:
        raise TruncatedArchiveError(f"{path.name}: truncated header")
    version, width, height, count = struct.unpack_from("<HHHH", data, 4)
    if version != VERSION:
        raise ArchiveFormatError(f"{path.name}: unsupported version {version}")
    if width == 0 or height == 0:
        raise ArchiveFormatError(f"{path.name}: zero dimension {width}x{height}")
    row_bytes = (width + 7) // 8
    bitmap_bytes = row_bytes * height
    masks = []
    off = 12
    for _ in range(count):
        if off + 7 > len(data):
            raise TruncatedArchiveError(f"{path.name}: truncated mask header at offset {off}")
        mask_id, shape_idx, label_len = struct.unpack_from("<IBH", data, off)
        off += 7
        if shape_idx >= len(SHAPE_CLASSES):
            raise ArchiveFormatError(f"{path.name}: mask {mask_id}: bad shape class {shape_idx}")
        if off + label_len + 4 > len(data):
            raise TruncatedArchiveError(f"{path.name}: mask {mask_id}: truncated label")
        label = data[off:off + label_len].decode("utf-8")
        off += label_len
        (area,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + bitmap_bytes > len(data):
            raise TruncatedArchiveError(f"{path.name}: mask {mask_id}: truncated bitmap")
        packed = np.frombuffer(data, dtype=np.uint8, count=bitmap_bytes, offset=off)
        off += bitmap_bytes
        packed = packed.reshape(height, row_bytes)
        bits = np.unpackbits(packed, axis=1)
        bitmap = bits[:, :width].astype(bool)
        popcount = int(bitmap.sum())
        if popcount != area:
            raise BitCountMismatchError(
                f"{path.name}: mask {mask_id}: area field {area} != set bit count {popcount}"
            )
        # Row padding must be zero, otherwise the round trip would not
        # be byte-identical.
        if int(bits.sum()) != popcount:
            raise BitCountMismatchError(
                f"{path.name}: mask {mask_id}: nonzero padding bits"
            )
        masks.append(MaskEntry(id=mask_id, bitmap=bitmap, area=area, label=label,
                               shape_class=SHAPE_CLASSES[shape_idx]))
    if off != len(data):
        raise ArchiveFormatError(f"{path.name}: {len(data) - off} trailing bytes")
    return MaskArchive(image_id=path.stem, width=width, height=height, masks=masks)


def save_sidecar(archive: MaskArchive, path, source: str = "",
                 target_labels: list[str] | None = None):
    """Write the JSON sidecar naming the image, its source file and the
    labels eligible as search targets."""
    if target_labels is None:
        target_labels = [m.label for m in archive.masks
                         if m.label and m.label != "background"]
    doc = {
        "image_id": archive.image_id,
        "source": source,
        "target_labels": sorted(target_labels),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_sidecar(path) -> dict:
    doc = json.loads(Path(path).read_text())
    for key in ("image_id", "source", "target_labels"):
        if key not in doc:
            raise ArchiveFormatError(f"{Path(path).name}: sidecar missing {key!r}")
    return doc


def masks_at(archive: MaskArchive, gaze: GazePoint) -> list[int]:
    """Ids of all masks covering the gaze point, in archive order.

    Gaze coordinates outside the frame clamp to the nearest edge pixel.
    """
    x = min(max(int(gaze.x), 0), archive.width - 1)
    y = min(max(int(gaze.y), 0), archive.height - 1)
    return [m.id for m in archive.masks if m.bitmap[y, x]]


def compose_gcss(archive: MaskArchive, gaze: GazePoint, edges: np.ndarray,
                 edge_gain: float = DEFAULT_EDGE_GAIN,
                 policy: str = "union") -> np.ndarray:
    """Gaze-contingent stimulus: highlighted masks over attenuated edges.

    The masks under the gaze point (all of them, or only the smallest by
    area under the ``smallest-area`` policy) paint at full intensity;
    everywhere else the edge map contributes ``edge_gain`` of its value.
    The result is clamped to [0, 1].
    """
    if policy not in SELECTION_POLICIES:
        raise ValueError(f"unknown selection policy {policy!r}")
    if not 0.0 <= edge_gain <= 1.0:
        raise ValueError(f"edge_gain must be in [0, 1], got {edge_gain}")
    edges = np.asarray(edges, dtype=np.float64)
    if edges.shape != (archive.height, archive.width):
        raise ValueError(
            f"edge frame shape {edges.shape} does not match archive "
            f"{archive.height}x{archive.width}"
        )
    selected = masks_at(archive, gaze)
    if policy == "smallest-area" and selected:
        by_id = {m.id: m for m in archive.masks}
        selected = [min(selected, key=lambda i: (by_id[i].area, i))]
    highlight = np.zeros((archive.height, archive.width), dtype=np.float64)
    if selected:
        chosen = set(selected)
        for m in archive.masks:
            if m.id in chosen:
                highlight[m.bitmap] = 1.0
    return np.clip(highlight + edge_gain * edges, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Synthetic scenes with exact ground-truth masks.

@dataclass(frozen=True)
class ShapeSpec:
    """One object: axis-aligned rectangle, ellipse or capsule."""

    kind: str  # rectangle | ellipse | capsule
    cx: float
    cy: float
    width: float
    height: float
    label: str = ""


@dataclass
class SceneSpec:
    width: int = 1024
    height: int = 1024
    n_objects: int = 0
    shapes: list[ShapeSpec] | None = None
    min_extent: int = 80
    max_extent: int = 240
    include_background: bool = False
    background_rgb: tuple = (96, 96, 96)


_SHAPE_KINDS = ("rectangle", "ellipse", "capsule")
_KIND_TO_CLASS = {"rectangle": "rectangle", "ellipse": "sphere", "capsule": "cylinder"}

# Nameable object vocabularies keyed by shape kind.  Labels within one
# scene are unique so a cue is never ambiguous.
_LABEL_POOL = {
    "rectangle": ("box", "book", "keyboard", "tablet", "frame"),
    "ellipse": ("ball", "orange", "apple", "tomato", "globe"),
    "capsule": ("marker", "can", "bottle", "cup", "battery"),
}


def _shape_mask(spec: ShapeSpec, width: int, height: int) -> np.ndarray:
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    if spec.kind == "rectangle":
        # Half-open pixel ranges so the area is exactly round(w)*round(h).
        w = int(round(spec.width))
        h = int(round(spec.height))
        x0 = int(round(spec.cx - w / 2.0))
        y0 = int(round(spec.cy - h / 2.0))
        mask = np.zeros((height, width), dtype=bool)
        mask[max(y0, 0):max(y0 + h, 0), max(x0, 0):max(x0 + w, 0)] = True
        return mask
    if spec.kind == "ellipse":
        rx = spec.width / 2.0
        ry = spec.height / 2.0
        return ((xs - spec.cx) / rx) ** 2 + ((ys - spec.cy) / ry) ** 2 <= 1.0
    if spec.kind == "capsule":
        # Points within radius r of the center segment along the long axis.
        r = min(spec.width, spec.height) / 2.0
        if spec.width >= spec.height:
            half = spec.width / 2.0 - r
            sx = np.clip(xs - spec.cx, -half, half) + spec.cx
            return (xs - sx) ** 2 + (ys - spec.cy) ** 2 <= r * r
        half = spec.height / 2.0 - r
        sy = np.clip(ys - spec.cy, -half, half) + spec.cy
        return (xs - spec.cx) ** 2 + (ys - sy) ** 2 <= r * r
    raise ValueError(f"unknown shape kind {spec.kind!r}")


def _object_color(rng: np.random.Generator) -> np.ndarray:
    # Saturated, mid-bright colors that contrast with the gray backdrop.
    import colorsys

    h = rng.uniform(0.0, 1.0)
    s = rng.uniform(0.55, 0.9)
    v = rng.uniform(0.55, 0.95)
    return np.array([int(round(c * 255)) for c in colorsys.hsv_to_rgb(h, s, v)],
                    dtype=np.uint8)


def synth_scene(spec: SceneSpec, seed: int) -> tuple[np.ndarray, MaskArchive]:
    """Render a synthetic scene and its exact mask archive.

    Shapes may be given explicitly or sampled (count, extents and
    positions) from the seeded generator; sampling retries to avoid
    overlap and is deterministic per seed.  Every mask is the analytic
    pixel support of its shape, so areas are exact.
    """
    rng = np.random.default_rng(seed)
    if spec.shapes is not None:
        shapes = list(spec.shapes)
    else:
        shapes = _sample_shapes(spec, rng)
    for s in shapes:
        if s.width > spec.width or s.height > spec.height:
            raise ValueError(
                f"shape {s.kind} {s.width}x{s.height} does not fit the "
                f"{spec.width}x{spec.height} frame"
            )
        if s.width <= 0 or s.height <= 0:
            raise ValueError(f"degenerate shape extents {s.width}x{s.height}")

    img = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    img[:, :] = np.asarray(spec.background_rgb, dtype=np.uint8)

    used_labels = set()
    masks = []
    object_union = np.zeros((spec.height, spec.width), dtype=bool)
    next_id = 1 if spec.include_background else 0
    for i, s in enumerate(shapes):
        bitmap = _shape_mask(s, spec.width, spec.height)
        label = s.label or _pick_label(s.kind, used_labels, rng)
        used_labels.add(label)
        img[bitmap] = _object_color(rng)
        object_union |= bitmap
        masks.append(make_entry(next_id + i, bitmap, label=label,
                                shape_class=_KIND_TO_CLASS[s.kind]))
    if spec.include_background:
        masks.insert(0, make_entry(0, ~object_union, label="background",
                                   shape_class="other"))
    archive = MaskArchive(image_id=f"scene_{seed}", width=spec.width,
                          height=spec.height, masks=masks)
    validate_archive(archive)
    return img, archive


def _pick_label(kind: str, used: set, rng: np.random.Generator) -> str:
    pool = _LABEL_POOL[kind]
    start = int(rng.integers(0, len(pool)))
    for i in range(len(pool)):
        cand = pool[(start + i) % len(pool)]
        if cand not in used:
            return cand
    n = 2
    while f"{pool[start]}_{n}" in used:
        n += 1
    return f"{pool[start]}_{n}"


def _sample_shapes(spec: SceneSpec, rng: np.random.Generator) -> list[ShapeSpec]:
    if spec.n_objects < 0:
        raise ValueError(f"n_objects must be >= 0, got {spec.n_objects}")
    if spec.n_objects > 0 and spec.min_extent > min(spec.width, spec.height):
        raise ValueError("min_extent exceeds the frame")
    shapes: list[ShapeSpec] = []
    boxes: list[tuple] = []
    for _ in range(spec.n_objects):
        placed = None
        for attempt in range(500):
            kind = _SHAPE_KINDS[int(rng.integers(0, 3))]
            w = float(rng.integers(spec.min_extent, spec.max_extent + 1))
            h = float(rng.integers(spec.min_extent, spec.max_extent + 1))
            if kind == "capsule" and abs(w - h) < spec.min_extent / 4:
                w = h + spec.min_extent / 2  # keep an unambiguous long axis
            if w > spec.width or h > spec.height:
                continue
            cx = float(rng.uniform(w / 2.0, spec.width - w / 2.0))
            cy = float(rng.uniform(h / 2.0, spec.height - h / 2.0))
            box = (cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
            margin = 4.0
            clash = any(
                box[0] < b[2] + margin and b[0] < box[2] + margin
                and box[1] < b[3] + margin and b[1] < box[3] + margin
                for b in boxes
            )
            if not clash or attempt == 499:
                placed = ShapeSpec(kind, cx, cy, w, h)
                boxes.append(box)
                break
        shapes.append(placed)
    return shapes
