"""Batch mask generation.

One job walks an input directory of photographs and writes the
``<id>.png`` / ``<id>.pmsk`` / ``<id>.json`` triple per image: the
scene resized to the working resolution, its mask archive (one entry
per generated mask, labels empty unless a labels file supplies them)
and the dataset sidecar.  Failures are per file: an unreadable image or
a broken model never aborts the rest of the batch, it lands in the
report instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import preprocess
from .pmskwriter import SHAPE_CLASSES, ArchiveContent, MaskRecord, write_archive, \
    write_dataset_sidecar
from .segment import ModelLoadError, load_model

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass
class MaskGenJob:
    input_dir: str | Path
    output_dir: str | Path
    model: str = "region-grow-v1"
    device: str = "cpu"
    labels_path: str | Path | None = None
    size: int = 1024

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"size must be positive, got {self.size}")


@dataclass
class FileReport:
    source: str
    archive: str | None = None
    n_masks: int = 0
    error: str | None = None


@dataclass
class JobReport:
    model: str
    archives: list[str] = field(default_factory=list)
    files: list[FileReport] = field(default_factory=list)

    @property
    def errors(self) -> list[FileReport]:
        return [f for f in self.files if f.error]

    def to_doc(self) -> dict:
        return {
            "model": self.model,
            "archives": self.archives,
            "files": [
                {"source": f.source, "archive": f.archive,
                 "n_masks": f.n_masks, "error": f.error}
                for f in self.files
            ],
            "n_errors": len(self.errors),
        }


def load_labels(path) -> dict:
    """Optional labels file: ``{image_id: {mask_id: {label, shape_class}}}``.

    Mask ids are JSON object keys, so they arrive as strings.  Entries
    naming unknown images or mask ids are ignored; a malformed document
    raises.
    """
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: labels document must be an object")
    for image_id, masks in doc.items():
        if not isinstance(masks, dict):
            raise ValueError(f"{path}: labels for {image_id!r} must be an object")
        for mask_id, meta in masks.items():
            if not isinstance(meta, dict):
                raise ValueError(f"{path}: entry {image_id}/{mask_id} must be an object")
            shape = meta.get("shape_class", "other")
            if shape not in SHAPE_CLASSES:
                raise ValueError(
                    f"{path}: entry {image_id}/{mask_id}: unknown shape_class {shape!r}"
                )
    return doc


def _input_images(input_dir: Path) -> list[Path]:
    return sorted(
        p for p in input_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def generate(job: MaskGenJob) -> JobReport:
    """Run one job; returns the report, never raises per-file problems."""
    input_dir = Path(job.input_dir)
    if not input_dir.is_dir():
        raise ValueError(f"input directory {input_dir} does not exist")
    output_dir = Path(job.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    labels = load_labels(job.labels_path) if job.labels_path else {}
    report = JobReport(model=job.model)
    images = _input_images(input_dir)

    try:
        model = load_model(job.model, job.device)
    except ModelLoadError as exc:
        # No model, no archives, but the report still accounts for
        # every input so a caller can see exactly what was skipped.
        for path in images:
            report.files.append(FileReport(source=path.name,
                                           error=f"model unavailable: {exc}"))
        return report

    for path in images:
        image_id = path.stem
        try:
            img = preprocess.read_rgb(path)
        except Exception as exc:
            report.files.append(FileReport(source=path.name,
                                           error=f"unreadable image: {exc}"))
            continue
        try:
            resized = preprocess.resize_rgb(img, job.size, job.size)
            luma = preprocess.equalize_u8(preprocess.luma_u8(resized)) / 255.0
            masks = model.segment(luma)
        except Exception as exc:
            report.files.append(FileReport(source=path.name,
                                           error=f"segmentation failed: {exc}"))
            continue
        if not masks:
            report.files.append(FileReport(source=path.name,
                                           error="segmenter produced no masks"))
            continue

        per_image = labels.get(image_id, {})
        records = []
        for i, mask in enumerate(masks, start=1):
            meta = per_image.get(str(i), {})
            records.append(MaskRecord(
                mask_id=i,
                bitmap=mask,
                label=meta.get("label", ""),
                shape_class=meta.get("shape_class", "other"),
            ))

        archive_path = output_dir / f"{image_id}.pmsk"
        preprocess.write_rgb(output_dir / f"{image_id}.png", resized)
        write_archive(archive_path, ArchiveContent(
            image_id=image_id, width=job.size, height=job.size, records=records,
        ))
        targets = [r.label for r in records if r.label and r.label != "background"]
        # The sidecar's source names the emitted scene inside the
        # dataset, not the original photograph.
        write_dataset_sidecar(output_dir / f"{image_id}.json", image_id,
                              source=f"{image_id}.png", target_labels=targets)

        report.archives.append(str(archive_path))
        report.files.append(FileReport(source=path.name, archive=str(archive_path),
                                       n_masks=len(records)))
    return report
