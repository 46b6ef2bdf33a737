"""Offline mask-archive generation for phosphene vision scene datasets.

The package turns a directory of photographs into the ``<id>.png`` /
``<id>.pmsk`` / ``<id>.json`` triples the simulation engine consumes.
It deliberately shares no code with the engine: preprocessing and the
archive writer are reimplemented here against the same documented
contracts, so either side can change internals without dragging the
other along.  Batch only; nothing here is real-time and nothing trains.
"""

from .jobs import FileReport, JobReport, MaskGenJob, generate
from .segment import ModelLoadError, RegionGrower, available_models, register_model

__all__ = [
    "FileReport",
    "JobReport",
    "MaskGenJob",
    "generate",
    "ModelLoadError",
    "RegionGrower",
    "available_models",
    "register_model",
]
