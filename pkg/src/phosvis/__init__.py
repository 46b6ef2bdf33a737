"""Gaze-contingent phosphene vision simulation and experiment harness."""

__version__ = "0.1.0"

from . import analysis, datasets, experiment, imaging, maskstore, simulator

__all__ = [
    "analysis",
    "datasets",
    "experiment",
    "imaging",
    "maskstore",
    "simulator",
    "__version__",
]
