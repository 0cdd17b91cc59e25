"""cadsynth: synthetic tabletop dataset generator for object detection.

Composes randomized tabletop scenes around a CAD mesh, renders them with a
deterministic ray tracer, auto-labels via an instance-id mask pass, writes
PASCAL VOC datasets, and evaluates/sweeps detector results.
"""

__version__ = "0.1.0"

from .boxes import BBox
from .errors import (
    AssetMissing,
    CadsynthError,
    CameraConstraintFailure,
    ConfigError,
    DataError,
    DetectorFailure,
    GenerationFailure,
    IoFailure,
    MalformedAnnotation,
    MalformedDetections,
    MalformedMesh,
    MalformedTexture,
    MissingImageAnnotation,
    PlacementFailure,
    UnknownParameter,
)

__all__ = [
    "BBox",
    "AssetMissing",
    "CadsynthError",
    "CameraConstraintFailure",
    "ConfigError",
    "DataError",
    "DetectorFailure",
    "GenerationFailure",
    "IoFailure",
    "MalformedAnnotation",
    "MalformedDetections",
    "MalformedMesh",
    "MalformedTexture",
    "MissingImageAnnotation",
    "PlacementFailure",
    "UnknownParameter",
    "__version__",
]
