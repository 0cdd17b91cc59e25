"""Exception hierarchy shared across the pipeline.

All errors raised on bad input data derive from DataError so the CLI can
map them to a single exit code; detector subprocess failures are kept
separate because they carry their own exit-code contract.
"""


class CadsynthError(Exception):
    pass


class DataError(CadsynthError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class MalformedMesh(DataError):
    pass


class MalformedTexture(DataError):
    pass


class MalformedAnnotation(DataError):
    pass


class MalformedDetections(DataError):
    pass


class AssetMissing(DataError):
    pass


class IoFailure(DataError):
    pass


class MissingImageAnnotation(DataError):
    pass


class UnknownParameter(DataError):
    pass


class ConfigError(DataError):
    pass


class PlacementFailure(CadsynthError):
    """Scene composition could not place an object within its try budget."""


class CameraConstraintFailure(CadsynthError):
    """No camera pose satisfied the visibility constraints within the attempt budget."""


class GenerationFailure(CadsynthError):
    """Dataset generation failed beyond the per-scene retry budget."""


class DetectorFailure(CadsynthError):
    """External detector command failed (CLI exit code 3).

    exit_code is the child process exit status when the failure came from a
    nonzero exit, else None (missing or unparseable output).
    """

    def __init__(self, message, exit_code=None):
        super().__init__(message)
        self.exit_code = exit_code
