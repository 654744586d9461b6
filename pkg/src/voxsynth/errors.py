"""Exception hierarchy shared across the package."""


class VoxsynthError(Exception):
    """Base class for all voxsynth errors."""


class ConfigError(VoxsynthError, ValueError):
    """Invalid configuration document, range, or parameter."""


class VolumeIOError(VoxsynthError, OSError):
    """Malformed or unwritable volume / raster files."""


class GenerationError(VoxsynthError, RuntimeError):
    """A pipeline stage failed while producing a sample."""

    def __init__(self, stage, message, provenance=None):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
        self.provenance = provenance or {}
