"""Error types shared across the package.

Every failure the library raises deliberately derives from HistoscopeError,
so callers (CLI, service) can map them to exit codes / HTTP statuses without
catching bare exceptions.
"""


class HistoscopeError(Exception):
    """Base class for all deliberate histoscope failures."""


# volume loading / filtering

class MixedDimensions(HistoscopeError):
    """Stack images disagree in width or height."""


class EmptyStack(HistoscopeError):
    """No images were supplied."""


class UnreadableImage(HistoscopeError):
    """An image path exists but cannot be decoded."""


class RadiusExceedsVolume(HistoscopeError):
    """Structuring element does not fit inside the volume."""


class DegenerateVolume(HistoscopeError):
    """A volume axis is too short for the requested operation."""


# mesh model / file I/O

class PaletteTooShort(HistoscopeError):
    """Explicit palette has fewer entries than components."""


class MalformedPly(HistoscopeError):
    """PLY payload violates the subset this package reads."""


class UnsupportedElement(HistoscopeError):
    """PLY contains an element other than vertex/face."""


# analytics

class NoSeedVertex(HistoscopeError):
    """Paint tool sphere touches no mesh vertex."""


class MissingNormals(HistoscopeError):
    """Operation needs per-vertex normals that were never computed."""


class DegenerateRange(HistoscopeError):
    """Colour ramp bounds collapse (lo >= hi)."""


class StoreUnavailable(HistoscopeError):
    """Annotation/journal file cannot be opened for append."""


class MeshMismatch(HistoscopeError):
    """Journal entries reference a different mesh."""


# sections

class IndexOutOfRange(HistoscopeError):
    """Section index outside [0, count)."""


# service

class ConfigInvalid(HistoscopeError):
    """Project configuration failed validation."""


class PortBusy(HistoscopeError):
    """Requested bind address is already in use."""


class UnknownMesh(HistoscopeError):
    """Request references a mesh id absent from the project."""


class UnknownAnnotation(HistoscopeError):
    """Request references an annotation id absent from the store."""


# CLI / synthesis

class IoFailure(HistoscopeError):
    """File could not be written."""


class SpecInfeasible(HistoscopeError):
    """Synthetic geometry cannot fit the requested volume."""
