"""Exception types shared across the package."""


class ScribblesegError(Exception):
    """Base class for all package errors."""


class DecodeError(ScribblesegError):
    """File could not be decoded as a supported image format."""


class DimensionMismatch(ScribblesegError):
    """Two rasters that must share dimensions do not."""


class ConflictError(ScribblesegError):
    """A pixel is marked as both foreground and background."""

    def __init__(self, pixel: tuple[int, int], message: str | None = None):
        self.pixel = pixel
        super().__init__(message or f"pixel {pixel} marked as both foreground and background")


class EmptySegment(ScribblesegError):
    """Histogram requested for an empty pixel collection."""


class BinMismatch(ScribblesegError):
    """Histograms with different bin counts were combined."""


class MissingJointHistogram(ScribblesegError):
    """Joint-histogram similarity requested but features carry no joint histogram."""


class InvalidK(ScribblesegError):
    """Cluster count outside the valid range."""


class SeedConflict(ScribblesegError):
    """A segment received both foreground and background seeds."""

    def __init__(self, segments: set[int], message: str | None = None):
        self.segments = segments
        super().__init__(message or f"segments seeded as both foreground and background: {sorted(segments)}")


class EmptySeeds(ScribblesegError):
    """Partitioning requires at least one seed on each side."""

    def __init__(self, missing: str, message: str | None = None):
        self.missing = missing  # "foreground", "background" or "both"
        super().__init__(message or f"no {missing} seeds")


class SingleSegment(ScribblesegError):
    """The image produced fewer than two segments; nothing to partition."""


class DisconnectedGraph(ScribblesegError):
    """Spanning tree requested for a graph that does not connect all vertices."""


class TooLarge(ScribblesegError):
    """Exhaustive enumeration refused: instance above the hard size limit."""


class DatasetLayoutError(ScribblesegError):
    """Evaluation dataset directory does not follow the expected layout."""
