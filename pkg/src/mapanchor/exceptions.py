"""Exception types raised across the toolkit."""


class MapAnchorError(Exception):
    """Base class for all toolkit-specific errors."""


class GimbalBoundary(MapAnchorError):
    """Rotation too close to the 180 degree logarithm boundary."""


class DimensionMismatch(MapAnchorError):
    """Array input does not have the expected shape."""


class LengthMismatch(MapAnchorError):
    """Paired sequences differ in length."""


class FormatError(MapAnchorError):
    """Malformed file content.

    Carries the offending path and, when known, the 1-based line number.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)


class MissingKeyframe(MapAnchorError):
    """Session directory lacks a keyframe file that the graph references."""


class NoInterior(MapAnchorError):
    """Occupancy grid has no enclosed free region."""


class TooFewPoints(MapAnchorError):
    """Point set too small for the requested operation."""


class NoCorrespondences(MapAnchorError):
    """Registration found no point pairs within the correspondence gate."""


class SingularSystem(MapAnchorError):
    """Linear system is rank deficient beyond what damping can repair."""
