"""Exception hierarchy shared across the toolkit."""


class PdpError(Exception):
    """Base class for all toolkit errors."""


class NonPlanarError(PdpError):
    """Rotation data fails the Euler check, or the planarity test rejects."""


class MalformedRotationError(PdpError):
    """A dart is missing, duplicated, or listed at the wrong vertex."""


class ParseError(PdpError):
    """Syntactically invalid instance/solution/flow text."""


class ValidationError(PdpError):
    """Semantically invalid data (terminal overlap, bad ids, non-planar input)."""


class InvalidTerminalError(ValidationError):
    """Generator was given terminals that are out of range or coincide."""


class InvalidSolutionError(PdpError):
    """A solution object fails verification where a valid one is required."""


class SizeLimitExceededError(PdpError):
    """Exact decomposition requested beyond its configured size cap."""


class ResourceLimitError(PdpError):
    """A solver exceeded its configured state or memory budget."""


class BudgetExceededError(PdpError):
    """Brute-force search exceeded its node budget."""


class DisconnectedError(PdpError):
    """Terminals are not mutually reachable where a connecting tree is required."""


class PathTooShortError(PdpError):
    """A degree-2 tree path is too short for the requested cut distances."""
