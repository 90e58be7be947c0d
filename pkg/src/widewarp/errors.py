"""Exception types shared across the toolkit."""


class WidewarpError(Exception):
    """Base class for all widewarp errors."""


class DimensionMismatch(WidewarpError):
    """Operands do not share the required raster dimensions."""


class NonInvertibleModel(WidewarpError):
    """Radial distortion polynomial is not monotone on the requested raster."""


class DomainError(WidewarpError):
    """Requested mapping leaves the valid domain (e.g. view angle >= 90 deg)."""


class SolverDiverged(WidewarpError):
    """Conjugate gradient failed to converge within the iteration cap."""


class FlippedQuad(WidewarpError):
    """Mesh contains an inverted quad where inversion must be unambiguous."""


class StageFailure(WidewarpError):
    """A pipeline stage producer failed; the cause carries the original error."""


class DegenerateLine(WidewarpError):
    """Polyline has zero arc length."""


class DegenerateReference(WidewarpError):
    """Reference line endpoints coincide; slope is undefined."""


class ZeroVector(WidewarpError):
    """A landmark coincides with the nose anchor; direction is undefined."""


class IdMismatch(WidewarpError):
    """Result and reference annotation sets do not pair up item by item."""


class InvalidRecord(WidewarpError):
    """Dataset record violates its warp-consistency invariants."""


class CorruptRecord(WidewarpError):
    """Persisted record or flow file fails its format contract."""
