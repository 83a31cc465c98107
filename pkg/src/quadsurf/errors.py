"""Exception taxonomy shared across the package."""


class QuadSurfError(Exception):
    """Base class for all package errors."""


class IncompatibleFields(QuadSurfError):
    """Arithmetic attempted between scalars over different irrational fields."""


class ParseError(QuadSurfError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ValidationError(QuadSurfError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class PoleNotAllowed(QuadSurfError):
    pass


class OutsidePolygon(QuadSurfError):
    pass


class SegmentThroughConePoint(QuadSurfError):
    pass


class SelfIntersectingChain(QuadSurfError):
    pass


class SegmentEndsOffVertex(QuadSurfError):
    """A traced cut segment terminated somewhere other than a vertex."""


class NotInvolution(QuadSurfError):
    pass


class AlreadySquare(QuadSurfError):
    """Orientation double cover requested for a surface whose holonomy is already trivial."""


class DoesNotCommuteWithDeck(QuadSurfError):
    pass


class NoHyperellipticInvolution(QuadSurfError):
    pass


class NotHyperellipticInvariant(QuadSurfError):
    pass


class NotATorus(QuadSurfError):
    pass


class SlitsIntersect(QuadSurfError):
    pass


class InvariantPinFailure(QuadSurfError):
    """No candidate slit re-gluing satisfied the pinned stratum/holonomy/involution invariants."""


class BadParameters(QuadSurfError):
    pass


class PathThroughWeierstrass(QuadSurfError):
    pass


class WrongStratum(QuadSurfError):
    pass


class ZeroesNotWeierstrass(QuadSurfError):
    pass


class BoundTooLarge(QuadSurfError):
    pass


class SurfaceHasBoundary(QuadSurfError):
    """Operation requires a closed surface but gluing is incomplete."""
