"""Exception hierarchy shared by every subpackage."""


class OfqrError(Exception):
    """Base class for all errors raised by ofqr."""


# qr codec
class PayloadTooLong(OfqrError, ValueError):
    pass


class NonAsciiByte(OfqrError, ValueError):
    pass


class WrongLength(OfqrError, ValueError):
    pass


class DecodeError(OfqrError):
    """A grid could not be turned back into a payload."""


class Uncorrectable(DecodeError):
    pass


class FormatInfoInvalid(DecodeError):
    pass


class StructureInvalid(DecodeError):
    pass


class DegenerateImage(DecodeError, ValueError):
    pass


# optics
class NonpositiveGap(OfqrError, ValueError):
    pass


class ObjectIntersectsSensor(OfqrError, ValueError):
    pass


class BudgetExceeded(OfqrError, MemoryError):
    pass


# inversion
class NoConvergence(OfqrError, RuntimeError):
    pass


class DimensionMismatch(OfqrError, ValueError):
    pass


class GeometryMismatch(OfqrError, ValueError):
    pass


# network / metrics
class ShapeMismatch(OfqrError, ValueError):
    pass


class StaleCache(OfqrError, RuntimeError):
    pass


class EmptySet(OfqrError, ValueError):
    pass


class LengthMismatch(OfqrError, ValueError):
    pass


class ImageSmallerThanWindow(OfqrError, ValueError):
    pass


class FormatError(OfqrError, ValueError):
    """A serialized file does not match its declared layout."""
