"""Exception types raised across the toolkit."""


class FuseSpihtError(Exception):
    """Base class for every error raised by this package."""


class ParseError(FuseSpihtError, ValueError):
    pass


class UnsupportedFormat(FuseSpihtError, ValueError):
    pass


class IoError(FuseSpihtError, OSError):
    pass


class ShapeError(FuseSpihtError, ValueError):
    pass


class RangeError(FuseSpihtError, ValueError):
    pass


class ArgumentError(FuseSpihtError, ValueError):
    pass


class BudgetTooSmall(FuseSpihtError, ValueError):
    pass


class FormatError(FuseSpihtError, ValueError):
    """Bitstream header is not a valid RMS1 header."""


class TruncationError(FuseSpihtError, ValueError):
    """Payload holds fewer bits than the header announces."""


class NumericalUnderflow(FuseSpihtError, ArithmeticError):
    pass


class EmptyMask(FuseSpihtError, ValueError):
    pass
