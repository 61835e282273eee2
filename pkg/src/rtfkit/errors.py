"""Exception hierarchy shared by all rtfkit modules."""


class RtfkitError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RtfkitError, ValueError):
    """Invalid configuration value or combination of values."""


class ShapeError(RtfkitError, ValueError):
    """Array dimensions do not match what an operation expects."""


class NotHermitianError(RtfkitError, ValueError):
    pass


class NotPositiveDefiniteError(RtfkitError, ValueError):
    pass


class SingularError(RtfkitError, ValueError):
    pass


class DegenerateError(RtfkitError, ArithmeticError):
    """A normalization denominator or iterate collapsed to (numerical) zero.

    Online callers usually catch this and keep the previous estimate.
    """


class GeometryError(RtfkitError, ValueError):
    pass


class GenerationError(RtfkitError, RuntimeError):
    pass


class MixError(RtfkitError, ValueError):
    pass


class InitError(RtfkitError, ValueError):
    pass
