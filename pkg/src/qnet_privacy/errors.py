"""Exception types raised by the library."""


class ArgumentError(ValueError):
    """Invalid argument: wrong shape, out-of-range value, broken invariant."""


class UnsupportedEncoding(TypeError):
    """Operation not defined for the encoding variant it was given."""
