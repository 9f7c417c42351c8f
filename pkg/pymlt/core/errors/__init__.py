"""
Exceptions raised by pymlt.

Every error raised on purpose by the package derives from ``MltError``; most
also derive from the builtin exception that describes them best, so callers
that only know about ``ValueError`` keep working.
"""


class MltError(Exception):
    """Base class of all pymlt errors"""
    pass


class ParseError(MltError, ValueError):
    """Raised when an input file line cannot be parsed"""

    def __init__(self, message, path=None, line_number=None):
        self.path = path
        self.line_number = line_number
        if line_number is not None:
            message = "%s:%s: %s" % (path, line_number, message)
        super(ParseError, self).__init__(message)


class LayerRangeError(ParseError):
    """Raised when a layer index is outside of [1, n_layers]"""
    pass


class ShapeError(MltError, ValueError):
    """Raised when array shapes or dimensions do not fit together"""
    pass


class DomainError(MltError, ValueError):
    """Raised when an argument is outside of the domain of an operation"""
    pass


class NumericError(MltError, ArithmeticError):
    """Raised when a loss or gradient stops being finite"""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        if self.diagnostics:
            details = ", ".join("%s=%s" % (key, self.diagnostics[key])
                                for key in sorted(self.diagnostics))
            message = "%s (%s)" % (message, details)
        super(NumericError, self).__init__(message)


class FitError(NumericError):
    """Raised when every restart of a fit diverged"""
    pass


class InsufficientNonEdgesError(MltError):
    """Raised when a layer has too few non-edges to draw a negative set"""
    pass


class ConfigError(MltError, ValueError):
    """Raised for invalid training, evaluation or analysis settings"""
    pass


class SpecError(MltError, ValueError):
    """Raised for an invalid synthetic network specification"""
    pass
