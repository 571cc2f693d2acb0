"""Exception types raised by the isothermic package."""


class IsothermicError(Exception):
    """Base class for all errors raised by this package."""


class ZeroDivisor(IsothermicError, ZeroDivisionError):
    """A quaternion that must be inverted is (numerically) zero."""


class TransformBlowUp(IsothermicError):
    """A Darboux transform passes through infinity at ``vertex``."""

    def __init__(self, vertex, message=None):
        self.vertex = vertex
        super().__init__(message or f"transform passes through infinity at vertex {vertex}")


class NotPeriodic(IsothermicError, ValueError):
    pass


class Degenerate(IsothermicError, ValueError):
    pass


class TanPole(IsothermicError, ValueError):
    """k / (rho M) = 1/2 puts the resonance formula on a pole of tan."""


class NonRealS(IsothermicError, ValueError):
    """1 - 4 nu alpha < 0, so the closed-form circle solutions do not apply."""


class NotIsothermic(IsothermicError, ValueError):
    pass


class FlatnessViolation(IsothermicError):
    def __init__(self, quad, residual):
        self.quad = quad
        self.residual = residual
        super().__init__(f"Riccati propagation inconsistent on quad {quad} (residual {residual:.3e})")


class NoBianchiQuad(IsothermicError, ValueError):
    pass


class NegativeNuRequired(IsothermicError, ValueError):
    pass


class ImaginaryC2(IsothermicError, ValueError):
    pass


class NoMatching(IsothermicError, ValueError):
    pass


class NoRoot(IsothermicError, ValueError):
    pass


class CmcWindowViolated(IsothermicError, ValueError):
    pass


class PoleHit(IsothermicError, ValueError):
    def __init__(self, vertex):
        self.vertex = vertex
        super().__init__(f"vertex {vertex} sits on the stereographic pole -1")


class ParseError(IsothermicError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
