"""Exceptions raised by the estimation pipeline."""


class DeconvolutionError(Exception):
    """Base class for pipeline failures (as opposed to bad input)."""


class NonFiniteResultError(DeconvolutionError):
    """A product factor divided by an exactly-zero ECF value."""

    def __init__(self, k, message=None):
        self.k = k
        super().__init__(message or f"zero denominator in product factor k={k}")


class DegenerateCutoffError(DeconvolutionError):
    """|g_n| fell below eps_n at the very first scan point."""


class DegenerateEstimateError(DeconvolutionError):
    """Density estimate is identically zero after clipping."""
