"""Exceptions raised when a numerical computation cannot be trusted."""

from __future__ import annotations


class NumericalError(RuntimeError):
    """Base class for numerical breakdowns (as opposed to bad input)."""


class EmptyRegionError(NumericalError):
    """A regular set, support or common domain came out empty."""


class ModeDisagreementError(NumericalError):
    """Two quadrature modes for the same integral disagree beyond tolerance."""


class UnboundedEnvelopeError(NumericalError):
    """A supremum diverges on its truncated search window."""


class CenteringError(NumericalError):
    """The centering search could not find a minimiser (non-coercive input)."""
