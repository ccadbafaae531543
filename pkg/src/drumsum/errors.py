"""Exception types shared across the package."""

from __future__ import annotations


class DrumsumError(Exception):
    """Base class for all errors raised by drumsum."""


class DomainError(DrumsumError, ValueError):
    """An argument lies outside the domain of the function."""


class InvalidIndexError(DrumsumError, ValueError):
    """A mode index is not valid for the requested boundary family."""


class DiagonalPointError(DrumsumError, ValueError):
    """Green's function requested at coincident points (log singularity)."""


class NonConvergenceError(DrumsumError, RuntimeError):
    """A truncated series did not reach its tolerance within budget."""


class BracketError(DrumsumError, RuntimeError):
    """A sign-change scan did not produce the requested number of roots."""


class IncompleteSpectrumError(DrumsumError, RuntimeError):
    """An enumerated spectrum failed its completeness certificate."""


class OrderError(DrumsumError, ValueError):
    """Unsupported order (sum-rule order, diagram order or integral dimension)."""
