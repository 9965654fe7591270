"""Exception hierarchy shared across the package.

Every error raised by hypescape derives from HypescapeError so callers can
catch the whole family with one clause.  The subclasses also inherit the
matching builtin (ValueError, RuntimeError) so generic handlers keep working.
"""


class HypescapeError(Exception):
    """Base class for all hypescape errors."""


class ConfigError(HypescapeError, ValueError):
    """Invalid configuration value (bad dimension, step rule, horizon, ...)."""


class DomainError(HypescapeError, ValueError):
    """Evaluation requested outside a function's domain (e.g. t below t0)."""


class EvaluationError(HypescapeError, ValueError):
    """A function value could not be produced (tabulated range exceeded,
    shifted boundary function nonpositive, ...)."""


class AdmissibilityError(HypescapeError, ValueError):
    """A boundary function failed its admissibility checks where a
    classification or envelope operation requires them."""


class WindowError(HypescapeError, ValueError):
    """A requested time window selects no grid points."""


class RootFindError(HypescapeError, RuntimeError):
    """The implicit step solver failed to converge; message carries the
    path index, step index and local step data."""
