"""Exception taxonomy shared across the package.

Input problems are ValueError subclasses so that callers (and the CLI,
which maps them to exit code 2) can catch them uniformly; numerical
breakdowns are kept separate (CLI exit code 3).
"""


class SizeLimitError(ValueError):
    """Requested combinatorial size exceeds the supported guard rail."""


class InvalidProbeError(ValueError):
    """Probe violates the per-subsystem orthogonality/disjointness rules."""


class NonNormalizableError(ValueError):
    """State kernel has no finite squared norm."""


class UnsupportedStructureError(ValueError):
    """Kernel structure outside what the closed-form engines cover."""


class BracketError(ValueError):
    """Threshold bracket does not enclose a sign change."""


class InconsistentTableError(ValueError):
    """Observable table is not realizable by any positive state."""


class NumericalFailureError(RuntimeError):
    """Quadrature did not converge within its evaluation budget."""
