"""Exception hierarchy shared across the package.

The command line maps these onto exit codes: configuration problems exit
with 1, solver failures with 2, and I/O errors (plain ``OSError``) with 3.
"""


class MasersimError(Exception):
    """Base class for package errors."""


class ConfigError(MasersimError):
    """Invalid configuration, parameters, or input data shape."""


class SolverError(MasersimError):
    """A numerical routine failed to produce a trustworthy result."""


class FitError(SolverError):
    """Nonlinear least squares did not converge or was degenerate."""


class LabelAssignmentError(SolverError):
    """Hybridized eigenstates could not be labeled by product states."""


class MultipleSteadyStates(SolverError):
    """The Liouvillian null space is degenerate (multistability)."""
