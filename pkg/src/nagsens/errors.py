"""Exception hierarchy for the nagsens package.

Every failure mode that callers are expected to branch on gets its own class;
the CLI maps these onto exit codes (see :mod:`nagsens.cli`).
"""

from __future__ import annotations


class NagsensError(Exception):
    """Base class for all package-specific errors."""

    #: short machine-readable tag used in CLI error objects
    kind = "error"


class DimensionError(NagsensError):
    """An array argument has the wrong shape for the declared game."""

    kind = "dimension"


class ConfigurationError(NagsensError):
    """Invalid option combination (bad tolerances, missing sampling box, ...)."""

    kind = "configuration"


class ValidationError(NagsensError):
    """A config document failed schema validation.

    Carries the full list of "path: message" strings so callers can report
    every problem at once instead of the first one found.
    """

    kind = "validation"

    def __init__(self, problems, summary="config validation failed"):
        self.problems = list(problems)
        super().__init__(
            f"{summary}:\n" + "\n".join(f"  - {p}" for p in self.problems)
        )


class ModelViolationError(NagsensError):
    """A cost model broke one of its structural promises (e.g. a player's
    own-strategy Hessian is not positive definite)."""

    kind = "model_violation"

    def __init__(self, message, player=None):
        self.player = player
        if player is not None:
            message = f"player {player}: {message}"
        super().__init__(message)


class InfeasibleSetError(NagsensError):
    """A polyhedral strategy set is empty.

    ``certificate`` (when available) holds a Farkas-style dual vector
    proving infeasibility.
    """

    kind = "infeasible"

    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class NonConvergenceError(NagsensError):
    """The fixed-point iteration exhausted its budget.

    The last residual is attached so callers can decide whether the answer
    is close enough for their purpose anyway.
    """

    kind = "non_convergence"

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class StepTooLargeError(NagsensError):
    """Residual blow-up detected with a user-pinned step size."""

    kind = "step_too_large"


class ConstraintQualificationError(NagsensError):
    """The active constraints at the equilibrium fail the regularity needed
    for a well-defined equilibrium derivative.

    ``report`` is the :class:`~nagsens.sensitivity.ActiveSetReport` that
    triggered the refusal.
    """

    kind = "cq_violation"

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class IllConditionedError(NagsensError):
    """A linear system in the sensitivity computation is numerically rank
    deficient (condition estimate above the refusal threshold)."""

    kind = "ill_conditioned"


class UnsupportedRegimeError(NagsensError):
    """The requested analysis is outside its domain of validity (wrong sign
    conventions, nonzero interaction diagonal for the spectral certificate,
    ...)."""

    kind = "unsupported_regime"
