"""Exception types shared across the package."""


class NpnsError(Exception):
    """Base class for all package errors."""


class ConfigError(NpnsError):
    """Invalid configuration: bad value, unknown key, unsatisfiable constraint."""


class InvalidFieldError(NpnsError):
    """A spectral field violates a structural invariant (symmetry, shape)."""


class SolvabilityError(InvalidFieldError):
    """Poisson right-hand side has a nonzero mean, so no periodic solution exists."""


class BlowUpError(NpnsError):
    """Integration produced NaN/Inf.

    Carries the time and step at which the blow-up was detected plus the
    diagnostic records accumulated so far.
    """

    def __init__(self, message, t, step, records=None):
        super().__init__(message)
        self.t = t
        self.step = step
        self.records = records if records is not None else []


class FitDomainError(NpnsError):
    """Decay-rate fit requested on data outside the fit domain (nonpositive values)."""


class ConditionError(NpnsError):
    """A mathematical hypothesis behind the requested computation does not hold."""


class CheckpointError(NpnsError):
    """Checkpoint file is malformed, truncated, or has an unsupported version."""
