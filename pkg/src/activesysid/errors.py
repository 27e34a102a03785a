"""Exception types shared across the package."""


class ActiveSysIdError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(ActiveSysIdError):
    """An array argument has the wrong shape or length."""


class NonFiniteOutput(ActiveSysIdError):
    """A computation produced nan/inf (diverging rollout, degenerate parameters)."""


class SingularMatrix(ActiveSysIdError):
    """A matrix factorization failed, even after the single jitter retry."""


class SingularInnovation(ActiveSysIdError):
    """The filter innovation covariance is not invertible.

    Usually means the state noise is (near) zero while the parameter
    Jacobian is rank deficient.
    """


class SingularGain(ActiveSysIdError):
    """A feedback-gain solve failed for a degenerate parameter sample."""


class AllCandidatesInvalid(ActiveSysIdError):
    """Every sampled control sequence produced a non-finite cost."""


class ConfigError(ActiveSysIdError):
    """An experiment config file or override is invalid."""


class NoiseRegularizedWarning(UserWarning):
    """A singular noise covariance was bumped by a small ridge before use."""


class EstimatorVarianceWarning(UserWarning):
    """A Monte-Carlo estimate has a standard error above 10% of its magnitude."""
