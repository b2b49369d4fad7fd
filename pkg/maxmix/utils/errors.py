# maxmix 📈, AGPL-3.0 license

from maxmix.utils import emojis


class MaxMixError(Exception):
    """Base class for maxmix errors. `exit_code` is what the CLI exits with when the error reaches it."""
    exit_code = 1

    def __init__(self, message=''):
        super().__init__(emojis(message))


class ConfigError(MaxMixError):
    """Invalid configuration, i.e. unknown keys, wrong types or a rejected window family."""
    exit_code = 2


class ContractError(MaxMixError):
    """A precondition of an operation does not hold, i.e. missing shifted sites or overlapping site sets."""
    exit_code = 2


class NumericalError(MaxMixError):
    exit_code = 3


class ModelError(NumericalError):
    """Covariance matrix of the Gaussian increments is not positive semi-definite after jitter."""
    pass


class EstimatorError(NumericalError):
    """An estimator is undefined on the given sample."""
    pass


class SeriesError(NumericalError):
    """A lattice series does not decay fast enough to be truncated."""
    pass


class BracketError(NumericalError):
    """No bracket around the minimiser of a variance profile could be found."""

    def __init__(self, message='', profile=None):
        super().__init__(message)
        self.profile = profile or {}


class ReplicationError(NumericalError):
    """Too few usable replicates."""
    pass


class AcceptanceError(MaxMixError):
    """A verification run finished but failed its acceptance criteria."""
    exit_code = 4
