"""Exception types shared across the package."""


class SubaError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SubaError, ValueError):
    """Invalid design, prior, or study configuration."""


class CatalogSizeError(SubaError):
    """The requested (markers, rounds) combination would enumerate too many layouts."""


class DimensionMismatchError(SubaError, ValueError):
    """A biomarker vector has the wrong number of components."""


class InvalidPhaseError(SubaError):
    """Operation not allowed in the trial's current phase."""


class StalePosteriorError(SubaError):
    """A posterior snapshot no longer matches the trial data it is used against."""


class UnknownPatientError(SubaError, KeyError):
    """Referenced patient id was never enrolled."""


class DuplicateOutcomeError(SubaError):
    """An outcome was already recorded for this patient."""


class NonConvergenceError(SubaError):
    """Maximum-likelihood fit failed to converge (separation or iteration cap)."""


class DegenerateDesignError(SubaError):
    """Design matrix carries no usable information (empty or fully aliased)."""


class UndefinedSubsetError(SubaError, ValueError):
    """The scenario defines no truth subsets."""


class EmptyPostRunInError(SubaError):
    """No patients were treated after the run-in, so the response-rate summary is undefined."""


class NoDataError(SubaError):
    """Operation requires at least one enrolled patient or recorded outcome."""


class JournalError(SubaError):
    """Journal file is missing, corrupt, or fails replay verification."""
