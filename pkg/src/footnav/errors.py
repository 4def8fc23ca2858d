"""Exception hierarchy for the footnav package.

Every error raised on a contract violation derives from :class:`FootnavError`
so callers can catch the whole family at the pipeline boundary.
"""


class FootnavError(Exception):
    """Base class for all footnav errors."""


# --- geometry -------------------------------------------------------------

class NotARotation(FootnavError):
    """Matrix could not be projected onto a proper rotation."""


# --- mechanization --------------------------------------------------------

class NonMonotonicTime(FootnavError):
    """Sample timestamps do not strictly increase."""


class GapTooLarge(FootnavError):
    """Time step exceeds the dropped-sample guard."""


class NotStationary(FootnavError):
    """Window used for leveling fails the stationarity checks."""


# --- detectors ------------------------------------------------------------

class LengthMismatch(FootnavError):
    """Two per-sample sequences differ in length."""


class EmptyWindow(FootnavError):
    """Detector window contains no samples."""


# --- estimator ------------------------------------------------------------

class DivergedFilter(FootnavError):
    """Error state left its first-order validity region or P lost PSD."""


class SingularPrediction(FootnavError):
    """Predicted covariance is too ill-conditioned to invert."""


# --- fusion ---------------------------------------------------------------

class EmptyPath(FootnavError):
    """Planar path contains no points."""


class OutOfRange(FootnavError):
    """Interpolation grid leaves the trajectory's time span."""


class StepOffGrid(FootnavError):
    """Step start time does not coincide with any trajectory timestamp."""


# --- dataset_io -----------------------------------------------------------

class MalformedFolderName(FootnavError):
    """Experiment folder name does not follow date_time_identifier."""


class MissingReference(FootnavError):
    """Experiment has no usable reference (foot IMU) data."""


class ColumnCountMismatch(FootnavError):
    """Sensor CSV row has the wrong number of columns for its kind."""


class NonMonotonicTimestamps(FootnavError):
    """Sensor CSV timestamps do not strictly increase."""


class MissingSyncKey(FootnavError):
    """meta.txt lacks the key required for time synchronization."""


class IoFailure(FootnavError):
    """Reference output files could not be written."""


# --- verification ---------------------------------------------------------

class NoStandstill(FootnavError):
    """Trajectory has no standstill window to anchor against."""


class InfeasibleGait(FootnavError):
    """Synthetic gait parameters are mutually inconsistent."""


class TooShort(FootnavError):
    """Signal is too short for the requested analysis."""
