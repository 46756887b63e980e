"""Exception hierarchy shared by every adstest package.

Library code raises these; only the command layer catches them and turns them
into exit codes.
"""


class AdsTestError(Exception):
    """Base class for runtime failures (CLI exit code 2)."""


class ConfigError(AdsTestError):
    """Invalid or missing configuration (CLI exit code 1)."""


class CodecError(AdsTestError):
    """Malformed PPM/PGM data or out-of-range class index."""


class TrackError(AdsTestError):
    """Invalid track geometry or a point too far from the track."""


class SegmenterError(AdsTestError):
    pass


class AugmentationError(AdsTestError):
    """Augmentation precondition failed, e.g. a frame without ground-truth masks."""


class TransportError(AdsTestError):
    """Failure talking to a remote backend."""


class ConnectError(TransportError):
    pass


class TransportTimeout(TransportError):
    pass


class ProtocolError(TransportError):
    """Version mismatch, oversized or malformed frame, or a remote error reply."""


class CalibrationError(AdsTestError):
    pass


class DistillationError(AdsTestError):
    pass


class DistanceModelError(AdsTestError):
    pass


class MetricError(AdsTestError):
    pass


class UndefinedBaselineError(MetricError):
    """Relative metric requested against a nominal log whose denominator is zero."""


class BaselineError(AdsTestError):
    pass


class StaleBaselineError(BaselineError):
    """Cached baseline log no longer matches its recorded content hash."""


class BaselineMismatchError(BaselineError):
    """Baseline was recorded for a different agent, scenario or seed."""
