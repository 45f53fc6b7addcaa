"""Exception hierarchy.

``DataError`` subclasses describe bad input data (the CLI maps them to exit
code 2); ``ConfigError`` subclasses describe bad parameters.
"""


class EvShiftError(Exception):
    """Base class for all package errors."""


class DataError(EvShiftError):
    pass


class ConfigError(EvShiftError, ValueError):
    pass


class EmptyStreamError(DataError):
    pass


class InvalidWindowError(ConfigError):
    pass


class FormatError(DataError):
    pass


class BoundsError(DataError):
    pass


class InvalidConfigError(ConfigError):
    pass


class ImageLargerThanCanvasError(ConfigError):
    pass


class InvalidAngleError(ConfigError):
    pass


class ZeroLastTimestampError(DataError):
    pass


class DimMismatchError(DataError):
    pass


class InvalidDistributionError(DataError):
    pass


class EmptyDatasetError(DataError):
    pass


class NotADirectoryDatasetError(DataError):
    pass
