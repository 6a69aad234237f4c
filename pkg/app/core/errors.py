"""Exception hierarchy shared by services, the CLI and the API"""


class BenchmarkError(Exception):
    """Base class for every error raised by the harness"""


class ArgumentError(BenchmarkError, ValueError):
    """A precondition on an argument was violated"""


class StateError(BenchmarkError, RuntimeError):
    """An operation was called in a state that cannot support it"""


class DataError(BenchmarkError, ValueError):
    """Input data (transform files, result tables) is malformed or incomplete"""


class ConfigError(BenchmarkError, ValueError):
    """An experiment configuration cannot be satisfied"""
