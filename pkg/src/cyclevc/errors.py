"""Exception hierarchy shared by all cyclevc modules.

Input-side problems (bad data, bad configuration, malformed files, mismatched
pairings) map to CLI exit code 1; anything else that escapes is an internal
error and maps to exit code 2.
"""


class CycleVCError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CycleVCError):
    """Invalid input data (empty sets, out-of-contract values)."""


class ConfigError(CycleVCError):
    """Invalid configuration (unsupported sample rate, bad knob value, unknown key)."""


class FormatError(InputError):
    """Malformed on-disk artifact (feature file, checkpoint, manifest)."""


class ShapeError(InputError):
    """Array dimensionality or length does not match the operation's contract."""


class PairingError(InputError):
    """Utterance sets cannot be paired (missing ids, temporal mismatch)."""


class TrainingError(CycleVCError):
    """Optimization aborted (non-finite loss); carries epoch/utterance diagnostics."""
