"""Exception types shared across the package."""


class HifbenchError(Exception):
    """Base class for package-specific errors."""


class ConfigurationError(HifbenchError):
    """A scenario, sampling, or grid setting violates a documented requirement."""


class SingularNetworkError(HifbenchError):
    """The requested operating point sits on a resonance pole (e.g. v = 0 with d = 0)."""


class SynchronizationError(HifbenchError):
    """Phasor streams do not share window boundaries and cannot be compared."""


class EstimationError(HifbenchError):
    """Network parameters cannot be estimated from the supplied phasors."""


class WaveformParseError(HifbenchError):
    """A waveform CSV file is malformed."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)
        self.row = row


class ScenarioParseError(HifbenchError):
    """A scenario/sweep file is malformed; carries the key path and line number."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        parts = [message]
        if key is not None:
            parts.append(f"key '{key}'")
        if line is not None:
            parts.append(f"line {line}")
        super().__init__(": ".join(parts) if len(parts) == 1 else f"{parts[0]} [{', '.join(parts[1:])}]")
        self.key = key
        self.line = line
