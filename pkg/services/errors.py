class ToolkitError(Exception):
    """Base class for every error the toolkit raises on bad input or state."""


class ConfigError(ToolkitError):
    pass


class InvalidRegimeError(ToolkitError):
    pass


class DomainError(ToolkitError):
    pass


class EmptyInputError(ToolkitError):
    pass


class InsufficientPointsError(ToolkitError):
    pass


class DegenerateRangeError(ToolkitError):
    pass


class InsufficientSamplesError(ToolkitError):
    pass


class InsufficientSpanError(ToolkitError):
    pass


class StreamMismatchError(ToolkitError):
    pass


class NonFiniteStateError(ToolkitError):
    def __init__(self, step: int, h: float, z: float):
        super().__init__(f"Non-finite state at step {step} (h={h}, z={z}); reduce sde_dt")
        self.step = step


class ParseError(ToolkitError):
    def __init__(self, path: str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
