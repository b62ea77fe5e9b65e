from typing import Optional


class ReEncoderError(Exception):
    """
    Base class for every error raised by the library.
    """


class DimensionError(ReEncoderError, ValueError):
    pass


class NonFiniteError(ReEncoderError, ValueError):
    pass


class SampleRateError(ReEncoderError, ValueError):
    pass


class EmptyInputError(ReEncoderError, ValueError):
    pass


class UnsupportedStreamCountError(ReEncoderError, ValueError):
    pass


class SequenceTooShortError(ReEncoderError, ValueError):
    pass


class LatentFormatError(ReEncoderError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConfigError(ReEncoderError, ValueError):
    def __init__(self, key: str, message: Optional[str] = None):
        super().__init__(f"{key}: {message}" if message else key)
        self.key = key


class ArtifactMismatchError(ReEncoderError):
    pass


class DataError(ReEncoderError):
    pass


class NonFiniteLossError(ReEncoderError, ArithmeticError):
    def __init__(self, term: str, value: float, step: int):
        super().__init__(f"loss term {term!r} is {value} at step {step}")
        self.term = term
        self.value = value
        self.step = step
