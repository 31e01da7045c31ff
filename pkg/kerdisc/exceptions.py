from typing import Optional


class DiscrepancyException(Exception):
    """Error carrying the process exit code the command line reports for it."""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


class InvalidArgumentError(DiscrepancyException):
    exit_code = 2


class UnsupportedOperationError(DiscrepancyException):
    exit_code = 2


class ParseError(DiscrepancyException):
    exit_code = 3


class RangeError(DiscrepancyException):
    exit_code = 4


class NumericalError(DiscrepancyException):
    exit_code = 4


class DivergenceError(NumericalError):
    def __init__(self, detail: str, step: int):
        super().__init__(detail)
        self.step = step


class SelfTestFailure(DiscrepancyException):
    exit_code = 1
