"""Exception hierarchy.

Each family maps onto one CLI exit code: data problems exit with 2,
numeric or degenerate problems with 3.
"""

from __future__ import annotations


class SentloopError(Exception):
    exit_code = 1


class DataError(SentloopError, ValueError):
    exit_code = 2


class SchemaError(DataError):
    """Header row missing or not matching the corpus schema."""


class EmptyInputError(DataError):
    """The input stream holds no rows at all (not even a header)."""


class EmptySubjectError(DataError):
    pass


class InsufficientObservations(DataError):
    def __init__(self, n_rows: int, required: int):
        super().__init__(f"insufficient observations: {n_rows} usable rows, need {required}")
        self.n_rows = n_rows
        self.required = required


class NumericError(SentloopError, ArithmeticError):
    exit_code = 3


class RankDeficientError(NumericError):
    def __init__(self, condition_number: float):
        super().__init__(f"regressor matrix is rank deficient (condition number {condition_number:.3g})")
        self.condition_number = condition_number


class ZeroVarianceError(NumericError):
    pass


class CollinearityError(NumericError):
    def __init__(self, regressor: str):
        super().__init__(f"perfect collinearity: {regressor} is a linear combination of the others")
        self.regressor = regressor


class DegeneratePopulationError(NumericError):
    pass
