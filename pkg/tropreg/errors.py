"""Exceptions raised by tropreg.

All of them derive from ``ValueError``: every failure the package reports is a
property of the input data, never of the environment.
"""


class TropregError(ValueError):
    pass


class DimensionMismatchError(TropregError):
    pass


class NotExtendedRealError(TropregError):
    """NaN or +inf where an element of R u {-inf} is required."""


class PositiveCycleMeanError(TropregError):
    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(
            f"Kleene star does not exist: closure diagonal entry {index} is {value!r} > 0"
        )


class InfeasiblePatternError(TropregError):
    pass


class InfeasibleReductionError(TropregError):
    pass


class AllMinusInfRowError(TropregError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"Row {row} of the system matrix has no finite entry")


class ParseError(TropregError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SetCoverError(TropregError):
    pass
