"""Exception hierarchy.

Three families map onto CLI exit codes: :class:`InputError` (2),
:class:`NumericError` (3) and :class:`ConfigError` (4).
"""


class HierCorrError(Exception):
    exit_code = 1


class InputError(HierCorrError):
    exit_code = 2


class NumericError(HierCorrError):
    exit_code = 3


class ConfigError(HierCorrError):
    exit_code = 4


# input problems
class DimensionTooSmall(InputError):
    pass


class ZeroVarianceColumn(InputError):
    def __init__(self, column, label=None):
        self.column = column
        self.label = label
        name = f"{column}" if label is None else f"{column} ({label})"
        super().__init__(f"column {name} has zero variance")


class DimensionMismatch(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)


class RaggedRows(ParseError):
    pass


class NonNumericCell(ParseError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class InsufficientSamples(InputError):
    pass


class InsufficientReplicas(InputError):
    pass


# numerical failures
class NotPositiveDefinite(NumericError):
    pass


class ConvergenceFailure(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class QuadratureFailure(NumericError):
    pass


class MleFailure(NumericError):
    def __init__(self, message, column=None):
        self.column = column
        super().__init__(message)


class DegenerateReplica(NumericError):
    pass


class UnsupportedNegativeStructure(NumericError):
    pass


# bad parameters
class InvalidMu(ConfigError):
    pass


class AlphaOutOfRange(ConfigError):
    pass


class QBelowOne(ConfigError):
    pass
