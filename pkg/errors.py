# errors.py
"""Gerarchia di errori del toolkit.

InputError  -> precondizione violata dal chiamante (ValueError).
NumericalError -> patologia numerica o budget non sostenibile (RuntimeError).
"""


class FreeFermionError(Exception):
    pass


class InputError(FreeFermionError, ValueError):
    pass


class NumericalError(FreeFermionError, RuntimeError):
    pass


# -------- skewlin --------
class OddRestriction(InputError):
    pass

class IndexOutOfRange(InputError):
    pass

class UnsupportedP(InputError):
    pass

class RankTooLarge(InputError):
    pass

class DimensionMismatch(InputError):
    pass

class NotAntisymmetric(InputError):
    pass

class ConvergenceFailure(NumericalError):
    pass


# -------- gaussian --------
class NotAValidCorrelationMatrix(InputError):
    pass

class LambdaOutOfRange(InputError):
    pass

class NotOrthogonal(InputError):
    pass

class OddSubset(InputError):
    pass

class NotPure(InputError):
    pass

class RankExponentOutOfRange(InputError):
    pass

class NotHermitian(InputError):
    pass

class OccupationOutOfRange(InputError):
    pass


# -------- dense --------
class TooManyModes(InputError):
    pass

class NonNegligibleImaginaryPart(NumericalError):
    pass


# -------- sampler / algorithms --------
class InvalidMatching(InputError):
    pass

class BudgetOverflow(NumericalError):
    def __init__(self, requested: int, cap: int):
        super().__init__(f"shot budget {requested} exceeds cap {cap}")
        self.requested = requested
        self.cap = cap

class InfeasibleThresholds(InputError):
    pass

class TooManyLocalModes(InputError):
    pass

class PromiseNotCertified(NumericalError):
    pass

class ConfigError(InputError):
    pass
