"""Exception hierarchy shared by all uiobank modules."""


class UioBankError(Exception):
    """Base class for every error raised by this package."""


class InvalidMatrixError(UioBankError, ValueError):
    pass


class DimensionError(UioBankError, ValueError):
    pass


class SynthesisInfeasibleError(UioBankError):
    pass


class NumericError(UioBankError, ArithmeticError):
    pass


class CertificateUnavailableError(UioBankError):
    pass


class NoCompleteUioError(SynthesisInfeasibleError):
    """Condition c1 fails: rank(CB) != rank(B) or B lacks full column rank."""


class ConditionC2Error(SynthesisInfeasibleError):
    """The pair ((I - EC)A, C) is not detectable for E = B (CB)^+."""


class RankConditionError(SynthesisInfeasibleError):
    """Condition c3 fails for the requested column subset."""


class ConditionC4Error(SynthesisInfeasibleError):
    """Detectability fails for the partial design of a column subset."""


class BankInfeasibleError(SynthesisInfeasibleError):
    def __init__(self, subset, cause):
        self.subset = tuple(subset)
        self.cause = cause
        label = "{" + ",".join(str(i + 1) for i in self.subset) + "}"
        super().__init__(f"no partial UIO for actuator subset {label}: {cause}")


class SafetyStopError(UioBankError):
    """More actuators were isolated than the protection level allows."""


class ScenarioError(UioBankError, ValueError):
    pass
