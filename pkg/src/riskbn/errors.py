"""Exception types shared across the engine."""


class RiskBnError(Exception):
    """Base class for all engine errors."""


class DuplicateId(RiskBnError):
    pass


class UnknownNode(RiskBnError):
    pass


class CycleDetected(RiskBnError):
    pass


class ValidationFailed(RiskBnError):
    """Raised when an operation requires a well-formed model and validation found problems."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(str(f) for f in self.findings) or "validation failed")


class BadSupport(RiskBnError):
    pass


class BadCount(RiskBnError):
    pass


class UnnormalizedPosterior(RiskBnError):
    pass


class UnsupportedCombination(RiskBnError):
    """A CPD cannot place its mass on the child's state space (e.g. value outside support)."""


class ImpossibleEvidence(RiskBnError):
    """Evidence has zero joint probability under the model."""


class DegenerateWeights(RiskBnError):
    """Likelihood weighting collapsed: effective sample size too small to trust."""


class InvalidConfig(RiskBnError):
    pass


class EmptyScenario(RiskBnError):
    pass


class BadProbability(RiskBnError):
    pass


class OutOfRange(RiskBnError):
    pass
