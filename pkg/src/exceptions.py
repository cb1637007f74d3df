from typing import List, Optional, Tuple


class AisBoundError(Exception):
    """Base class for errors raised by the verification engines."""


class SupportCapExceeded(AisBoundError):
    def __init__(self, required: int, cap: int, what: str = "joint support"):
        self.required = required
        self.cap = cap
        super().__init__(f"{what} needs {required} states but the support cap is {cap}; rerun with --cap {required}")


class NonDegeneracyError(AisBoundError):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"no channel realization with all square-submatrix determinants above the floor within {budget} resamples")


class InstanceValidationError(AisBoundError):
    def __init__(self, errors: List[str], violation: Optional[Tuple[int, int, int]] = None):
        self.errors = errors
        self.violation = violation
        super().__init__("; ".join(errors))


class CertificateError(AisBoundError):
    """Premises of a certificate do not share one term dictionary."""
