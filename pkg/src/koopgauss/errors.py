"""Exception hierarchy used across koopgauss."""


class KoopgaussError(Exception):
    """Base class for all library errors."""


class DimensionError(KoopgaussError, ValueError):
    """Shapes of the inputs do not fit the operation."""


class DomainError(KoopgaussError, ValueError):
    """A scalar argument lies outside its admissible range (e.g. negative time)."""


class NotPSDError(KoopgaussError, ValueError):
    """A matrix expected to be positive (semi)definite is not."""


class IllPosedError(KoopgaussError, ValueError):
    """A linear matrix equation has no unique solution."""


class NotControllableError(KoopgaussError, ValueError):
    def __init__(self, rank: int, dim: int):
        self.rank = rank
        self.dim = dim
        super().__init__(f"(A, B) is not controllable: rank {rank} < {dim}")


class NotHurwitzError(KoopgaussError, ValueError):
    def __init__(self, eigenvalue: complex):
        self.eigenvalue = eigenvalue
        super().__init__(f"A is not Hurwitz: eigenvalue {eigenvalue} has Re >= 0")


class UnsupportedCaseError(KoopgaussError, ValueError):
    """The requested quantity is not well defined for this input."""


class SamplingError(KoopgaussError, RuntimeError):
    """The transition covariance is numerically singular."""


class CertificateFailedError(KoopgaussError):
    """The invariance certificate does not hold, so a bound is not justified."""

    def __init__(self, slack: float):
        self.slack = slack
        super().__init__(f"invariance certificate fails (slack {slack:.6g})")
