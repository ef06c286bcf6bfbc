"""Exception types raised across the package."""


class RotorCTError(Exception):
    """Base class for all package errors."""


class DegenerateEigenvectors(RotorCTError):
    """Eigenvalues coincide and the eigenvector pairing cannot be normalized."""


class OutOfDomain(RotorCTError):
    pass


class PhiZero(RotorCTError):
    """The combined rotation variable vanishes, so the invariants are undefined."""


class SupercriticalData(RotorCTError):
    """Operation requires subcritical data (positive threshold indicator)."""


class MaxStepsExceeded(RotorCTError):
    pass


class InconsistentInitialPair(RotorCTError):
    pass


class NotEquilibrium(RotorCTError):
    pass


class DegenerateOrbit(RotorCTError):
    pass


class SingularJacobian(RotorCTError):
    pass


class NoConvergence(RotorCTError):
    pass


class TailMassExceeded(RotorCTError):
    pass


class CFLViolation(RotorCTError):
    pass


class ConfigInvalid(RotorCTError):
    """Scenario config failed validation; ``where`` names the field or line."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
