"""Exception hierarchy shared across the package."""


class WfvarError(Exception):
    """Base class for all package errors."""


class LuminalVelocity(WfvarError):
    """Three-velocity at or above the speed of light (c = 1)."""


class OutOfRange(WfvarError):
    """Parameter outside a trajectory's node span."""


class EndpointViolation(WfvarError):
    """Perturbation does not vanish at a required endpoint."""


class EndpointPerturbed(WfvarError):
    """Direction field nonzero at a delta-integral interval endpoint."""


class LayoutMismatch(WfvarError):
    """Perturbation node layout differs from the trajectory it perturbs."""


class RootNotBracketed(WfvarError):
    """Lightcone root does not lie inside the partner's parameter span."""


class NearLuminalJacobian(WfvarError):
    """Lightcone Jacobian below the singularity guard; denominators diverge."""


class InvalidEHBC(WfvarError):
    """Boundary data violates the exchange-of-history construction."""


class SuperluminalOrbit(WfvarError):
    """Operation requires a subluminal trajectory."""


class NonIntegerPowerOfNegative(WfvarError):
    """Non-integer kinetic exponent applied to a superluminal segment."""


class ArcTooShort(WfvarError):
    """Requested circular arc leaves no interior span after history cuts."""


class ChainEscaped(WfvarError):
    """Sewing-chain hop left all admissible spans."""


class NoConvergence(WfvarError):
    """Iteration budget exhausted before reaching tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SuperluminalStep(WfvarError):
    """Solver produced a superluminal iterate despite the step cap (internal bug)."""


class ConfigError(WfvarError):
    """Invalid run configuration."""
