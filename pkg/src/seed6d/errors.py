"""Exception types shared across the package."""


class Seed6dError(Exception):
    """Base class for all seed6d errors."""


class GimbalLockError(Seed6dError):
    """Pitch too close to +-pi/2 for the gimbal parametrization."""


class OutOfRangeError(Seed6dError):
    """Requested value lies outside the valid domain of a map."""


class NoConvergenceError(Seed6dError):
    """An iterative solver failed to converge within its budget."""


class NoContactError(Seed6dError):
    """Contact patch below the minimum pixel count."""


class DegeneratePatchesError(Seed6dError):
    """Left/right contact patches coincide; no frame can be built."""


class DegenerateFrameError(Seed6dError):
    """Patch axis orientation admits no zero-pitch frame."""


class InsufficientFlowError(Seed6dError):
    """Too few valid flow cells to estimate rotation."""


class ConfigError(Seed6dError):
    """Scenario configuration failed validation."""
