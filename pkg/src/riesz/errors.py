"""Exception types shared across the package."""


class KernelSingularityError(ValueError):
    """Two points coincide (or nearly so), so the kernel blows up.

    ``pair`` holds the offending indices when they are known.
    """

    def __init__(self, message="kernel singularity", pair=None, t=None):
        if pair is not None:
            message = f"{message}: points {pair[0]} and {pair[1]} collide"
        if t is not None:
            message = f"{message} (at t={t!r})"
        super().__init__(message)
        self.pair = pair
        self.t = t


class NoPositiveDirectionError(RuntimeError):
    """Search for a tangent direction with positive second variation failed."""


class CertificateMismatchError(ValueError):
    """A certificate does not belong to the configuration it is checked on."""


class NotCriticalError(ValueError):
    """Classification was requested at a point whose gradient is not small."""
