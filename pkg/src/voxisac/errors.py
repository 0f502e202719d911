"""Exception types shared across the package."""


class VoxisacError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(VoxisacError):
    """A run configuration is inconsistent or out of range."""


class GeometryError(VoxisacError):
    """Degenerate geometry (coincident points, grid too small, ...)."""


class FitError(VoxisacError):
    """Distribution fitting failed to converge."""


class ShapeError(VoxisacError):
    """Matrix/vector dimensions do not match the model."""


class DivergenceError(VoxisacError):
    """Message passing produced non-finite values.

    Carries the iteration index and a short description of which message
    tensor diverged, to make Monte-Carlo failures diagnosable.
    """

    def __init__(self, iteration: int, detail: str):
        self.iteration = iteration
        self.detail = detail
        super().__init__(f"non-finite message at iteration {iteration}: {detail}")
