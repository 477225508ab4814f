"""Exception types shared across the package."""


class FsiError(Exception):
    """Base class for solver errors."""


class SingularMatrixError(FsiError):
    """A matrix required to be invertible has zero determinant."""


class CompatibilityError(FsiError):
    """Initial data violate a compatibility condition beyond tolerance."""


class FluxImbalance(FsiError):
    """The divergence problem for the derived initial data is infeasible."""


class NonContraction(FsiError):
    """A fixed-point iteration produced non-decreasing increments."""


class WindowCollapse(FsiError):
    """Time-window shrinking reduced the window below one time step."""

    def __init__(self, message, ratios=None):
        super().__init__(message)
        self.ratios = list(ratios) if ratios is not None else []


class DegenerateDeformation(FsiError):
    """The flow map lost invertibility (J <= 0) somewhere."""

    def __init__(self, message, node=None, time=None, value=None):
        super().__init__(message)
        self.node = node
        self.time = time
        self.value = value
