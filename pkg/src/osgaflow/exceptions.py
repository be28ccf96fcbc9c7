"""
Error hierarchy for OSGAFlow
"""


class OsgaFlowError(Exception):
    """Base class for all OSGAFlow errors"""


class DimensionError(OsgaFlowError, ValueError):
    """Raised when an element does not live in the space an operator expects"""

    def __init__(self, expected, actual, what: str = "argument"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, got {actual}")


class InfeasiblePointError(OsgaFlowError):
    """Raised when a solver is started at a point outside the objective's domain"""


class StepFailureError(OsgaFlowError):
    """Raised when a line search cannot find an acceptable step"""

    def __init__(self, iteration: int, message: str):
        self.iteration = iteration
        super().__init__(f"Iteration {iteration}: {message}")


class ConfigError(OsgaFlowError, ValueError):
    """Raised for invalid or unknown configuration"""


class ProfileError(OsgaFlowError, ValueError):
    """Raised when a performance profile cannot be built"""
