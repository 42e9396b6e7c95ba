"""Domain error hierarchy."""


class NanobeamError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidInputError(NanobeamError, ValueError):
    """A numeric input is nonpositive, non-finite or otherwise ill-formed."""


class ConfigRejectedError(NanobeamError):
    """A simulation or scenario configuration is inconsistent with its grid."""


class MemoryBudgetError(NanobeamError):
    """A grid or solver state would exceed the configured memory budget."""

    def __init__(self, required_bytes: int, budget_bytes: int, shape: tuple[int, ...]):
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes
        self.shape = shape
        super().__init__(
            f"grid {shape} needs {required_bytes / 2**20:.1f} MiB, "
            f"budget is {budget_bytes / 2**20:.1f} MiB"
        )


class InstabilityError(NanobeamError):
    """Non-finite field values appeared during time stepping."""

    def __init__(self, step: int, component: str):
        self.step = step
        self.component = component
        super().__init__(f"non-finite values in {component} at step {step}")


class FitError(NanobeamError):
    """A spectral fit request cannot be satisfied by the data."""


class AnalysisError(NanobeamError):
    """An analysis operation received data it cannot reduce."""
