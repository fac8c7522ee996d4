class LoopflowError(Exception):
    """Base class for every error raised by loopflow."""


class ValidationError(LoopflowError):
    """Network data violates a structural rule."""

    def __init__(self, message, loop=None, pipe=None, line=None):
        self.loop = loop
        self.pipe = pipe
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigurationError(LoopflowError):
    """Missing or invalid model parameters."""


class NodeDataUnavailable(LoopflowError):
    def __init__(self, message="node data unavailable: pipes carry no from/to incidence"):
        super().__init__(message)


class DisconnectedGraphError(LoopflowError):
    def __init__(self, components):
        self.components = components
        listing = "; ".join("{" + ", ".join(c) + "}" for c in components)
        super().__init__(f"network graph is disconnected ({len(components)} components): {listing}")


class OutOfRegimeError(LoopflowError):
    """Input outside the validity range of a pressure-drop law."""


class ColebrookConvergenceError(LoopflowError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"Colebrook iteration did not converge, last residual {residual:.3e}")


class SingularMatrixError(LoopflowError):
    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is singular or ill-conditioned (pivot {pivot:.3e})")


class DegenerateLoopError(LoopflowError):
    def __init__(self, loop_id):
        self.loop = loop_id
        super().__init__(
            f"loop {loop_id}: all member flows are zero so the derivative sum vanishes; "
            "seed the loop with a nonzero flow"
        )


class SolverError(LoopflowError):
    """A step failed inside an iteration; wraps the original error."""

    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"iteration {iteration}: {cause}")
