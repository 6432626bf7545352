"""Exception types raised across the package."""


class GraphFormatError(ValueError):
    """Malformed graph text."""


class IrregularGraphError(ValueError):
    def __init__(self, degree_a, degree_b, vertex_a=None, vertex_b=None):
        self.degrees = (degree_a, degree_b)
        msg = f"graph is not regular: found degrees {degree_a} and {degree_b}"
        if vertex_a is not None:
            msg += f" (vertices {vertex_a} and {vertex_b})"
        super().__init__(msg)


class CapExceededError(ValueError):
    """Brute-force oracle called on a graph larger than its cap."""


class InfeasibleError(RuntimeError):
    """No assignment / relaxation point satisfies the constraints."""


class InfeasiblePinError(InfeasibleError):
    pass


class ZeroProbabilityError(ValueError):
    """Conditioning on an event of (numerically) zero probability."""


class BackendInconsistencyError(RuntimeError):
    """A pseudo-distribution produced data that contradicts its own constraints."""


class PSDViolationError(ValueError):
    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"matrix is not PSD: most negative eigenvalue {min_eigenvalue:.3e}")


class TraceViolationError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals or {}
        super().__init__(message)
