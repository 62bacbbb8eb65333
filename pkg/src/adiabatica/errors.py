"""Exception hierarchy shared by all modules."""


class AdiabaticaError(Exception):
    """Base class for every error raised by this package."""


class GridError(AdiabaticaError, ValueError):
    pass


class BindingError(AdiabaticaError, ValueError):
    """A field does not match the grid it is used with."""


class ExprError(AdiabaticaError, ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class ExprNameError(ExprError):
    pass


class ExprArityError(ExprError):
    pass


class ExprEvalError(ExprError):
    pass


class HamiltonianError(AdiabaticaError, ValueError):
    pass


class EigensolverError(AdiabaticaError, RuntimeError):
    pass


class TrackingLoss(AdiabaticaError):
    def __init__(self, sample: int, overlap: float):
        self.sample = sample
        self.overlap = overlap
        super().__init__(
            f"level tracking lost at path sample {sample}: best overlap {overlap:.3g} < 0.5"
        )


class GapAlarm(AdiabaticaError):
    def __init__(self, sample: int, gap: float, threshold: float):
        self.sample = sample
        self.gap = gap
        self.threshold = threshold
        super().__init__(
            f"spectral gap {gap:.3g} below threshold {threshold:.3g} at path sample {sample}"
        )


class NodeError(AdiabaticaError, ValueError):
    """Wavefunction is masked everywhere (zero function)."""


class RunAlignmentError(AdiabaticaError):
    """Node structure differs between neighbouring parameter samples."""


class UnwrapAmbiguity(AdiabaticaError):
    def __init__(self, sample: int, increment: float):
        self.sample = sample
        self.increment = increment
        super().__init__(
            f"phase increment {increment:.3g} rad exceeds pi/2 before sample {sample}; "
            "sample the path more densely"
        )


class PropagationError(AdiabaticaError, RuntimeError):
    pass


class LinkError(AdiabaticaError, ValueError):
    """Zero parameter step or vanishing overlap between neighbouring slices."""


class DegenerateDenominator(AdiabaticaError, ValueError):
    pass


class ScenarioError(AdiabaticaError, ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        parts = []
        if field:
            parts.append(field)
        if line is not None:
            parts.append(f"line {line}")
        prefix = f"{': '.join(parts)}: " if parts else ""
        super().__init__(prefix + message)
