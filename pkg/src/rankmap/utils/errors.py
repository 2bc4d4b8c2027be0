"""Exception hierarchy with helpful hints."""

from rich.console import Console

console = Console(stderr=True)


class RankmapError(Exception):
    """Base exception for rankmap with enhanced error messages."""

    def __init__(
        self,
        message: str,
        hint: str | None = None,
        details: str | None = None,
    ):
        """Initialize error with context.

        Args:
            message: Main error message
            hint: Helpful hint for fixing the error
            details: Additional error details
        """
        self.message = message
        self.hint = hint
        self.details = details
        super().__init__(message)

    def display(self) -> None:
        """Display formatted error message with Rich."""
        lines = [f"[red]✗[/red] {self.message}"]

        if self.details:
            lines.append(f"\n[dim]{self.details}[/dim]")

        if self.hint:
            lines.append(f"\n[yellow]💡 Hint:[/yellow] {self.hint}")

        console.print("\n".join(lines))


class ConvergenceError(RankmapError):
    """Raised when an iterative kernel fails to converge."""

    def __init__(self, kernel: str, shape: tuple[int, ...] | None = None):
        details = f"Input shape: {shape}" if shape is not None else None
        super().__init__(
            f"{kernel} did not converge",
            hint="Check the input for extreme dynamic range or rescale it",
            details=details,
        )
        self.kernel = kernel


class NotPositiveDefiniteError(RankmapError):
    """Raised when a Cholesky factorization meets an indefinite matrix."""

    def __init__(self, ridge: float):
        super().__init__(
            "Matrix is not positive definite after adding the ridge",
            hint=f"Increase the ridge above {ridge:g} or use the psd-eigendecomposition strategy",
            details=f"Ridge used: {ridge:g}",
        )
        self.ridge = ridge


class NotPositiveSemidefiniteError(RankmapError):
    """Raised when a symmetric matrix has a clearly negative eigenvalue."""

    def __init__(self, min_eigenvalue: float, threshold: float):
        super().__init__(
            "Matrix is not positive semidefinite",
            hint="Moment matrices must be Gram-type; check how the matrix was assembled",
            details=f"Smallest eigenvalue {min_eigenvalue:.3e} is below -{threshold:.3e}",
        )
        self.min_eigenvalue = min_eigenvalue


class DimensionMismatchError(RankmapError):
    """Raised when operand shapes are not conformable."""

    def __init__(self, what: str, expected: object, actual: object):
        super().__init__(
            f"Dimension mismatch in {what}",
            details=f"Expected {expected}, got {actual}",
        )
        self.expected = expected
        self.actual = actual


class ContractViolationError(RankmapError):
    """Raised when a documented precondition does not hold."""

    def __init__(self, message: str, suggestion: str | None = None):
        super().__init__(message, hint=suggestion)


class KindMismatchError(RankmapError):
    """Raised when a map is evaluated against a problem of another kind."""

    def __init__(self, map_kind: str, spec_kind: str):
        super().__init__(
            f"Map of kind '{map_kind}' cannot be evaluated on a '{spec_kind}' problem",
            hint="Build the map from the same ProblemSpec you evaluate it on",
        )


class InsufficientSamplesError(RankmapError):
    """Raised when an estimator needs more samples than provided."""

    def __init__(self, required: int, available: int):
        super().__init__(
            f"At least {required} samples required, got {available}",
            hint="Generate more samples or use the uncentered second moment",
        )
        self.required = required
        self.available = available


class DivergenceError(RankmapError):
    """Raised when gradient training diverges."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(
            f"Training diverged at epoch {epoch}",
            hint="Lower the learning rate or switch to the adam-style optimizer",
            details=f"Loss: {loss}",
        )
        self.epoch = epoch
        self.loss = loss


class InstabilityError(RankmapError):
    """Raised when a simulation produces non-finite values."""

    def __init__(self, step: int):
        super().__init__(
            f"Simulation became unstable at step {step}",
            hint="Lower cfl_fraction or reduce initial-condition amplitudes",
        )
        self.step = step


class UndefinedMetricError(RankmapError):
    """Raised when a metric's denominator vanishes."""

    def __init__(self, metric: str, reason: str):
        super().__init__(f"{metric} is undefined: {reason}")
        self.metric = metric


class MatrixFormatError(RankmapError):
    """Raised when a matrix file cannot be parsed."""

    def __init__(self, message: str, offset: int, path: object | None = None):
        details = f"Byte offset: {offset}"
        if path is not None:
            details += f"\nFile: {path}"
        super().__init__(
            message, hint="The file is corrupted or not a rankmap matrix", details=details
        )
        self.offset = offset


class ConfigurationError(RankmapError):
    """Raised when an experiment configuration is invalid."""

    def __init__(
        self,
        message: str,
        field_path: str | None = None,
        known_fields: list[str] | None = None,
        config_path: object | None = None,
    ):
        hint = "Check the configuration against 'rankmap run --help'"
        if field_path and known_fields:
            leaf = field_path.rsplit(".", 1)[-1]
            similar = _find_similar_names(leaf, known_fields)
            if similar:
                hint = f"Did you mean: {', '.join(similar)}?"

        details_parts = []
        if field_path:
            details_parts.append(f"Field: {field_path}")
        if config_path is not None:
            details_parts.append(f"Config file: {config_path}")

        super().__init__(message, hint=hint, details="\n".join(details_parts) or None)
        self.field_path = field_path


def _find_similar_names(target: str, candidates: list[str], max_distance: int = 2) -> list[str]:
    """Find similar names using Levenshtein distance.

    Args:
        target: Target string to match
        candidates: List of candidate strings
        max_distance: Maximum edit distance for matches

    Returns:
        List of similar names sorted by similarity
    """
    similarities = []

    for candidate in candidates:
        distance = _levenshtein_distance(target.lower(), candidate.lower())
        if distance <= max_distance:
            similarities.append((distance, candidate))

    similarities.sort(key=lambda x: (x[0], x[1]))

    return [name for _, name in similarities[:3]]


def _levenshtein_distance(s1: str, s2: str) -> int:
    """Calculate Levenshtein distance between two strings."""
    if len(s1) < len(s2):
        return _levenshtein_distance(s2, s1)

    if len(s2) == 0:
        return len(s1)

    previous_row = list(range(len(s2) + 1))
    for i, c1 in enumerate(s1):
        current_row = [i + 1]
        for j, c2 in enumerate(s2):
            insertions = previous_row[j + 1] + 1
            deletions = current_row[j] + 1
            substitutions = previous_row[j] + (c1 != c2)
            current_row.append(min(insertions, deletions, substitutions))
        previous_row = current_row

    return previous_row[-1]


def display_error(error: Exception) -> None:
    """Display error with enhanced formatting.

    Args:
        error: Exception to display
    """
    if isinstance(error, RankmapError):
        error.display()
    else:
        console.print(f"[red]✗[/red] Unexpected error: {error}")
        console.print("[dim]Use --verbose for more detail[/dim]")
