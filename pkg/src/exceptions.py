"""
Custom Exception Classes for GapWiz
Provides specific error types for better error handling and user feedback
"""

from . import config


class GapWizError(Exception):
    """Base exception for all GapWiz errors"""
    def __init__(self, message, details=None, suggestion=None):
        self.message = message
        self.details = details
        self.suggestion = suggestion
        super().__init__(self.message)

    def get_full_message(self):
        """Get full error message with details and suggestion"""
        msg = self.message
        if self.details:
            msg += f"\n\nDetails: {self.details}"
        if self.suggestion:
            msg += f"\n\nSuggestion: {self.suggestion}"
        return msg


# ==================== Input Errors ====================

class InputError(GapWizError):
    """Base class for invalid arguments and malformed files"""
    pass


class DomainError(InputError):
    """Argument outside the domain of a function"""
    def __init__(self, name, value, domain):
        super().__init__(
            message=f"{name} = {value} is outside {domain}",
            details=f"Allowed domain: {domain}",
            suggestion=None
        )
        self.name = name
        self.value = value


class SizeLimitError(InputError):
    """Problem too large for an exhaustive method"""
    def __init__(self, what, size, limit):
        super().__init__(
            message=f"{what} of size {size} exceeds the limit {limit}",
            details="Exhaustive enumeration grows as 2^(size - 1).",
            suggestion="Use a smaller instance or a heuristic method."
        )
        self.size = size
        self.limit = limit


class DimensionMismatchError(InputError):
    """Arrays with inconsistent shapes"""
    def __init__(self, what, expected, actual):
        super().__init__(
            message=f"Dimension mismatch in {what}",
            details=f"Expected: {expected}\nActual: {actual}",
            suggestion=None
        )
        self.expected = expected
        self.actual = actual


class InvalidInstanceError(InputError):
    """Weight matrix is not a valid max-cut instance"""
    def __init__(self, reason):
        super().__init__(
            message="Invalid max-cut instance",
            details=reason,
            suggestion="Weights must be symmetric, nonnegative, with zero diagonal."
        )


class InvalidKernelError(InputError):
    """Kernel coefficients violate positivity or normalization"""
    def __init__(self, reason):
        super().__init__(
            message="Invalid invariant kernel",
            details=reason,
            suggestion="Coefficients must be nonnegative and sum to 1."
        )


class InvalidInequalityError(InputError):
    """Malformed or invalid cut-polytope inequality"""
    def __init__(self, reason, worst_value=None):
        details = reason
        if worst_value is not None:
            details += f"\nWorst cut value: {worst_value}"
        super().__init__(
            message="Invalid cut-polytope inequality",
            details=details,
            suggestion="Check Z (symmetric, size m) and beta."
        )
        self.worst_value = worst_value


class MalformedProgramError(InputError):
    """Linear program with inconsistent data"""
    def __init__(self, reason):
        super().__init__(
            message="Malformed linear program",
            details=reason,
            suggestion=None
        )


class CertificateFormatError(InputError):
    """Certificate or instance file cannot be parsed"""
    def __init__(self, path, reason=None):
        details = reason if reason else "The file is not valid JSON or misses required fields."
        super().__init__(
            message=f"Cannot read file: {path}",
            details=details,
            suggestion="Regenerate the file with the bound or instance command."
        )
        self.path = path


class InvalidConfigurationError(InputError):
    """Invalid configuration value"""
    def __init__(self, config_key, invalid_value, expected_type=None):
        details = f"Invalid value for '{config_key}': {invalid_value}"
        if expected_type:
            details += f"\nExpected: {expected_type}"
        super().__init__(
            message=f"Invalid configuration: {config_key}",
            details=details,
            suggestion="Run with --help to see the accepted values."
        )
        self.config_key = config_key
        self.invalid_value = invalid_value


class SampleCountError(InputError):
    """Monte Carlo sample count below the supported minimum"""
    def __init__(self, samples, minimum):
        super().__init__(
            message=f"Sample count {samples} is too small",
            details=f"At least {minimum} samples are required.",
            suggestion=f"Pass --samples {minimum} or more."
        )
        self.samples = samples
        self.minimum = minimum


class EmptyGridError(InputError):
    """Sample grid without points"""
    def __init__(self):
        super().__init__(
            message="Sample grid is empty",
            details="The relaxation needs at least one inner product t in [-1, 1).",
            suggestion="Increase --grid-size."
        )


# ==================== Solver Errors ====================

class SolverError(GapWizError):
    """Base class for LP solver problems"""
    pass


class NumericalFailureError(SolverError):
    """Solver returned a solution that fails its residual checks"""
    def __init__(self, reason, method=None, tolerance=None):
        details = reason
        if method:
            details += f"\nMethod: {method}, tolerance: {tolerance}"
        super().__init__(
            message="Numerical failure in LP solve",
            details=details,
            suggestion="Try a tighter --tol or a smaller degree."
        )
        self.method = method
        self.tolerance = tolerance


class InfeasibleProgramError(SolverError):
    """LP has no feasible point"""
    def __init__(self, what="linear program"):
        super().__init__(
            message=f"Infeasible {what}",
            details=None,
            suggestion=None
        )


class UnboundedProgramError(SolverError):
    """LP objective is unbounded"""
    def __init__(self, what="linear program"):
        super().__init__(
            message=f"Unbounded {what}",
            details=None,
            suggestion="Check variable bounds."
        )


# ==================== Verification Errors ====================

class VerificationError(GapWizError):
    """Base class for certificate verification failures"""
    step = 0
    code = 'verification-failed'

    def __init__(self, reason, index=None):
        where = f" (constraint {index})" if index is not None else ""
        super().__init__(
            message=f"Verification failed at step {self.step}: {self.code}{where}",
            details=reason,
            suggestion="The certificate is not a valid upper bound as stored."
        )
        self.index = index


class InequalityCheckError(VerificationError):
    """A stored inequality is not valid for the cut polytope"""
    step = 1
    code = 'invalid-inequality'


class GramCheckError(VerificationError):
    """Constraint points are not unit vectors of the right dimension"""
    step = 2
    code = 'indefinite-gram'


class TransformCheckError(VerificationError):
    """Stored r_k disagree with the ones recomputed from points"""
    step = 3
    code = 'transform-mismatch'


class WeightCheckError(VerificationError):
    """Negative or badly normalized dual weights"""
    step = 4
    code = 'bad-weights'


class DegreeCheckError(VerificationError):
    """Termwise feasibility could not be restored"""
    step = 5
    code = 'degree-infeasible'


class TailRuleError(VerificationError):
    """Tail above K_check cannot be bounded"""
    step = 6
    code = 'tail-inapplicable'


# ==================== Helper Functions ====================

def get_error_category(error):
    """Get the category of an error"""
    if isinstance(error, VerificationError):
        return "Verification Error"
    elif isinstance(error, SolverError):
        return "Solver Error"
    elif isinstance(error, InputError):
        return "Input Error"
    elif isinstance(error, GapWizError):
        return "GapWiz Error"
    else:
        return "Unknown Error"


def is_retryable_error(error):
    """Check if an error is retryable"""
    return isinstance(error, NumericalFailureError)


def get_exit_code(error):
    """Map an exception to a CLI exit code"""
    if isinstance(error, VerificationError):
        return config.EXIT_VERIFICATION_FAILURE
    if isinstance(error, (InputError, FileNotFoundError, ValueError)):
        return config.EXIT_INVALID_INPUT
    return config.EXIT_VERIFICATION_FAILURE
