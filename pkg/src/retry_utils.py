"""
Retry Logic and Utilities for GapWiz
Re-runs numerical solves that fail their residual checks, tightening the
solver tolerance and switching HiGHS method between attempts
"""

import logging
from . import config as gw_config
from .exceptions import NumericalFailureError, is_retryable_error

logger = logging.getLogger(__name__)


class RetryConfig:
    """Configuration for retry behavior"""

    def __init__(
        self,
        max_attempts=3,
        initial_tolerance=gw_config.LP_DEFAULT_TOLERANCE,
        backoff_factor=10.0,
        min_tolerance=gw_config.LP_MIN_TOLERANCE,
        methods=None,
        retryable_exceptions=None
    ):
        """
        Initialize retry configuration

        Args:
            max_attempts: Maximum number of attempts
            initial_tolerance: Solver tolerance on the first attempt
            backoff_factor: Divisor applied to the tolerance on each retry
            min_tolerance: Tolerance never goes below this
            methods: Solver methods cycled through, one per attempt
            retryable_exceptions: Tuple of exception types that trigger a retry
        """
        self.max_attempts = max_attempts
        self.initial_tolerance = initial_tolerance
        self.backoff_factor = backoff_factor
        self.min_tolerance = min_tolerance
        self.methods = list(methods) if methods else list(gw_config.LP_METHODS)

        if retryable_exceptions is None:
            self.retryable_exceptions = (NumericalFailureError,)
        else:
            self.retryable_exceptions = retryable_exceptions

    def method_for(self, attempt):
        """Solver method used on a 1-based attempt number"""
        return self.methods[(attempt - 1) % len(self.methods)]

    def next_tolerance(self, tol):
        """Tolerance for the attempt after one that used tol"""
        return max(tol / self.backoff_factor, self.min_tolerance)


# Default retry configuration
DEFAULT_RETRY_CONFIG = RetryConfig()


def retry_with_progress(
    func,
    args=(),
    kwargs=None,
    config=None,
    progress_callback=None,
    tol=None
):
    """
    Retry a solve with progress reporting

    Args:
        func: Function accepting ``tol`` and ``method`` keyword arguments
        args: Positional arguments for the function
        kwargs: Keyword arguments for the function
        config: RetryConfig instance
        progress_callback: Called with (attempt, max_attempts, status, message)
        tol: Tolerance for the first attempt (config.initial_tolerance if None)

    Returns:
        Result of the function

    Raises:
        Last exception if all attempts fail
    """
    if kwargs is None:
        kwargs = {}
    if config is None:
        config = DEFAULT_RETRY_CONFIG
    tol = config.initial_tolerance if tol is None else tol

    for attempt in range(1, config.max_attempts + 1):
        method = config.method_for(attempt)
        if progress_callback:
            progress_callback(
                attempt,
                config.max_attempts,
                'trying',
                f"Attempt {attempt} of {config.max_attempts} ({method}, tol={tol:.1e})"
            )
        try:
            result = func(*args, tol=tol, method=method, **kwargs)
        except config.retryable_exceptions as e:
            retry, next_tol = should_retry(e, config, attempt, tol)
            if progress_callback:
                status = 'retrying' if retry else 'failed'
                progress_callback(
                    attempt,
                    config.max_attempts,
                    status,
                    format_retry_message(attempt, config.max_attempts, e, next_tol if retry else None)
                )
            if not retry:
                raise
            tol = next_tol
            continue

        if progress_callback:
            progress_callback(
                attempt,
                config.max_attempts,
                'success',
                f"Succeeded on attempt {attempt}"
            )
        return result


def should_retry(exception, config=None, current_attempt=1, tol=None):
    """
    Determine if a solve should be retried

    Returns:
        Tuple (should_retry: bool, next_tolerance: float or None)
    """
    if config is None:
        config = DEFAULT_RETRY_CONFIG
    if current_attempt >= config.max_attempts:
        return False, None
    if not is_retryable_error(exception):
        return False, None
    tol = config.initial_tolerance if tol is None else tol
    return True, config.next_tolerance(tol)


def format_retry_message(attempt, max_attempts, exception, next_tol=None):
    """Format a retry message for the log"""
    msg = f"Attempt {attempt}/{max_attempts} failed: {exception}"

    if attempt < max_attempts and next_tol:
        msg += f"; retrying with tol={next_tol:.1e}"
    elif attempt >= max_attempts:
        msg += "; all attempts exhausted"

    return msg


def log_progress(attempt, max_attempts, status, message):
    """Progress callback that writes to the module logger"""
    if status in ('retrying', 'failed'):
        logger.warning(message)
    else:
        logger.debug(message)
