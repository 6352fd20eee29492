"""
Exception hierarchy for the LPPL V&V toolkit

Every error carries a stable `code` so the pipeline can record it as a
machine-readable skip reason.
"""
from typing import Optional


class VnvError(Exception):
    """Base class for all toolkit errors"""
    code = 'error'


class InvalidInputError(VnvError, ValueError):
    code = 'invalid-input'


class DegenerateDataError(VnvError, ValueError):
    code = 'degenerate-data'


# Time series / windows

class NotEnoughEventsError(VnvError, ValueError):
    code = 'not-enough-events'


class NoWindowError(VnvError, ValueError):
    code = 'no-window'


class WindowTooShortError(VnvError, ValueError):
    code = 'window-too-short'


# ABCDE simulation

class NumericOverflowError(VnvError, ArithmeticError):
    code = 'numeric-overflow'


class BlowUpError(VnvError, ArithmeticError):
    """Integration left the admissible state region"""
    code = 'blow-up'

    def __init__(self, step: int, detail: str = ''):
        self.step = step
        self.detail = detail
        # saved states before the failure, when the integrator has them
        self.partial = None
        message = f"integration blew up at step {step}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


# LPPL model forms

class DomainError(VnvError, ValueError):
    code = 'domain'


class DegenerateDesignError(VnvError, ValueError):
    code = 'degenerate-design'


# Estimators

class FitFailedError(VnvError):
    code = 'fit-failed'


class NoEstimateError(VnvError):
    code = 'no-estimate'


# Statistics

class DegenerateTestError(VnvError, ValueError):
    code = 'degenerate-test'


class InvalidPairingError(VnvError, ValueError):
    code = 'invalid-pairing'


# Pipeline / CLI

class ConfigError(VnvError, ValueError):
    code = 'config'

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ExperimentFailedError(VnvError):
    code = 'experiment-failed'
