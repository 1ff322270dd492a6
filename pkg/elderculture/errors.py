"""
Exception hierarchy for the elderly-treatment model runner.

Every error carries the process exit code the CLI reports for it.
"""

from typing import Optional


class ElderCultureError(Exception):
    """Base class for all model and runner errors"""
    exit_code = 1


class ParameterError(ElderCultureError, ValueError):
    """A model parameter lies outside its domain"""
    exit_code = 2

    def __init__(self, name: str, value, domain: str):
        self.name = name
        self.value = value
        self.domain = domain
        super().__init__(f"{name}={value!r} is outside its domain {domain}")


class ModelDomainError(ElderCultureError, ValueError):
    """An operation was called outside its preconditions"""
    exit_code = 2


class RegimeError(ModelDomainError):
    """The U-shaped income ratio requires A_e < A_m"""


class UndefinedCorrelationError(ModelDomainError):
    """Correlation is undefined for a series without variance"""


class ConfigError(ElderCultureError):
    """Scenario configuration could not be validated"""
    exit_code = 2


class TraitTableError(ConfigError):
    """Malformed ethnographic trait table"""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class ConvergenceError(ElderCultureError):
    """A solver exhausted its iteration budget"""
    exit_code = 3

    def __init__(self, message: str, iterations: int, max_residual: float, worst_period: Optional[int] = None):
        self.iterations = iterations
        self.max_residual = max_residual
        self.worst_period = worst_period
        report = f"{message}: max residual {max_residual:.3e} after {iterations} iterations"
        if worst_period is not None:
            report += f" (worst period t={worst_period})"
        super().__init__(report)


class OracleError(ElderCultureError):
    """Brute-force verification could not be carried out"""
    exit_code = 3


class FileAccessError(ElderCultureError):
    """Input or output file could not be read or written"""
    exit_code = 4
