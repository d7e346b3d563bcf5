"""Exception hierarchy shared by every module."""


class ColorQubitError(Exception):
    """Base class for all errors raised by colorqubit."""


class DomainError(ColorQubitError, ValueError):
    """Input outside the validity domain of a model (e.g. Sellmeier range)."""


class CutoffError(ColorQubitError):
    """No guided fundamental mode exists at the requested point."""

    def __init__(self, message, geometry=None, wavelength=None, field=None):
        super().__init__(message)
        self.geometry = geometry
        self.wavelength = wavelength
        self.field = field


class TableParseError(ColorQubitError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ContractError(ColorQubitError, ValueError):
    """A precondition between collaborating objects was violated."""


class SearchError(ColorQubitError):
    """Geometry search found no guided point."""


class RootError(ColorQubitError):
    """Re-phasematching root solve did not converge."""


class ConfigError(ColorQubitError, ValueError):
    pass


class PlanError(ColorQubitError, ValueError):
    pass
