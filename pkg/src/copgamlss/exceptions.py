class CopulaGamlssError(Exception):
    """Base class for package errors."""


class DomainError(CopulaGamlssError, ValueError):
    """An argument lies outside the support or parameter range it must respect."""


class DegenerateInputError(CopulaGamlssError, ValueError):
    """Input too poor to build the requested object (e.g. one factor level)."""


class ConfigError(CopulaGamlssError, ValueError):
    """Malformed model configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class StepFailure(CopulaGamlssError, RuntimeError):
    """The trust region collapsed without finding an ascent step."""
