"""Exception hierarchy shared by every module of the package."""


class AnfisError(Exception):
    """Base class for all errors raised by bubble_anfis."""


class ParameterDomainError(AnfisError, ValueError):
    """A membership-function parameter vector is invalid for its family."""


class ConfigError(AnfisError, ValueError):
    """A configuration value is out of its admissible range."""


class RuleExplosionError(ConfigError):
    """Grid partition would produce more rules than allowed."""

    def __init__(self, rule_count: int, max_rules: int):
        self.rule_count = rule_count
        self.max_rules = max_rules
        super().__init__(
            f"grid partition needs {rule_count} rules, above max_rules={max_rules}"
        )


class ShapeError(AnfisError, ValueError):
    """Array dimensions do not match what the operation expects."""


class DataError(AnfisError, ValueError):
    """Input data contains non-finite values or is otherwise unusable."""


class DomainError(AnfisError, ValueError):
    """A point lies outside the physical domain of the surrogate."""


class SelectionError(AnfisError, KeyError):
    """Unknown, duplicated or conflicting column names."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ParseError(AnfisError, ValueError):
    """A file could not be parsed."""


class VersionError(ParseError):
    """A model file carries an unsupported format version."""


class InvariantError(ParseError):
    """A parsed structure violates a structural invariant."""


class SummaryError(AnfisError):
    """A sweep report has no successful cells to summarize."""


class UsageError(AnfisError):
    """Bad command-line usage."""
