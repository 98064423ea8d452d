"""Exception types shared across the package."""


class EmbkitError(Exception):
    """Base class for all embkit errors."""


class ParseError(EmbkitError):
    """A file does not conform to its expected format.

    Carries the offending path and 1-based line number when known so that
    diagnostics point at the exact input line.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class FormatError(EmbkitError):
    """A binary or structured payload is malformed (bad magic, truncation...)."""


class DataError(EmbkitError):
    """Input data is well-formed but unusable (empty vocabulary, one class...)."""


class ConfigError(EmbkitError):
    """A configuration input (e.g. a stop-word list file) is missing or bad."""
