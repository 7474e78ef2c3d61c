"""Exception hierarchy shared by every graphrx module."""


class GraphrxError(Exception):
    """Base class for all library errors."""


class DimensionError(GraphrxError, ValueError):
    pass


class DomainError(GraphrxError, ValueError):
    pass


class ContractError(GraphrxError, ValueError):
    pass


class NumericError(GraphrxError, ArithmeticError):
    pass


class GraphIndexError(GraphrxError, IndexError):
    pass


class SchemaError(GraphrxError, ValueError):
    """Attribute tables of graphs disagree (pack, registry checks)."""


class SmilesError(GraphrxError, ValueError):
    """Raised for any SMILES that cannot be turned into a molecule.

    ``position`` is the 0-based character offset when one is known.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class SmilesLexicalError(SmilesError):
    pass


class UnmatchedBranchError(SmilesError):
    pass


class UnclosedRingError(SmilesError):
    pass


class AromaticityError(SmilesError):
    pass


class ValenceError(SmilesError):
    pass


class VocabularyError(GraphrxError, KeyError):
    def __init__(self, kind: str, name: str, suggestion: str | None = None):
        self.kind = kind
        self.name = name
        self.suggestion = suggestion
        msg = f"unknown {kind} {name!r}"
        if suggestion is not None:
            msg += f"; did you mean {suggestion!r}?"
        super().__init__(msg)

    def __str__(self) -> str:
        return self.args[0]


class ConfigError(GraphrxError, ValueError):
    pass


class CheckpointError(GraphrxError, ValueError):
    pass
