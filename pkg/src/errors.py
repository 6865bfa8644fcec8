"""Exception hierarchy shared by the library and the CLI."""

from typing import Optional


class InkError(Exception):
    """Base class for all inkwell errors."""

    kind: str = "error"
    exit_code: int = 1


class UsageError(InkError):
    """Bad command-line usage or selector syntax."""

    kind = "usage"
    exit_code = 1


class InkDataError(InkError):
    """Malformed corpus, labels, checkpoint or other input data."""

    kind = "data"
    exit_code = 2

    def __init__(
        self,
        message: str,
        sample_index: Optional[int] = None,
        field: Optional[str] = None,
    ):
        self.sample_index = sample_index
        self.field = field
        where = []
        if sample_index is not None:
            where.append(f"sample {sample_index}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ContractError(InkError):
    """An operation was called outside its contract."""

    kind = "contract"
    exit_code = 3


class ShapeError(ContractError):
    """Operand shapes are incompatible for a graph op."""

    kind = "shape"


class NumericError(InkError):
    """A NaN or infinity surfaced in a computation."""

    kind = "numeric"
    exit_code = 3

    def __init__(self, message: str, node_id: Optional[int] = None, term: Optional[str] = None):
        self.node_id = node_id
        self.term = term
        super().__init__(message)
