"""Exception hierarchy for the May spectral sequence engine."""

from typing import Any, Dict, Optional, Sequence


class MayError(Exception):
    """Base class for every error raised by the engine."""

    exit_code = 2

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form used by reports and the CLI."""
        return {"code": type(self).__name__, "message": str(self)}


class ConfigError(MayError):
    """Invalid settings or configuration file."""

    exit_code = 4

    def __init__(self, message: str, errors: Optional[Sequence[Any]] = None):
        super().__init__(message)
        self.errors = list(errors or [])

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["details"] = [str(e) for e in self.errors]
        return data


class DatasetError(MayError):
    """Schema violation or dangling reference in the dataset."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(location + message)
        self.path = path
        self.line = line


class ParseError(DatasetError):
    """Malformed algebra expression."""

    def __init__(self, message: str, text: str, column: Optional[int] = None):
        super().__init__(f"{message} in {text!r}" + (f" at column {column}" if column is not None else ""))
        self.text = text
        self.column = column


class DegreeMismatchError(MayError):
    """Inhomogeneous expression or a weight that cannot be balanced."""


class ConsistencyError(MayError):
    """A computed page violates an invariant (d∘d, completeness, cycles)."""

    def __init__(self, message: str, page: Optional[int] = None, cell: Optional[tuple] = None,
                 witness: Optional[str] = None):
        parts = [message]
        if page is not None:
            parts.append(f"page E{page}")
        if cell is not None:
            parts.append(f"cell {cell}")
        if witness is not None:
            parts.append(f"witness {witness}")
        super().__init__("; ".join(parts))
        self.page = page
        self.cell = cell
        self.witness = witness

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({"page": self.page, "cell": list(self.cell) if self.cell else None,
                     "witness": self.witness})
        return data


class CacheMissError(MayError):
    """A command needs pages that have not been computed yet."""

    exit_code = 3

    def __init__(self, profile: str, hint: str):
        super().__init__(f"no cached pages for profile '{profile}'; run: {hint}")
        self.profile = profile
        self.hint = hint
