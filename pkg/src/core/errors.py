from typing import List, Any


class LittleEntError(Exception):
    pass


class InputError(LittleEntError, ValueError):
    pass


class DimensionError(InputError):
    pass


class ArityError(InputError):
    pass


class NonUnitaryError(InputError):
    pass


class DomainError(LittleEntError, ValueError):
    """Raised when a measure is undefined for the given state (e.g. odd-n n-tangle)."""


class OutOfRegimeError(LittleEntError, ValueError):
    """Raised when a continuity bound is asked for outside the range it was proved in."""


class CapExceededError(LittleEntError):
    pass


class CircuitParseError(LittleEntError):

    def __init__(self, diagnostics: List[Any]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        message = str(first) if first is not None else "circuit parse failed"
        if len(self.diagnostics) > 1:
            message += f" (+{len(self.diagnostics) - 1} more)"
        super().__init__(message)
