"""Exception types shared across the package."""

from __future__ import annotations


class DonutError(Exception):
    """Base class for package errors."""


class InvalidInstance(DonutError, ValueError):
    """Bad input: k out of range, malformed solution, wrong vertex set."""


class BudgetExceeded(DonutError, ValueError):
    """An exhaustive routine was asked for an instance beyond its budget."""


class StructureViolation(DonutError):
    """A structural property that should always hold was observed to fail.

    These are raised by the checking code paths, so one of them means either
    a bug or a counterexample to a claimed property. ``claim`` names the
    property and ``k``/``choice`` are enough to rebuild the offending 1-tree.
    """

    def __init__(self, message: str, *, claim: str, k: int | None = None,
                 choice: tuple[int, ...] | None = None):
        super().__init__(message)
        self.claim = claim
        self.k = k
        self.choice = choice

    def to_dict(self) -> dict:
        return {
            "error": str(self),
            "claim": self.claim,
            "k": self.k,
            "choice": None if self.choice is None else "".join(map(str, self.choice)),
        }


class ConvergenceError(DonutError):
    """Iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual
