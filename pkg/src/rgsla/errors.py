"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class DivergenceError(FloatingPointError):
    """A numeric quantity became non-finite.

    ``term`` names the quantity (layer or objective term) that diverged.
    """

    def __init__(self, term: str, message: str | None = None):
        self.term = term
        super().__init__(message or f"non-finite value in {term}")
