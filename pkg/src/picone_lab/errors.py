"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """A precondition on user-supplied data was violated."""


class NumericError(RuntimeError):
    """A numerical procedure failed (bracket overflow, iteration stagnation)."""


class HypothesisError(InvalidInputError):
    """A theorem hypothesis required by a verifier does not hold for the inputs.

    ``hypothesis`` names the failed condition so callers can tell a bad
    input apart from a genuine inequality violation.
    """

    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        msg = hypothesis if not detail else f"{hypothesis}: {detail}"
        super().__init__(msg)
