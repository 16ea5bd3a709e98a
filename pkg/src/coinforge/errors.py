class CoinforgeError(Exception):
    """Base class for all library errors."""


class ParameterError(CoinforgeError, ValueError):
    """An argument is out of its allowed range."""


class PreconditionError(CoinforgeError, ValueError):
    """A required inequality between parameters does not hold.

    ``inequality`` names the failing condition so callers (and the CLI)
    can report it verbatim.
    """

    def __init__(self, inequality, detail=""):
        self.inequality = inequality
        msg = f"precondition violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class FeasibilityError(CoinforgeError):
    """The requested computation is too large for exhaustive/exact mode."""


class KindError(CoinforgeError, TypeError):
    """Operation applied to a formula of the wrong kind."""
