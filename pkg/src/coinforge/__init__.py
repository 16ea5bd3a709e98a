"""coinforge: constant-depth formulas for the delta-coin problem.

Builds the read-once Amano and O'Donnell-Wimmer formulas and the
design-based derandomized formulas, checks them exactly and by seeded
simulation, and carries the desk-scale F2-degree machinery.
"""

__version__ = "0.1.0"

from coinforge.errors import (
    CoinforgeError,
    FeasibilityError,
    KindError,
    ParameterError,
    PreconditionError,
)

__all__ = [
    "__version__",
    "CoinforgeError",
    "FeasibilityError",
    "KindError",
    "ParameterError",
    "PreconditionError",
]
