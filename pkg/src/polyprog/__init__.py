"""Polynomial progressions in primes: local factors, sieve majorants, local Gowers norms,
PET linearization, the energy-increment structure theorem and progression counts.

Submodules are imported on demand; the package root only exposes the error types.
"""

from .errors import (
    ArgumentError,
    InvariantError,
    NumericalInstabilityError,
    PolyprogError,
    ResourceError,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "InvariantError",
    "NumericalInstabilityError",
    "PolyprogError",
    "ResourceError",
    "__version__",
]
