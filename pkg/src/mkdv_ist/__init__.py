"""Inverse scattering tools for the defocusing mKdV equation on a step background.

``q_t + q_xxx - 6 q^2 q_x = 0`` with ``q -> -1`` as ``x -> -inf`` and ``q -> 1``
as ``x -> +inf``.
"""

from ._accel import backend_name
from .errors import ConfigurationError, DomainError, MKdVError, NumericalError, PoleError

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "ConfigurationError",
    "DomainError",
    "MKdVError",
    "NumericalError",
    "PoleError",
    "__version__",
]
