"""Finite-scale numerics for metric mean dimension and its measure-theoretic counterparts."""
from .errors import ConfigError, DomainError, ResourceError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DomainError", "ResourceError", "__version__"]
