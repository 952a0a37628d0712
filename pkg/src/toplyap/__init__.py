"""Topological Lyapunov exponents and joint spectral radii of locally constant
cocycles over subshifts of finite type, with matrix and mapping-class targets."""

from toplyap.errors import InputError, InvariantViolation

__version__ = "0.1.0"

__all__ = ["InputError", "InvariantViolation", "__version__"]
