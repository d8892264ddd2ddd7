"""Weighted Bergman kernels, Bergman-metric estimates, and quantization of toric potentials,
energies and measures on the projective line."""

from .errors import BergquantError

__version__ = "0.1.0"

__all__ = ["BergquantError", "__version__"]
