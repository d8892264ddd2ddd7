"""Exception types raised by the numerical routines."""


class BergquantError(Exception):
    """Base class for all package errors."""


class NonConvergent(BergquantError):
    """Adaptive refinement ran out of budget before meeting the tolerance."""


class IllConditioned(BergquantError):
    """Gram factorization lost too much precision for the requested degree."""


class CrossCheckMismatch(BergquantError):
    """Two independent routes to the same quantity disagree."""


class SlopeViolation(BergquantError):
    """A toric potential is not convex or has slopes outside [0, 1]."""


class DegenerateGradient(BergquantError):
    """A holomorphic function has vanishing differential where one is required."""


class DegenerateLevelSet(BergquantError):
    """Two potentials coincide on a whole interval."""


class LevelMismatch(BergquantError):
    """Quantum spectra from different levels were combined."""


class MassMismatch(BergquantError):
    """A measure does not carry the required total mass."""


class AtomDetected(BergquantError):
    """A cumulative distribution function jumps, i.e. the measure has atoms."""


class WindowTooSmall(BergquantError):
    """A measure or potential has not settled to its limits inside the t-window."""


class ConfigInvalid(BergquantError):
    """An experiment configuration failed validation."""
