"""Exception types raised by the verification engine.

Every error carries enough context to point at the offending object (a key,
a site, a generator) so that failures in long derivation chains stay
debuggable.
"""


class EngineError(Exception):
    """Base class for all engine errors."""


class ZeroConstantTerm(EngineError):
    """Series inversion requires a nonzero constant term."""


class NonzeroConstantTerm(EngineError):
    """Series exponential requires the constant term to vanish."""


class MixedGrade(EngineError):
    """Operation required a grading-homogeneous argument in strict mode."""


class NotRetardedInvertible(EngineError):
    """No causal Green function exists for the given kinetic operator."""

    def __init__(self, site, message=None):
        self.site = site
        super().__init__(message or f"retarded solve blocked at site {site}")


class BadH(EngineError):
    """Symmetric two-point part fails its defining constraints."""


class CutoffDoesNotFit(EngineError):
    """The requested cutoff window does not fit inside the lattice."""


class BoundarySite(EngineError):
    """Operation is only defined at interior sites."""


class BoundarySupport(EngineError):
    """Functional support must keep a stencil margin from the boundary."""


class NonQuadraticAction(EngineError):
    """Koszul-type homology is only defined for quadratic actions."""


class BadGhostNumber(EngineError):
    """Gauge fermion must be antifield-free with ghost number -1."""


class ConsistencyUnverified(EngineError):
    """Propagator consistency conditions not verified before quantum use."""


class SupportsNotOrdered(EngineError):
    """Arguments must have causally ordered, disjoint supports."""


class ConfigError(EngineError):
    """Model configuration file is malformed."""


class UnknownCheck(EngineError):
    """No check or suite with the requested name exists."""
