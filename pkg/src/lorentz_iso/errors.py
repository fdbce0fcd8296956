"""Exception types raised across the toolkit."""


class LorentzIsoError(Exception):
    """Base class for all toolkit errors."""


class DomainError(LorentzIsoError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class UnsupportedChartError(LorentzIsoError, NotImplementedError):
    """The requested operation has no implementation for this chart / set kind."""


class InfeasibleError(LorentzIsoError):
    """No causal coupling exists between the two measures."""


class ConvergenceError(LorentzIsoError, RuntimeError):
    """An iterative scheme hit its refinement cap without converging."""


class DegenerateRegionError(LorentzIsoError):
    """Rejection sampling of a region accepted (almost) nothing."""


class ConfigError(LorentzIsoError, ValueError):
    """A run configuration failed to parse or validate."""
