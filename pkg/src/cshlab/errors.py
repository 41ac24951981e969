"""Exception types shared across the package."""


class GraphError(ValueError):
    """Invalid graph data: disconnected, bad weights or measure, self-loops."""


class OverflowGuardError(ValueError):
    """A vertex function left the safe range [-700, 700] for exponentials."""


class SolverError(RuntimeError):
    """A numerical routine failed to produce a usable result."""


class ConfigError(ValueError):
    """Malformed experiment configuration or command-line input."""
