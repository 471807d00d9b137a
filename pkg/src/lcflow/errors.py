"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration file, CLI arguments, or parameter ranges."""


class SimulationError(RuntimeError):
    """Runtime failure inside a solve (degenerate state, incompatible data,
    CFL floor reached, solver residual out of tolerance)."""
