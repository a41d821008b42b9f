"""Exception types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid or unparseable experiment configuration (exit code 2)."""


class PhysicsError(ValueError):
    """Physically infeasible parameters, e.g. r1 = 0 or k < 0 (exit code 3)."""


class NumericalError(RuntimeError):
    """Numerical failure: residual or positivity breach (exit code 4)."""
