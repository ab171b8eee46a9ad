"""Exception types shared across the package."""

from __future__ import annotations


class PnpFluidError(Exception):
    """Base class for all package errors."""


class GeometryError(PnpFluidError):
    """Body geometry is inconsistent with the enclosure (overlap, empty mask)."""


class InvariantViolation(PnpFluidError):
    """A field violated a structural invariant (negativity, support leak)."""


class SolverError(PnpFluidError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class StabilityError(PnpFluidError):
    """Explicit update blew past its stability bound (NaN/Inf or negative N)."""


class OracleError(PnpFluidError):
    """Analytic reference solution failed to converge."""


class PicardError(PnpFluidError):
    """Fixed-point sweep did not converge within the iteration budget."""

    def __init__(self, message: str, residual_trace=None):
        super().__init__(message)
        self.residual_trace = list(residual_trace or [])


class ConfigError(PnpFluidError):
    """Configuration file is invalid; carries the full list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(self.violations))


class SnapshotError(PnpFluidError):
    """Snapshot file is unreadable (bad magic, version mismatch, truncation)."""
