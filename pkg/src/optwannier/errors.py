"""Exception types raised by the solver.

Each carries enough context (quasimomentum, band) for the CLI to emit a
machine-readable error record.
"""

from __future__ import annotations


class WannierError(Exception):
    """Base class for all solver errors."""

    def to_dict(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        for key in ("k", "band"):
            value = getattr(self, key, None)
            if value is not None:
                out[key] = value
        return out


class DegenerateBand(WannierError):
    """The requested eigenvalue is not separated from its neighbours."""

    def __init__(self, message: str, k: float | None = None, band: int | None = None):
        super().__init__(message)
        self.k = k
        self.band = band


class IllConditioned(WannierError):
    """The shifted operator has more than one near-null direction."""

    def __init__(self, message: str, k: float | None = None, band: int | None = None):
        super().__init__(message)
        self.k = k
        self.band = band


class OrthogonalNeighbors(WannierError):
    """Consecutive eigenvectors are (nearly) orthogonal; the k-grid is too coarse."""

    def __init__(self, message: str, k: float | None = None):
        super().__init__(message)
        self.k = k


class NoReliableComponent(WannierError):
    """No Fourier component is large enough to read a phase from."""


class ConfigError(WannierError):
    """Invalid run configuration or input file."""


class GaugeMismatch(WannierError, ValueError):
    """Gauge-corrected states are not shift-periodic (gauge missing or wrong band)."""
