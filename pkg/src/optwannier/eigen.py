"""Band-resolved eigenpairs of the discretized Bloch Hamiltonian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBand
from .operator import OperatorWorkspace

GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BandState:
    """A point on a band: quasimomentum, energy and Fourier coefficients.

    ``y`` is normalized so that ``||y||^2 = 1/a``; with that choice the
    Wannier function built from it has unit L2 norm.
    """

    k: float
    E: float
    y: np.ndarray


def band_eigenpair(ws: OperatorWorkspace, k: float, band: int, gap_tol: float = GAP_TOL) -> BandState:
    """The ``band``-th smallest eigenpair (1-based) of ``D(k) + V``.

    The phase of ``y`` is whatever LAPACK returns; callers fix it later.

    Raises
    ------
    DegenerateBand
        If the relative gap to either neighbouring eigenvalue is below ``gap_tol``.
    """
    if band < 1 or band > ws.n:
        raise ValueError(f"band index must be in 1..{ws.n}, got {band}")
    H = ws.hamiltonian(k)
    w, U = np.linalg.eigh(H)
    i = band - 1
    scale = max(abs(w[i]), np.abs(w).max() * np.finfo(float).eps, 1.0)
    gaps = []
    if i > 0:
        gaps.append(w[i] - w[i - 1])
    if i < ws.n - 1:
        gaps.append(w[i + 1] - w[i])
    if gaps and min(gaps) < gap_tol * scale:
        raise DegenerateBand(
            f"band {band} is degenerate at k={k:.17g} (gap {min(gaps):.3e})", k=float(k), band=band
        )
    y = U[:, i] / np.sqrt(ws.a)
    return BandState(k=float(k), E=float(w[i]), y=y)


def band_energies(ws: OperatorWorkspace, k: float, nbands: int | None = None) -> np.ndarray:
    w = np.linalg.eigvalsh(ws.hamiltonian(k))
    return w if nbands is None else w[:nbands]


def rayleigh_quotient(ws: OperatorWorkspace, k: float, y: np.ndarray) -> float:
    y = np.asarray(y)
    nrm = np.vdot(y, y).real
    if nrm == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float(np.vdot(y, ws.hamiltonian(k) @ y).real / nrm)
