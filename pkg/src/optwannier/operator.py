"""Fourier-domain Bloch operators D(k), S(k), Theta(k) on 2M+1 modes."""

from __future__ import annotations

import numpy as np

from .spectral import PeriodicPotential, build_potential_matrix


def fourier_index(M: int) -> np.ndarray:
    """Fourier index ``m - M - 1`` of each 1-based matrix row ``m = 1..2M+1``.

    This is the only place the row <-> Fourier-mode map is defined.
    """
    return np.arange(-M, M + 1)


class OperatorWorkspace:
    """Assembles k-dependent operators for one potential.

    Matrices returned by :meth:`hamiltonian` and :meth:`shifted_operator`
    are fresh arrays; the workspace itself owns only a scratch buffer and is
    not meant to be shared between threads.
    """

    def __init__(self, pot: PeriodicPotential):
        self.pot = pot
        self.a = pot.a
        self.M = pot.M
        self.Omega = pot.Omega
        self.n = 2 * self.M + 1
        self.potential_matrix = build_potential_matrix(pot)
        self.potential_matrix.setflags(write=False)
        self.shifts = fourier_index(self.M) * self.Omega
        self._scratch = np.empty((self.n, self.n), dtype=complex)

    def kinetic_diagonal(self, k: float) -> np.ndarray:
        return (k + self.shifts) ** 2

    def velocity_diagonal(self, k: float) -> np.ndarray:
        return 2.0 * (k + self.shifts)

    def hamiltonian(self, k: float) -> np.ndarray:
        H = self.potential_matrix.copy()
        H[np.diag_indices(self.n)] += self.kinetic_diagonal(k)
        return H

    def shifted_operator(self, k: float, E: float, out: np.ndarray | None = None) -> np.ndarray:
        """``D(k) + V - E I``; writes into ``out`` when given (used by the transport loop)."""
        if out is None:
            out = np.empty((self.n, self.n), dtype=complex)
        np.copyto(out, self.potential_matrix)
        out[np.diag_indices(self.n)] += self.kinetic_diagonal(k) - E
        return out

    def scratch_theta(self, k: float, E: float) -> np.ndarray:
        return self.shifted_operator(k, E, out=self._scratch)


# Functional spellings for callers that prefer them.

def kinetic_diagonal(k: float, ws: OperatorWorkspace) -> np.ndarray:
    return ws.kinetic_diagonal(k)


def velocity_diagonal(k: float, ws: OperatorWorkspace) -> np.ndarray:
    return ws.velocity_diagonal(k)


def hamiltonian(k: float, ws: OperatorWorkspace) -> np.ndarray:
    return ws.hamiltonian(k)


def shifted_operator(k: float, E: float, ws: OperatorWorkspace) -> np.ndarray:
    return ws.shifted_operator(k, E)
