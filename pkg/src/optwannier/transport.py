"""Parallel transport of a band eigenvector across the Brillouin zone.

The eigenvector ODE is

    y'(k) = -Theta(k)^+ S(k) y(k),     E'(k) = y* S y / y* y,

where ``Theta = D(k) + V - E I`` and ``^+`` is the SVD pseudoinverse with
the single smallest singular mode dropped.  It is integrated with classical
fixed-step RK4 from ``-Omega/2`` to ``+Omega/2``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .eigen import GAP_TOL, BandState, band_eigenpair, rayleigh_quotient
from .errors import IllConditioned, OrthogonalNeighbors
from .operator import OperatorWorkspace

COND_TOL = 1e-10
DRIFT_TOL = 1e-10
NEIGHBOR_TOL = 1e-8

ENERGY_MODES = ("integrated", "rayleigh")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States of one band on the grid ``k_j = -Omega/2 + j Omega/K``, j = 0..K.

    Attributes
    ----------
    k, E : ndarray, shape (K+1,)
        Grid and integrated band energy.
    y, dy : ndarray, shape (K+1, 2M+1)
        Transported coefficient vectors and their k-derivatives.
    min_sigma : ndarray, shape (K,)
        Smallest retained singular value of Theta at the start of each step.
    max_drift : float
        Largest ``| ||y||^2 - 1/a |`` seen before any renormalization.
    """

    k: np.ndarray
    E: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    band: int
    a: float
    Omega: float
    method: str = "rk4"
    min_sigma: np.ndarray | None = None
    renormalizations: int = 0
    max_drift: float = 0.0
    wall_time: float = 0.0

    @property
    def K(self) -> int:
        return self.k.size - 1

    @property
    def dk(self) -> float:
        return float(self.k[1] - self.k[0])

    @property
    def states(self) -> list[BandState]:
        return [BandState(float(k), float(E), y) for k, E, y in zip(self.k, self.E, self.y)]

    @property
    def derivatives(self) -> np.ndarray:
        return self.dy


def _rhs(ws: OperatorWorkspace, k, y, E, energy="integrated", project=True, band=None,
         cond_tol=COND_TOL):
    s = ws.velocity_diagonal(k)
    z = s * y
    yy = np.vdot(y, y).real
    dE = np.vdot(y, z).real / yy
    if energy == "rayleigh":
        E = rayleigh_quotient(ws, k, y)
    theta = ws.scratch_theta(k, E)
    U, sig, Vh = np.linalg.svd(theta)
    if sig[-2] < cond_tol * sig[0]:
        raise IllConditioned(
            f"Theta has two near-null directions at k={k:.17g} "
            f"(sigma={sig[-2]:.3e}, |Theta|={sig[0]:.3e})",
            k=float(k),
            band=band,
        )
    coef = (U[:, :-1].conj().T @ z) / sig[:-1]
    dy = -(Vh[:-1].conj().T @ coef)
    if project:
        # Exact solutions satisfy y* y' = 0; remove the drift the stages pick up.
        dy -= y * (np.vdot(y, dy) / yy)
    return dy, dE, sig[-2]


def transport_rhs(
    ws: OperatorWorkspace,
    k: float,
    y: np.ndarray,
    E: float,
    energy: str = "integrated",
    project: bool = True,
) -> tuple[np.ndarray, float]:
    """Right-hand side ``(y', E')`` of the transport ODE.

    With ``project=True`` (the default) the component of ``y'`` along ``y``
    is removed, so ``y* y' = 0`` holds to roundoff at every stage.

    Raises
    ------
    IllConditioned
        If the second-smallest singular value of Theta is below
        ``COND_TOL * ||Theta||``.
    """
    dy, dE, _ = _rhs(ws, k, np.asarray(y, dtype=complex), E, energy, project)
    return dy, dE


def _rk4(ws, k, dk, y, E, energy, project, band=None, first=None, cond_tol=COND_TOL):
    opts = (energy, project, band, cond_tol)
    if first is None:
        first = _rhs(ws, k, y, E, *opts)
    w1, f1, _ = first
    w2, f2, _ = _rhs(ws, k + dk / 2, y + dk / 2 * w1, E + dk / 2 * f1, *opts)
    w3, f3, _ = _rhs(ws, k + dk / 2, y + dk / 2 * w2, E + dk / 2 * f2, *opts)
    w4, f4, _ = _rhs(ws, k + dk, y + dk * w3, E + dk * f3, *opts)
    y_next = y + dk / 6 * (w1 + 2 * w2 + 2 * w3 + w4)
    E_next = E + dk / 6 * (f1 + 2 * f2 + 2 * f3 + f4)
    return y_next, E_next


def rk4_step(
    ws: OperatorWorkspace,
    k: float,
    dk: float,
    y: np.ndarray,
    E: float,
    energy: str = "integrated",
    project: bool = True,
) -> tuple[np.ndarray, float]:
    """One classical RK4 step of size ``dk > 0`` for ``(y, E)``."""
    if not dk > 0:
        raise ValueError(f"step must be positive, got {dk!r}")
    return _rk4(ws, k, dk, np.asarray(y, dtype=complex), float(E), energy, project)


def integrate_band(
    ws: OperatorWorkspace,
    band: int,
    K: int,
    initial: BandState | None = None,
    energy: str = "integrated",
    project: bool = True,
    drift_tol: float = DRIFT_TOL,
    reverse: bool = False,
    cond_tol: float = COND_TOL,
    gap_tol: float = GAP_TOL,
) -> Trajectory:
    """Transport band ``band`` with ``K`` RK4 steps of size ``Omega/K``.

    The initial state defaults to the direct eigensolve at ``-Omega/2``
    (``+Omega/2`` when ``reverse``).  After each step the vector is rescaled
    to ``||y||^2 = 1/a`` if its drift exceeds ``drift_tol``.

    With ``reverse=True`` the integration runs from ``+Omega/2`` down to
    ``-Omega/2``; the returned arrays are still ordered along that path
    (``k[0] = +Omega/2``).
    """
    if K < 2:
        raise ValueError(f"need at least 2 steps, got K={K}")
    if energy not in ENERGY_MODES:
        raise ValueError(f"energy must be one of {ENERGY_MODES}, got {energy!r}")
    half = ws.Omega / 2
    start, sign = (half, -1.0) if reverse else (-half, 1.0)
    if initial is None:
        initial = band_eigenpair(ws, start, band, gap_tol)
    elif not np.isclose(initial.k, start, rtol=0, atol=1e-14 * ws.Omega):
        raise ValueError(f"initial state must sit at k={start}, got {initial.k}")

    t0 = time.perf_counter()
    j = np.arange(K + 1)
    ks = start + sign * j * ws.Omega / K
    ks[-1] = -start  # land exactly on the zone edge
    dk = sign * ws.Omega / K
    n = ws.n
    Y = np.empty((K + 1, n), dtype=complex)
    dY = np.empty((K + 1, n), dtype=complex)
    Es = np.empty(K + 1)
    min_sigma = np.empty(K)
    target = 1.0 / ws.a
    y = np.array(initial.y, dtype=complex)
    E = float(initial.E)
    Y[0], Es[0] = y, E
    renorm = 0
    max_drift = abs(np.vdot(y, y).real - target)

    for i in range(K):
        first = _rhs(ws, ks[i], y, E, energy, project, band, cond_tol)
        dY[i] = first[0]
        min_sigma[i] = first[2]
        y, E = _rk4(ws, ks[i], dk, y, E, energy, project, band, first=first, cond_tol=cond_tol)
        drift = abs(np.vdot(y, y).real - target)
        max_drift = max(max_drift, drift)
        if drift > drift_tol:
            y *= np.sqrt(target / np.vdot(y, y).real)
            renorm += 1
        Y[i + 1], Es[i + 1] = y, E
    dY[K] = _rhs(ws, ks[K], y, E, energy, project, band, cond_tol)[0]
    elapsed = time.perf_counter() - t0

    return Trajectory(
        k=ks, E=Es, y=Y, dy=dY, band=band, a=ws.a, Omega=ws.Omega, method="rk4",
        min_sigma=min_sigma, renormalizations=renorm, max_drift=float(max_drift),
        wall_time=elapsed,
    )


def eigen_grid(ws: OperatorWorkspace, band: int, K: int) -> Trajectory:
    """Independent eigensolves on the transport grid (phases arbitrary, no derivatives)."""
    ks = -ws.Omega / 2 + np.arange(K + 1) * ws.Omega / K
    ks[-1] = ws.Omega / 2
    states = [band_eigenpair(ws, k, band) for k in ks]
    Y = np.array([s.y for s in states])
    Es = np.array([s.E for s in states])
    return Trajectory(
        k=ks, E=Es, y=Y, dy=np.full_like(Y, np.nan), band=band, a=ws.a, Omega=ws.Omega,
        method="eigensolve",
    )


def align_phase(reference: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Multiply ``v`` by the unimodular factor that maximizes ``Re(reference* v)``."""
    overlap = np.vdot(reference, v)
    return v * np.exp(-1j * np.angle(overlap))


def discrete_transport(states: np.ndarray | Trajectory) -> np.ndarray:
    """Phase-align independently computed eigenvectors along the grid.

    Each ``v[j+1]`` becomes ``exp(-i beta_j) v[j+1]`` with
    ``beta_j = arg(v[j]* v[j+1])``, using the already aligned ``v[j]``.
    This is a second-order approximation of parallel transport.
    """
    if isinstance(states, Trajectory):
        V = states.y
        ks = states.k
    else:
        V = np.asarray(states, dtype=complex)
        ks = None
    out = V.copy()
    for j in range(len(out) - 1):
        overlap = np.vdot(out[j], out[j + 1])
        scale = np.linalg.norm(out[j]) * np.linalg.norm(out[j + 1])
        if abs(overlap) < NEIGHBOR_TOL * scale:
            raise OrthogonalNeighbors(
                f"states {j} and {j + 1} are nearly orthogonal (|overlap|={abs(overlap):.3e}); "
                "refine the k-grid",
                k=None if ks is None else float(ks[j]),
            )
        out[j + 1] *= np.exp(-1j * np.angle(overlap))
    return out


def discrete_transport_band(ws: OperatorWorkspace, band: int, K: int,
                            initial: np.ndarray | None = None) -> Trajectory:
    """Discrete parallel transport from direct eigensolves, optionally seeded with ``initial``."""
    grid = eigen_grid(ws, band, K)
    Y = grid.y.copy()
    if initial is not None:
        Y[0] = initial
    Y = discrete_transport(Y)
    return Trajectory(
        k=grid.k, E=grid.E, y=Y, dy=grid.dy, band=band, a=ws.a, Omega=ws.Omega,
        method="discrete-transport",
    )


def endpoint_error(traj: Trajectory, ws: OperatorWorkspace, gap_tol: float = GAP_TOL) -> float:
    """E_RK4: distance from the transported endpoint to the direct eigenvector.

    The direct eigenvector at ``+Omega/2`` is phase-aligned and rescaled to
    the endpoint's norm before differencing; the result is reported
    relative to ``||y^(K)||`` (i.e. for unit-normalized vectors).
    """
    yK = traj.y[-1]
    ref = band_eigenpair(ws, traj.k[-1], traj.band, gap_tol).y
    nrm = np.linalg.norm(yK)
    ref = align_phase(yK, ref) * (nrm / np.linalg.norm(ref))
    return float(np.linalg.norm(yK - ref) / nrm)
