"""Zak phase, realty phase and the optimal linear gauge.

After parallel transport the endpoint vectors satisfy, up to integration
error,

    y_end[m] = exp(i phi_zak) * y_start[m + 1]

(the shift by one Fourier index is the zone-boundary relabelling).  The
gauge ``exp(-i phi_zak k / Omega)`` removes that jump; a constant phase
``exp(-i phi_0)`` then makes the Wannier function real.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoReliableComponent
from .transport import Trajectory

COMPONENT_TOL = 1e-12


def _wrap(angle):
    """Map to (-pi, pi]."""
    out = np.angle(np.exp(1j * np.asarray(angle)))
    return np.where(out <= -np.pi, out + 2 * np.pi, out)


@dataclass(frozen=True)
class GaugePhases:
    """Phases fixing the gauge of a transported band.

    ``phi_0`` is only defined modulo pi; ``sign`` (+1 or -1) records which
    of the two real Wannier functions ``+W`` / ``-W`` was picked.
    """

    phi_zak: float
    phi_0: float = 0.0
    sign: int = 1
    per_component_spread: float = 0.0

    def flipped(self) -> "GaugePhases":
        return replace(self, sign=-self.sign)


@dataclass(frozen=True)
class PerturbedGauge:
    """A non-optimal admissible gauge, used to probe the variance penalty.

    ``c`` maps Fourier index ``m != 0`` to the coefficient of
    ``exp(i m a k)`` in the Berry connection.
    """

    n: int = 0
    c: dict[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        for m, cm in self.c.items():
            if m == 0:
                raise ValueError("the zeroth coefficient is fixed by the Zak phase")
            partner = self.c.get(-m, 0.0)
            if abs(partner - np.conj(cm)) > 1e-14 * max(1.0, abs(cm)):
                raise ValueError(f"c[{-m}] must equal conj(c[{m}]) for a real connection")

    @property
    def penalty(self) -> float:
        return float(sum(abs(cm) ** 2 for cm in self.c.values()))


def _shift_products(y_start, y_end):
    return np.asarray(y_end)[:-1] * np.conj(np.asarray(y_start)[1:])


def _reliable(products, y_start, y_end):
    floor = COMPONENT_TOL * np.linalg.norm(y_start) * np.linalg.norm(y_end)
    mask = (np.abs(products) >= floor) & (products != 0)
    if not mask.any():
        raise NoReliableComponent("no Fourier component is large enough to read a phase from")
    return mask


def zak_phase_components(y_start, y_end) -> tuple[np.ndarray, np.ndarray]:
    """Per-component estimates ``arg(y_end[m] / y_start[m+1])`` and their weights."""
    p = _shift_products(y_start, y_end)
    mask = _reliable(p, y_start, y_end)
    return np.angle(p[mask]), np.abs(p[mask])


def extract_zak_phase(y_start, y_end) -> float:
    """Zak phase from the transported endpoints, in (-pi, pi].

    Components are combined by a magnitude-weighted circular mean, i.e. the
    argument of ``sum_m y_end[m] * conj(y_start[m+1])`` over reliable ``m``.
    """
    p = _shift_products(y_start, y_end)
    mask = _reliable(p, y_start, y_end)
    return float(_wrap(np.angle(p[mask].sum())))


def zak_phase_spread(y_start, y_end, phi_zak: float) -> float:
    angles, _ = zak_phase_components(y_start, y_end)
    return float(np.abs(_wrap(angles - phi_zak)).max())


def extract_realty_phase(y_start, y_end) -> float:
    """Half-phase ``phi_0`` in (-pi/2, pi/2] making the Wannier function real.

    Uses ``exp(2 i phi_0) = y_start[m] / conj(y_end[-m])``, averaged over all
    reliable components with magnitude weights.
    """
    y_start = np.asarray(y_start)
    y_end = np.asarray(y_end)
    p = y_start * y_end[::-1]
    floor = COMPONENT_TOL * np.linalg.norm(y_start) * np.linalg.norm(y_end)
    mask = (np.abs(p) >= floor) & (p != 0)
    if not mask.any():
        raise NoReliableComponent("no Fourier component is large enough to read a phase from")
    phi = 0.5 * float(np.angle(p[mask].sum()))
    if phi <= -np.pi / 2:
        phi += np.pi
    return phi


def extract_phases(traj: Trajectory) -> GaugePhases:
    y0, yK = traj.y[0], traj.y[-1]
    phi_zak = extract_zak_phase(y0, yK)
    return GaugePhases(
        phi_zak=phi_zak,
        phi_0=extract_realty_phase(y0, yK),
        per_component_spread=zak_phase_spread(y0, yK, phi_zak),
    )


@dataclass(frozen=True, eq=False)
class GaugedTrajectory:
    """Gauge-corrected coefficient vectors ``y~`` and derivatives on the k-grid."""

    k: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    phase: np.ndarray
    connection: np.ndarray
    phases: GaugePhases
    a: float
    Omega: float
    band: int

    @property
    def K(self) -> int:
        return self.k.size - 1


def _gauge(traj: Trajectory, phases: GaugePhases, phi, dphi) -> GaugedTrajectory:
    factor = phases.sign * np.exp(-1j * (phases.phi_0 + phi))
    y = factor[:, None] * traj.y
    dy = factor[:, None] * (traj.dy - 1j * dphi[:, None] * traj.y)
    return GaugedTrajectory(
        k=traj.k, y=y, dy=dy, phase=phi, connection=dphi, phases=phases,
        a=traj.a, Omega=traj.Omega, band=traj.band,
    )


def apply_gauge(traj: Trajectory, phases: GaugePhases) -> GaugedTrajectory:
    """Apply ``y~(k_j) = sign * exp(-i phi_0) exp(-i phi_zak k_j / Omega) y(k_j)``."""
    phi = phases.phi_zak * traj.k / traj.Omega
    dphi = np.full_like(traj.k, phases.phi_zak / traj.Omega)
    return _gauge(traj, phases, phi, dphi)


def apply_perturbed_gauge(traj: Trajectory, phases: GaugePhases, pert: PerturbedGauge) -> GaugedTrajectory:
    """Gauge with connection ``(phi_zak + 2 pi n)/Omega + sum_m c_m exp(i m a k)``."""
    k = traj.k
    a = traj.a
    slope = (phases.phi_zak + 2 * np.pi * pert.n) / traj.Omega
    phi = slope * k
    dphi = np.full_like(k, slope)
    for m, cm in pert.c.items():
        wave = np.exp(1j * m * a * k)
        phi = phi + (cm * wave / (1j * m * a)).real
        dphi = dphi + (cm * wave).real
    return _gauge(traj, phases, phi, dphi)


def right_shift(v: np.ndarray) -> np.ndarray:
    """Truncated right shift ``R``: ``(Rv)[m] = v[m-1]``, zero-filled at the left edge."""
    out = np.zeros_like(v)
    out[1:] = v[:-1]
    return out


def shift_residual(gauged: GaugedTrajectory, interior: bool = False) -> float:
    """``||y~(-Omega/2) - R y~(+Omega/2)|| / ||y~||``; zero for an exactly periodic alpha.

    ``R`` zero-fills the lowest Fourier mode, so the plain residual also
    contains ``|y~(-Omega/2)[-M]|``, the truncation error in ``M``.  With
    ``interior=True`` that mode is skipped and only the transport error
    remains.
    """
    y0 = gauged.y[0]
    diff = y0 - right_shift(gauged.y[-1])
    if interior:
        diff = diff[1:]
    return float(np.linalg.norm(diff) / np.linalg.norm(y0))


def berry_connection(gauged: GaugedTrajectory) -> np.ndarray:
    """``i y~* y~'`` at each grid node; equals ``phi'(k) / a`` in exact arithmetic."""
    return 1j * np.einsum("ij,ij->i", gauged.y.conj(), gauged.dy)
