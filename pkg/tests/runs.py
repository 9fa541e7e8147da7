"""Cached solver runs shared across test modules."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache

import numpy as np

from optwannier import OperatorWorkspace, PeriodicPotential
from optwannier.gauge import GaugedTrajectory, GaugePhases, apply_gauge, extract_phases
from optwannier.transport import Trajectory, endpoint_error, integrate_band
from optwannier.wannier import WannierRepresentation, assemble_alpha, orient

A = 2 * np.pi
TRUNCATION = {"gaussian5": 10, "asym-exp": 15}


@dataclass(frozen=True, eq=False)
class Run:
    ws: OperatorWorkspace
    traj: Trajectory
    err: float
    phases: GaugePhases
    gauged: GaugedTrajectory
    rep: WannierRepresentation


@cache
def workspace(name: str) -> OperatorWorkspace:
    return OperatorWorkspace(PeriodicPotential.builtin(name, A, TRUNCATION[name]))


@cache
def run(name: str, band: int, K: int) -> Run:
    """Table row ``K`` (grid points), i.e. ``K - 1`` RK4 steps."""
    ws = workspace(name)
    traj = integrate_band(ws, band, K - 1)
    err = endpoint_error(traj, ws)
    phases = extract_phases(traj)
    gauged = apply_gauge(traj, phases)
    rep = orient(assemble_alpha(gauged, reject_tol=max(1e-4, 10 * err)))
    return Run(ws, traj, err, phases, gauged, rep)
