"""End-to-end runs and convergence studies.

A run goes: potential -> initial eigenpair -> RK4 transport -> phase
correction -> alpha~ assembly (timed together), then evaluates W0 on the
requested x-grid and writes plot-ready tables.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .eigen import band_eigenpair
from .errors import WannierError
from .gauge import apply_gauge, extract_phases, shift_residual
from .operator import OperatorWorkspace
from .transport import Trajectory, endpoint_error, integrate_band
from .wannier import (
    WannierRepresentation,
    assemble_alpha,
    compute_center,
    compute_variance,
    e_imag,
    evaluate_wannier,
    orient,
)

TIMED_STAGES = ("potential", "initial", "transport", "phase", "assemble")


@dataclass
class RunRecord:
    config: dict
    band: int
    K: int
    steps: int
    phi_zak: float
    phi_0: float
    sign: int
    E_start: float
    E_end: float
    E_rk4: float
    E_imag: float
    center: float
    variance: float
    shift_residual: float
    zak_spread: float
    renormalizations: int
    max_drift: float
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def __post_init__(self):
        for name in ("phi_zak", "phi_0", "E_start", "E_end", "E_rk4", "E_imag", "center", "variance"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"run produced a non-finite {name}")

    @property
    def time(self) -> float:
        """Wall time from potential setup through alpha~ assembly."""
        return float(sum(self.timings[s] for s in TIMED_STAGES))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["time"] = self.time
        return d


@dataclass
class RunResult:
    record: RunRecord
    trajectory: Trajectory
    representation: WannierRepresentation
    x: np.ndarray
    W: np.ndarray


def _stopwatch():
    t = time.perf_counter()
    while True:
        now = time.perf_counter()
        yield now - t
        t = now


def execute(config: RunConfig, K: int | None = None, band: int | None = None) -> RunResult:
    """Run the full pipeline for one ``(K, band)`` pair without writing files."""
    K = config.K[0] if K is None else K
    band = config.band[0] if band is None else band
    tol = config.tolerances
    steps = config.steps(K)
    timings = {}
    clock = _stopwatch()
    next(clock)

    pot = config.build_potential()
    ws = OperatorWorkspace(pot)
    timings["potential"] = next(clock)

    initial = band_eigenpair(ws, -ws.Omega / 2, band, tol.gap)
    timings["initial"] = next(clock)

    traj = integrate_band(ws, band, steps, initial=initial, drift_tol=tol.drift,
                          cond_tol=tol.cond, gap_tol=tol.gap)
    timings["transport"] = next(clock)

    phases = extract_phases(traj)
    gauged = apply_gauge(traj, phases)
    timings["phase"] = next(clock)

    # The shift residual of a correctly gauged band is bounded by 10 E_RK4,
    # so coarse grids are held to that level rather than the fixed floor.
    err = endpoint_error(traj, ws, tol.gap)
    timings["endpoint"] = next(clock)
    rep = orient(assemble_alpha(gauged, reject_tol=max(tol.shift, 10 * err)))
    timings["assemble"] = next(clock)

    eim = e_imag(rep)
    variance = compute_variance(traj)
    timings["diagnostics"] = next(clock)

    x = np.linspace(config.xmin, config.xmax, config.nx)
    W = evaluate_wannier(rep, x)
    timings["evaluate"] = next(clock)

    record = RunRecord(
        config=config.with_run(K, band).to_dict(),
        band=band,
        K=K,
        steps=steps,
        phi_zak=rep.phases.phi_zak,
        phi_0=rep.phases.phi_0,
        sign=rep.phases.sign,
        E_start=float(traj.E[0]),
        E_end=float(traj.E[-1]),
        E_rk4=err,
        E_imag=eim,
        center=compute_center(rep.phases, pot.a),
        variance=variance,
        shift_residual=shift_residual(gauged),
        zak_spread=phases.per_component_spread,
        renormalizations=traj.renormalizations,
        max_drift=traj.max_drift,
        timings=timings,
    )
    return RunResult(record=record, trajectory=traj, representation=rep, x=x, W=W)


# -- serialization -----------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv(header: str, columns: list[str], rows: np.ndarray) -> str:
    lines = [f"# {header}", ",".join(columns)]
    lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def alpha_table(rep: WannierRepresentation) -> str:
    rows = np.column_stack([rep.xi, rep.alpha.real, rep.alpha.imag])
    return _csv("alpha~(xi) on the unfolded frequency grid; W0 transform = (2 pi/Omega) alpha~",
                ["xi", "re", "im"], rows)


def wannier_table(x: np.ndarray, W: np.ndarray) -> str:
    with np.errstate(divide="ignore"):
        logabs = np.log10(np.abs(W))
    rows = np.column_stack([x, W.real, W.imag, logabs])
    return _csv("W0(x) by trapezoidal synthesis; log10abs = log10|W0|", ["x", "re", "im", "log10abs"], rows)


def band_table(traj: Trajectory) -> str:
    return _csv(f"integrated band energy E(k), band {traj.band}", ["k", "E"],
                np.column_stack([traj.k, traj.E]))


def write_run(result: RunResult, out: str | Path) -> Path:
    out = Path(out)
    _atomic_write(out / "alpha.csv", alpha_table(result.representation))
    _atomic_write(out / "wannier.csv", wannier_table(result.x, result.W))
    _atomic_write(out / "bands.csv", band_table(result.trajectory))
    _atomic_write(out / "record.json", json.dumps(result.record.to_dict(), indent=2) + "\n")
    return out


def run_pipeline(config: RunConfig, out: str | Path | None = None) -> RunRecord:
    """Run the first ``(K, band)`` of ``config``; write tables when an output dir is set."""
    result = execute(config)
    out = out if out is not None else config.out
    if out is not None:
        write_run(result, out)
    return result.record


def band_energy_table(config: RunConfig, n_k: int | None = None) -> dict:
    """Direct eigenvalues on a uniform zone grid: ``{"k": ks, band: E_band(ks), ...}``."""
    pot = config.build_potential()
    ws = OperatorWorkspace(pot)
    n_k = n_k or config.steps(config.K[0]) + 1
    ks = np.linspace(-ws.Omega / 2, ws.Omega / 2, n_k)
    w = np.array([np.linalg.eigvalsh(ws.hamiltonian(k)) for k in ks])
    return {"k": ks, **{b: w[:, b - 1] for b in config.band}}


# -- convergence studies -----------------------------------------------------

@dataclass
class StudyRow:
    K: int
    band: int
    time: float | None = None
    E_rk4: float | None = None
    E_imag: float | None = None
    error: dict | None = None


@dataclass
class StudyResult:
    rows: list[StudyRow]
    orders: dict[int, float | None]

    def lookup(self, K: int, band: int) -> StudyRow:
        return next(r for r in self.rows if r.K == K and r.band == band)


def _study_task(args):
    config, K, band = args
    try:
        rec = execute(config, K, band).record
        return StudyRow(K=K, band=band, time=rec.time, E_rk4=rec.E_rk4, E_imag=rec.E_imag)
    except WannierError as exc:
        return StudyRow(K=K, band=band, error=exc.to_dict())


def fit_order(Ks, errors, lo: float = 1e-12, hi: float = 1e-2) -> float | None:
    """Convergence order ``-d log E / d log K`` fitted on rows with ``lo < E < hi``.

    The window drops the pre-asymptotic start and the roundoff floor (about
    1e-14 for unit-norm states, so ``lo`` keeps a factor 100 margin); at
    least three points are required.
    """
    K = np.asarray(Ks, dtype=float)
    E = np.asarray(errors, dtype=float)
    keep = np.isfinite(E) & (E > lo) & (E < hi)
    if keep.sum() < 3:
        return None
    return float(-np.polyfit(np.log(K[keep]), np.log(E[keep]), 1)[0])


def convergence_study(config: RunConfig, jobs: int = 1) -> StudyResult:
    """One run per ``(K, band)``; failures are recorded and the study continues."""
    if any(b <= a for a, b in zip(config.K, config.K[1:])):
        raise ValueError(f"K list must be strictly increasing, got {config.K}")
    tasks = [(config, K, band) for band in config.band for K in config.K]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_study_task, tasks))
    else:
        rows = [_study_task(t) for t in tasks]
    orders = {}
    for band in config.band:
        sel = [r for r in rows if r.band == band and r.E_rk4 is not None]
        orders[band] = fit_order([r.K for r in sel], [r.E_rk4 for r in sel])
    return StudyResult(rows=rows, orders=orders)


def study_table(study: StudyResult) -> str:
    """CSV with one row per K: time (largest over bands) and E_RK4 / E_imag per band."""
    bands = sorted({r.band for r in study.rows})
    Ks = sorted({r.K for r in study.rows})
    cols = ["K", "time"] + [f"{name}_{b}" for b in bands for name in ("E_rk4", "E_imag")]
    lines = ["# convergence study; empty cells mark failed runs",
             ",".join(cols)]
    for K in Ks:
        cells = [str(K)]
        times = [r.time for r in study.rows if r.K == K and r.time is not None]
        cells.append(f"{max(times):.3e}" if times else "")
        for b in bands:
            r = study.lookup(K, b)
            cells += [f"{r.E_rk4:.3e}" if r.E_rk4 is not None else "",
                      f"{r.E_imag:.3e}" if r.E_imag is not None else ""]
        lines.append(",".join(cells))
    order_txt = ", ".join(
        f"band {b}: {'n/a' if o is None else f'{o:.2f}'}" for b, o in study.orders.items()
    )
    lines.append(f"# fitted order: {order_txt}")
    return "\n".join(lines) + "\n"


def write_study(study: StudyResult, out: str | Path) -> Path:
    out = Path(out)
    _atomic_write(out / "study.csv", study_table(study))
    payload = {"rows": [asdict(r) for r in study.rows],
               "orders": {str(b): o for b, o in study.orders.items()},
               "version": __version__}
    _atomic_write(out / "study.json", json.dumps(payload, indent=2) + "\n")
    return out
