"""Wannier function synthesis, moments and localization diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GaugeMismatch
from .gauge import GaugedTrajectory, GaugePhases, shift_residual
from .transport import Trajectory

SHIFT_REJECT_TOL = 1e-4
_CHUNK = 1 << 22  # complex entries per evaluation block


@dataclass(frozen=True, eq=False)
class WannierRepresentation:
    """Samples of alpha~ on the unfolded frequency grid.

    ``xi`` is uniform with spacing ``Omega/K`` and ``N = (2M+1) K`` points
    covering ``[-(M+1/2) Omega, (M+1/2) Omega)``.  The Fourier transform of
    the Wannier function is ``(2 pi / Omega) * alpha~``.
    """

    xi: np.ndarray
    alpha: np.ndarray
    a: float
    Omega: float
    K: int
    M: int
    phases: GaugePhases

    @property
    def N(self) -> int:
        return self.xi.size


@dataclass(frozen=True)
class Moments:
    center: float
    second: float

    @property
    def variance(self) -> float:
        return self.second - self.center**2


@dataclass(frozen=True)
class DecayDiagnostics:
    e_imag: float
    decay_rate: float
    max_abs: float
    decades: float


def assemble_alpha(gauged: GaugedTrajectory, reject_tol: float = SHIFT_REJECT_TOL) -> WannierRepresentation:
    """Unfold ``y~(k_j)[m]`` into ``alpha~(k_j + m Omega)``.

    Cell boundaries appear twice (``j = K`` of one cell and ``j = 0`` of the
    next); the two estimates are averaged into one sample.  The outermost
    pair (left edge of the first cell, right edge of the last) is merged the
    same way, which makes the uniform-weight sum a periodic trapezoidal rule.
    """
    resid = shift_residual(gauged)
    if not resid <= reject_tol:
        raise GaugeMismatch(
            f"gauge-corrected states are not shift-periodic (residual {resid:.3e} > {reject_tol:g}); "
            "was the gauge applied to the right band?"
        )
    Y = gauged.y
    K = gauged.K
    n = Y.shape[1]
    M = n // 2
    cells = Y[:K].T.copy()  # (2M+1, K), row m holds j = 0..K-1
    cells[1:, 0] = 0.5 * (cells[1:, 0] + Y[K, :-1])
    cells[0, 0] = 0.5 * (cells[0, 0] + Y[K, -1])
    # Row m, column j sits at k_j + m Omega; built from indices so spacing is exact.
    xi = -(M + 0.5) * gauged.Omega + np.arange(n * K) * gauged.Omega / K
    return WannierRepresentation(
        xi=xi, alpha=cells.ravel(), a=gauged.a, Omega=gauged.Omega, K=K, M=M,
        phases=gauged.phases,
    )


def evaluate_wannier(rep: WannierRepresentation, x) -> np.ndarray:
    """``W0(x) = (1/K) sum_l alpha~_l exp(i x xi_l)`` by direct summation.

    On the unfolded grid ``xi = xi_0 + m Omega + j Omega/K`` the exponential
    factors into a cell part and a step part, so the sum becomes a matrix
    product with ``(2M+1) + K`` exponentials per point instead of ``N``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=complex)
    flat = x.ravel()
    res = out.reshape(-1)
    cells = 2 * rep.M + 1
    factored = rep.N == cells * rep.K and np.allclose(
        rep.xi, rep.xi[0] + np.arange(rep.N) * rep.Omega / rep.K, rtol=0, atol=1e-12 * rep.Omega * cells)
    block = max(1, _CHUNK // (rep.K + cells if factored else rep.N))
    if factored:
        table = rep.alpha.reshape(cells, rep.K)
        steps = np.arange(rep.K) * rep.Omega / rep.K
        shifts = rep.xi[0] + np.arange(cells) * rep.Omega
    for s in range(0, flat.size, block):
        xs = flat[s:s + block]
        if factored:
            inner = table @ np.exp(1j * np.outer(steps, xs))  # (cells, n)
            res[s:s + block] = np.einsum("mn,nm->n", inner, np.exp(1j * np.outer(xs, shifts)))
        else:
            res[s:s + block] = np.exp(1j * np.outer(xs, rep.xi)) @ rep.alpha
    return out / rep.K


def wannier_shifted(rep: WannierRepresentation, n: int, x) -> np.ndarray:
    """``W_n(x) = W_0(x - n a)``."""
    return evaluate_wannier(rep, np.asarray(x, dtype=float) - n * rep.a)


def cell_grid(Omega: float, n: int = 1000) -> np.ndarray:
    """``x_j = -pi/Omega + 2 pi j / (n Omega)``, j = 1..n: one unit cell."""
    return -np.pi / Omega + 2 * np.pi * np.arange(1, n + 1) / (n * Omega)


def e_imag(rep: WannierRepresentation, x=None) -> float:
    """``max |Im W0| / max |W0|`` over ``x`` (default: the 1000-point cell grid)."""
    if x is None:
        x = cell_grid(rep.Omega)
    W = evaluate_wannier(rep, x)
    return float(np.abs(W.imag).max() / np.abs(W).max())


def orient(rep: WannierRepresentation, x=None) -> WannierRepresentation:
    """Pick the overall sign so that W0 is positive where ``|W0|`` peaks."""
    if x is None:
        x = cell_grid(rep.Omega)
    W = evaluate_wannier(rep, x)
    if W[np.argmax(np.abs(W))].real >= 0:
        return rep
    return replace(rep, alpha=-rep.alpha, phases=rep.phases.flipped())


def compute_center(phases: GaugePhases, a: float, n: int = 0) -> float:
    """Center ``(phi_zak + 2 pi n) a / (2 pi)`` of the optimally gauged function."""
    return (phases.phi_zak + 2 * np.pi * n) * a / (2 * np.pi)


def compute_variance(traj: Trajectory, a: float | None = None) -> float:
    """Optimal spread ``a^2/(2 pi) * int ||y'(k)||^2 dk`` over the zone.

    Uses the composite trapezoid rule on the stored derivatives; the
    integrand is periodic and analytic, so this converges spectrally.
    """
    if a is None:
        a = traj.a
    if traj.dy is None or not np.all(np.isfinite(traj.dy)):
        raise ValueError("trajectory has no stored derivatives")
    integrand = np.sum(np.abs(traj.dy) ** 2, axis=1)
    return float(a**2 / (2 * np.pi) * np.trapezoid(integrand, traj.k))


def compute_moments(gauged: GaugedTrajectory) -> Moments:
    """Center and second moment of W0 from gauge-corrected states (any admissible gauge)."""
    a = gauged.a
    scale = a**2 / (2 * np.pi)
    inner = np.einsum("ij,ij->i", gauged.y.conj(), gauged.dy)
    center = scale * np.trapezoid((1j * inner).real, gauged.k)
    second = scale * np.trapezoid(np.sum(np.abs(gauged.dy) ** 2, axis=1), gauged.k)
    return Moments(center=float(center), second=float(second))


def decay_diagnostics(rep: WannierRepresentation, window: tuple[float, float], n_points: int) -> DecayDiagnostics:
    """Realty and exponential-decay summary of W0 on a uniform grid over ``window``.

    The envelope is the maximum of ``|W0|`` in each unit cell; ``decay_rate``
    is the least-squares slope of ``ln`` envelope against distance from the
    center (per unit length, negative for a localized function).
    """
    lo, hi = window
    x = np.linspace(lo, hi, n_points)
    W = evaluate_wannier(rep, x)
    absW = np.abs(W)
    max_abs = float(absW.max())
    center = compute_center(rep.phases, rep.a)
    cell = np.floor((x - center) / rep.a + 0.5).astype(int)
    dist, env = [], []
    for c in np.unique(cell):
        if c == 0:
            continue
        sel = cell == c
        i = np.argmax(absW[sel])
        dist.append(abs(x[sel][i] - center))
        env.append(absW[sel][i])
    if len(env) < 4:
        raise ValueError(f"window {window} holds only {len(env)} envelope cells; need at least 4")
    dist = np.array(dist)
    env = np.maximum(np.array(env), np.finfo(float).tiny)
    slope = np.polyfit(dist, np.log(env), 1)[0]
    return DecayDiagnostics(
        e_imag=float(np.abs(W.imag).max() / max_abs),
        decay_rate=float(slope),
        max_abs=max_abs,
        decades=float(np.log10(max_abs) - np.log10(env.min())),
    )
