"""Periodic potentials and their truncated Fourier representation.

Coefficients are stored center-indexed: ``coeffs[M + j]`` holds the
coefficient of ``exp(i j Omega x)`` for ``j = -M..M``.  The interpolant is

    V(x) = sum_{j=-M}^{M} coeffs[M + j] * exp(i j Omega x)

so the analysis transform carries the 1/(2M+1) factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError

HERMITIAN_RTOL = 1e-12


def sample_grid(a: float, M: int) -> np.ndarray:
    """Equispaced abscissae ``t_j = -a/2 + (j-1) a/(2M+1)``, j = 1..2M+1."""
    if not a > 0:
        raise ValueError(f"lattice constant must be positive, got {a!r}")
    if int(M) != M or M < 1:
        raise ValueError(f"truncation M must be a positive integer, got {M!r}")
    M = int(M)
    omega = 2.0 * np.pi / a
    n = 2 * M + 1
    return -np.pi / omega + 2.0 * np.pi * np.arange(n) / (omega * n)


def fourier_coefficients(samples: Sequence[float]) -> np.ndarray:
    """Trigonometric-interpolant coefficients of samples taken on :func:`sample_grid`.

    Parameters
    ----------
    samples : array_like, shape (2M+1,)
        Values ``V(t_1), ..., V(t_{2M+1})``.

    Returns
    -------
    ndarray of complex, shape (2M+1,)
        ``V_hat[-M..M]`` in center-indexed order.
    """
    v = np.asarray(samples, dtype=complex)
    if v.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    n = v.size
    if n % 2 == 0 or n < 3:
        raise ValueError(f"need an odd number (2M+1 >= 3) of samples, got {n}")
    M = n // 2
    # The grid starts at -a/2, i.e. Omega*t_1 = -pi, which contributes (-1)^j.
    spectrum = np.fft.fft(v) / n
    j = np.arange(-M, M + 1)
    return spectrum[j % n] * np.where(j % 2 == 0, 1.0, -1.0)


def _gaussian5(x: np.ndarray, omega: float) -> np.ndarray:
    out = np.full_like(x, -0.5, dtype=float)
    for j in range(1, 6):
        out -= np.exp(-(j**2) / 4.0) * np.cos(j * omega * x)
    return out


def _asym_exp(x: np.ndarray, omega: float) -> np.ndarray:
    return 0.25 * (1.0 + 2.0 * np.sin(2.0 * omega * x) + 3.0 * np.exp(np.cos(omega * x)))


BUILTIN_POTENTIALS: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "gaussian5": _gaussian5,
    "asym-exp": _asym_exp,
}


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    """A real ``a``-periodic potential truncated to ``2M+1`` Fourier modes."""

    a: float
    coeffs: np.ndarray
    source: str = "coefficients"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"lattice constant must be positive, got {self.a!r}")
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0 or c.size < 3:
            raise ValueError("coeffs must have odd length 2M+1 >= 3")
        scale = max(np.abs(c).max(), 1.0)
        asym = np.abs(c - np.conj(c[::-1])).max()
        if asym > HERMITIAN_RTOL * scale * 10:
            raise ValueError(
                f"coefficients are not Hermitian-symmetric (max defect {asym:.3e}); "
                "only real potentials are supported"
            )
        # Symmetrize away roundoff so the potential matrix is exactly Hermitian.
        c = 0.5 * (c + np.conj(c[::-1]))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def M(self) -> int:
        return self.coeffs.size // 2

    @property
    def Omega(self) -> float:
        return 2.0 * np.pi / self.a

    def coefficient(self, j: int) -> complex:
        """Coefficient of ``exp(i j Omega x)``; zero outside the truncation."""
        if abs(j) > self.M:
            return 0j
        return complex(self.coeffs[self.M + j])

    def __call__(self, x) -> np.ndarray:
        """Evaluate the trigonometric interpolant (real part) at ``x``."""
        x = np.asarray(x, dtype=float)
        j = np.arange(-self.M, self.M + 1)
        vals = np.exp(1j * self.Omega * np.multiply.outer(x, j)) @ self.coeffs
        return vals.real

    def envelope(self) -> np.ndarray:
        """Monotone decay envelope ``max_{i >= j} |V_hat_i|`` for j = 1..M."""
        mags = np.abs(self.coeffs[self.M + 1:])
        return np.maximum.accumulate(mags[::-1])[::-1]

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_samples(cls, a: float, samples: Sequence[float], source: str = "samples"):
        samples = np.asarray(samples, dtype=float)
        return cls(a=a, coeffs=fourier_coefficients(samples), source=source)

    @classmethod
    def from_function(cls, a: float, M: int, func: Callable, source: str = "function"):
        t = sample_grid(a, M)
        return cls.from_samples(a, np.asarray(func(t), dtype=float), source=source)

    @classmethod
    def builtin(cls, name: str, a: float, M: int):
        try:
            f = BUILTIN_POTENTIALS[name]
        except KeyError:
            raise ConfigError(
                f"unknown builtin potential {name!r}; choose from {sorted(BUILTIN_POTENTIALS)}"
            ) from None
        omega = 2.0 * np.pi / a
        return cls.from_function(a, M, lambda t: f(t, omega), source=name)

    @classmethod
    def constant(cls, a: float, M: int, value: float = 0.0):
        c = np.zeros(2 * M + 1, dtype=complex)
        c[M] = value
        return cls(a=a, coeffs=c, source=f"constant({value})")

    @classmethod
    def from_cos_sin(cls, a: float, M: int, cos: Sequence[float] = (), sin: Sequence[float] = ()):
        """Build from ``V(x) = sum_j cos[j] cos(j Omega x) + sum_j sin[j-1] sin(j Omega x)``.

        ``cos[0]`` is the constant term; ``sin[0]`` multiplies ``sin(Omega x)``.
        """
        if len(cos) > M + 1 or len(sin) > M:
            raise ConfigError(f"more harmonics than the truncation M={M} allows")
        c = np.zeros(2 * M + 1, dtype=complex)
        for j, cj in enumerate(cos):
            if j == 0:
                c[M] += cj
            else:
                c[M + j] += cj / 2
                c[M - j] += cj / 2
        for j, sj in enumerate(sin, start=1):
            c[M + j] += sj / 2j
            c[M - j] -= sj / 2j
        return cls(a=a, coeffs=c, source="cos/sin coefficients")

    @classmethod
    def from_sample_file(cls, a: float, path: str | Path):
        values = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                values.append(float(line))
        if len(values) % 2 == 0:
            raise ConfigError(f"{path}: expected 2M+1 samples, found {len(values)}")
        return cls.from_samples(a, values, source=f"samples:{path}")


def build_potential_matrix(pot: PeriodicPotential) -> np.ndarray:
    """Toeplitz matrix ``V[m, n] = V_hat[m - n]`` (zero when ``|m - n| > M``)."""
    M = pot.M
    n = 2 * M + 1
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    V = np.zeros((n, n), dtype=complex)
    inside = np.abs(diff) <= M
    V[inside] = pot.coeffs[M + diff[inside]]
    return V
