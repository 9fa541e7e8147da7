"""Run configuration: potential selection, discretization and output options.

A config file is JSON of the form::

    {
      "a": 6.283185307179586,
      "M": 10,
      "K": 51,                      # or a list for studies
      "band": 1,                    # or a list
      "k_convention": "paper",      # "paper": K counts states, "steps": K counts steps
      "potential": {"kind": "gaussian5"},
      "x_grid": {"min": -50.0, "max": 50.0, "count": 2001},
      "out": "results",
      "tolerances": {"drift": 1e-10, "cond": 1e-10, "gap": 1e-8, "shift": 1e-4}
    }

Potential kinds:

``gaussian5`` / ``asym-exp``
    named builtins (only ``a`` and ``M`` needed);
``constant``
    ``{"kind": "constant", "value": c}``;
``coefficients``
    ``{"kind": "coefficients", "cos": [c0, c1, ...], "sin": [s1, s2, ...]}``
    for ``V(x) = c0 + sum_j c_j cos(j Omega x) + s_j sin(j Omega x)``;
``samples``
    ``{"kind": "samples", "path": "v.txt"}``, one value per line on the
    grid ``t_j = -a/2 + (j-1) a/(2M+1)``; ``M`` is taken from the line count.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .eigen import GAP_TOL
from .errors import ConfigError
from .spectral import BUILTIN_POTENTIALS, PeriodicPotential
from .transport import COND_TOL, DRIFT_TOL
from .wannier import SHIFT_REJECT_TOL

K_CONVENTIONS = ("paper", "steps")
POTENTIAL_KINDS = tuple(BUILTIN_POTENTIALS) + ("constant", "coefficients", "samples")


@dataclass(frozen=True)
class Tolerances:
    drift: float = DRIFT_TOL
    cond: float = COND_TOL
    gap: float = GAP_TOL
    shift: float = SHIFT_REJECT_TOL

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (isinstance(value, (int, float)) and value > 0 and np.isfinite(value)):
                raise ConfigError(f"tolerance {name!r} must be a positive number, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    potential: dict = field(default_factory=lambda: {"kind": "gaussian5"})
    a: float = 2 * np.pi
    M: int = 10
    K: tuple[int, ...] = (51,)
    band: tuple[int, ...] = (1,)
    k_convention: str = "paper"
    xmin: float = -50.0
    xmax: float = 50.0
    nx: int = 2001
    out: str | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        K = tuple(int(k) for k in np.atleast_1d(self.K))
        band = tuple(int(b) for b in np.atleast_1d(self.band))
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "band", band)
        if not self.a > 0:
            raise ConfigError(f"a must be positive, got {self.a!r}")
        if self.potential.get("kind") != "samples" and (int(self.M) != self.M or self.M < 1):
            raise ConfigError(f"M must be a positive integer, got {self.M!r}")
        if self.k_convention not in K_CONVENTIONS:
            raise ConfigError(f"k_convention must be one of {K_CONVENTIONS}, got {self.k_convention!r}")
        if not K or min(K) < (3 if self.k_convention == "paper" else 2):
            raise ConfigError(f"K must be at least 2 steps, got {K}")
        if not band or min(band) < 1:
            raise ConfigError(f"band indices start at 1, got {band}")
        if self.nx < 1:
            raise ConfigError(f"x-grid count must be >= 1, got {self.nx}")
        if not self.xmax >= self.xmin:
            raise ConfigError(f"empty x window [{self.xmin}, {self.xmax}]")
        if self.potential.get("kind") not in POTENTIAL_KINDS:
            raise ConfigError(
                f"unknown potential kind {self.potential.get('kind')!r}; choose from {POTENTIAL_KINDS}"
            )

    def steps(self, K: int) -> int:
        """Number of RK4 steps for a table value ``K`` under the chosen convention."""
        return K - 1 if self.k_convention == "paper" else K

    def build_potential(self) -> PeriodicPotential:
        """Construct the potential; for ``samples`` the file length overrides ``M``."""
        spec = self.potential
        kind = spec["kind"]
        if kind in BUILTIN_POTENTIALS:
            return PeriodicPotential.builtin(kind, self.a, self.M)
        if kind == "constant":
            return PeriodicPotential.constant(self.a, self.M, float(spec.get("value", 0.0)))
        if kind == "coefficients":
            return PeriodicPotential.from_cos_sin(self.a, self.M, spec.get("cos", ()), spec.get("sin", ()))
        path = Path(spec["path"])
        if not path.exists():
            raise ConfigError(f"sample file not found: {path}")
        return PeriodicPotential.from_sample_file(self.a, path)

    def with_run(self, K: int, band: int) -> "RunConfig":
        return replace(self, K=(K,), band=(band,))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["K"] = list(self.K)
        d["band"] = list(self.band)
        return d


def load_config(path: str | Path, tolerances: dict | None = None, **overrides) -> RunConfig:
    """Read a JSON config; see :func:`config_from_dict` for overrides."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent, tolerances=tolerances, **overrides)


def config_from_dict(raw: dict, base_dir: str | Path | None = None,
                     tolerances: dict | None = None, **overrides) -> RunConfig:
    """Build a :class:`RunConfig` from parsed JSON.

    ``tolerances`` and ``overrides`` (field name -> value, None meaning unset)
    take precedence over the file.
    """
    raw = dict(raw)
    known = {"a", "M", "K", "band", "k_convention", "potential", "x_grid", "out", "tolerances"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: raw[k] for k in ("a", "M", "K", "band", "k_convention", "out") if k in raw}
    if "potential" in raw:
        pot = raw["potential"]
        if isinstance(pot, str):
            pot = {"kind": pot}
        pot = dict(pot)
        if pot.get("kind") == "samples" and base_dir is not None and "path" in pot:
            p = Path(pot["path"])
            pot["path"] = str(p if p.is_absolute() else Path(base_dir) / p)
        kwargs["potential"] = pot
    grid = raw.get("x_grid", {})
    for src, dst in (("min", "xmin"), ("max", "xmax"), ("count", "nx")):
        if src in grid:
            kwargs[dst] = grid[src]
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    tol = dict(raw.get("tolerances", {}))
    tol.update({k: v for k, v in (tolerances or {}).items() if v is not None})
    try:
        kwargs["tolerances"] = Tolerances(**tol)
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
