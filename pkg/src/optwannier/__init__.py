"""Optimal (minimum-variance, real, exponentially localized) Wannier functions in 1D.

The solver discretizes a periodic potential in Fourier space, transports a
band eigenvector across the Brillouin zone with RK4, removes the Zak and
realty phases analytically and synthesizes W0 by the trapezoidal rule.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateBand,
    GaugeMismatch,
    IllConditioned,
    NoReliableComponent,
    OrthogonalNeighbors,
    WannierError,
)
from .spectral import PeriodicPotential, build_potential_matrix, fourier_coefficients, sample_grid  # noqa: E402
from .operator import OperatorWorkspace  # noqa: E402
from .eigen import BandState, band_eigenpair, rayleigh_quotient  # noqa: E402
from .transport import (  # noqa: E402
    Trajectory,
    discrete_transport,
    endpoint_error,
    integrate_band,
    rk4_step,
    transport_rhs,
)
from .gauge import (  # noqa: E402
    GaugePhases,
    PerturbedGauge,
    apply_gauge,
    apply_perturbed_gauge,
    extract_phases,
    extract_realty_phase,
    extract_zak_phase,
)
from .wannier import (  # noqa: E402
    Moments,
    WannierRepresentation,
    assemble_alpha,
    compute_center,
    compute_moments,
    compute_variance,
    decay_diagnostics,
    e_imag,
    evaluate_wannier,
    wannier_shifted,
)

__all__ = [name for name in dir() if not name.startswith("_")]
