"""Two-mode dissipative gain-loss bosonic system.

Mean-field spectra and exceptional points, covariance-matrix dynamics,
and Gaussian total/quantum correlations, with a truncated-Fock
master-equation oracle for validation and a CLI for sweeps and
figure-style presets.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ModelParams,
    Regime,
    RegimeKind,
    Spectrum,
    Thresholds,
    classify_regime,
    effective_gain,
    eigenvalues,
    mean_field_evolve,
    mean_field_hamiltonian,
    pt_eigenvalues,
    thresholds,
)
from .gaussian import (  # noqa: F401
    CorrelationReport,
    correlation_report,
    entropy_f,
    gaussian_discord,
    symplectic_eigenvalues,
    to_quadrature,
    vacuum_covariance,
)
from .dynamics import (  # noqa: F401
    DriftDiffusion,
    PropagationResult,
    build_drift_diffusion,
    is_stable,
    propagate,
    propagate_adaptive,
    stationary,
)
