"""Mean-field description of the two-mode dissipative gain-loss system.

Two bosonic modes L (lossy) and G (gain) exchange excitations at rate g.
Mode L leaks at rate gamma_L; mode G leaks at gamma_G and is incoherently
pumped at Gamma_G.  The first moments obey a Schroedinger-like equation
generated by the non-Hermitian 2x2 matrix

    H = [[-i*gamma_L, g], [g, i*(Gamma_G - gamma_G)]]

whose spectrum, exceptional points and stability thresholds are computed
here.  All rates share one user-chosen frequency unit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm

from .errors import NonPositiveEffectiveGain, NotPTSymmetric

__all__ = [
    "ModelParams",
    "Spectrum",
    "Thresholds",
    "RegimeKind",
    "Regime",
    "effective_gain",
    "mean_field_hamiltonian",
    "eigenvalues",
    "pt_eigenvalues",
    "thresholds",
    "classify_regime",
    "mean_field_evolve",
    "growth_rate",
]


@dataclass(frozen=True)
class ModelParams:
    """The four physical rates defining the system.

    g        coherent exchange rate between the modes
    gamma_L  loss rate on mode L
    gamma_G  loss rate on mode G
    Gamma_G  incoherent pump (gain) rate on mode G
    """

    g: float
    gamma_L: float
    gamma_G: float
    Gamma_G: float

    def __post_init__(self):
        for name in ("g", "gamma_L", "gamma_G", "Gamma_G"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    @property
    def effective_gain(self) -> float:
        """Net gain rate on mode G; may be negative."""
        return self.Gamma_G - self.gamma_G

    @property
    def rate_scale(self) -> float:
        """Characteristic rate used to make tolerances dimensionless."""
        return max(self.g, self.gamma_L, self.gamma_G, self.Gamma_G, 0.0) or 1.0


def effective_gain(params: ModelParams) -> float:
    """Net gain rate Gamma_G - gamma_G on mode G (any sign)."""
    return params.effective_gain


@dataclass(frozen=True)
class Spectrum:
    """Complex eigenvalue pair of the mean-field matrix.

    The +/- labels follow the sign of the principal square root, not a
    sort order, so spectra are continuous along parameter sweeps except
    exactly at an exceptional point.
    """

    e_plus: complex
    e_minus: complex
    is_coalesced: bool
    coalescence_tol: float

    @property
    def growth_rate(self) -> float:
        """Largest growth rate of the first moments (max imaginary part)."""
        return max(self.e_plus.imag, self.e_minus.imag)


@dataclass(frozen=True)
class Thresholds:
    """Critical values of gamma_L for fixed g, gamma_G, Gamma_G.

    gamma_L_th_paper and gamma_L_th_numeric differ by a factor 2 under
    this package's rate conventions; both are exposed on purpose and all
    sweeps use the numeric one.  gamma_L_th_numeric is NaN when no
    gamma_L stabilizes the system (effective gain >= g).
    """

    gamma_L_PT: float
    gamma_L_EP: float
    gamma_L_th_paper: float
    gamma_L_th_numeric: float


class RegimeKind(Enum):
    PT_UNBROKEN = "pt-unbroken"
    PT_EXCEPTIONAL_POINT = "pt-exceptional-point"
    PT_BROKEN = "pt-broken"
    NON_PT_BELOW_EP = "non-pt-below-ep"
    NON_PT_AT_EP = "non-pt-at-ep"
    NON_PT_ABOVE_EP = "non-pt-above-ep"


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    stable: bool


def mean_field_hamiltonian(params: ModelParams) -> np.ndarray:
    """2x2 complex generator of the first-moment dynamics, basis (L, G)."""
    return np.array(
        [
            [-1j * params.gamma_L, params.g],
            [params.g, 1j * params.effective_gain],
        ],
        dtype=complex,
    )


def eigenvalues(params: ModelParams, tol_abs: float | None = None) -> Spectrum:
    """Closed-form spectrum of the mean-field matrix.

    E_pm = -i(gamma_L - eff_gain)/2 +/- sqrt(g^2 - ((gamma_L + eff_gain)/2)^2)

    with the principal branch of the square root.  Coalescence is flagged
    when |E_plus - E_minus| <= tol_abs (default 1e-9 * rate scale), since
    exact coalescence is measure-zero in floating point.
    """
    gt = params.effective_gain
    half_diff = 0.5 * (params.gamma_L - gt)
    half_sum = 0.5 * (params.gamma_L + gt)
    root = cmath.sqrt(complex(params.g**2 - half_sum**2))
    e_plus = -1j * half_diff + root
    e_minus = -1j * half_diff - root
    if tol_abs is None:
        tol_abs = 1e-9 * params.rate_scale
    return Spectrum(
        e_plus=e_plus,
        e_minus=e_minus,
        is_coalesced=abs(e_plus - e_minus) <= tol_abs,
        coalescence_tol=tol_abs,
    )


def pt_eigenvalues(
    params: ModelParams, tol_rel: float = 1e-9, tol_abs: float | None = None
) -> Spectrum:
    """Spectrum on the balanced gain-loss line, E_pm = +/- sqrt(g^2 - eff_gain^2).

    Requires gamma_L to equal the effective gain within tol_rel times the
    rate scale; raises NotPTSymmetric otherwise.  Agrees with
    ``eigenvalues`` wherever the precondition holds.
    """
    gt = params.effective_gain
    if abs(params.gamma_L - gt) > tol_rel * params.rate_scale:
        raise NotPTSymmetric(
            f"gamma_L={params.gamma_L} does not balance effective gain {gt}"
        )
    root = cmath.sqrt(complex(params.g**2 - gt**2))
    if tol_abs is None:
        tol_abs = 1e-9 * params.rate_scale
    return Spectrum(
        e_plus=root,
        e_minus=-root,
        is_coalesced=abs(2 * root) <= tol_abs,
        coalescence_tol=tol_abs,
    )


def growth_rate(params: ModelParams) -> float:
    """Largest real part of the covariance drift spectrum.

    Equals max Im E_pm of the mean-field spectrum; negative means every
    moment decays, positive means lasing-like growth.
    """
    return eigenvalues(params).growth_rate


def _bisect_threshold(params: ModelParams, rel_tol: float = 1e-13) -> float:
    """gamma_L at which the largest growth rate crosses zero, by bisection."""
    gt = params.effective_gain

    def rate(gamma_l: float) -> float:
        return eigenvalues(
            ModelParams(params.g, gamma_l, params.gamma_G, params.Gamma_G)
        ).growth_rate

    lo = gt * (1 + 1e-12)
    if rate(lo) >= 0.0:
        return math.nan  # no stable window: effective gain >= g
    hi = max(2 * params.g**2 / gt, 2 * params.g, 2 * gt)
    n_expand = 0
    while rate(hi) <= 0.0:
        hi *= 2.0
        n_expand += 1
        if n_expand > 200:
            return math.nan
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if rate(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def thresholds(params: ModelParams) -> Thresholds:
    """Critical gamma_L values; requires net gain on mode G.

    Exposes both printed and numerically determined lasing thresholds;
    they differ by a factor 2 under this package's conventions (the
    numeric one solves gamma_L * eff_gain = g^2).
    """
    gt = params.effective_gain
    if gt <= 0:
        raise NonPositiveEffectiveGain(
            f"effective gain {gt} <= 0; thresholds assume net gain"
        )
    return Thresholds(
        gamma_L_PT=gt,
        gamma_L_EP=2 * params.g + params.gamma_G - params.Gamma_G,
        gamma_L_th_paper=2 * params.g**2 / gt,
        gamma_L_th_numeric=_bisect_threshold(params),
    )


def classify_regime(params: ModelParams, tol: float = 1e-9) -> Regime:
    """Classify the working point of the mean-field matrix.

    Balanced points (|gamma_L - eff_gain| <= tol * scale) are split on
    eff_gain vs g with an exceptional-point band of width tol * scale;
    unbalanced points are split on gamma_L + eff_gain vs 2g.  The
    stability flag demands strict decay of all moments, so the balanced
    line itself (marginal dynamics) reports unstable.
    """
    g = params.g
    gt = params.effective_gain
    scale = params.rate_scale
    band = tol * scale
    stable = growth_rate(params) < -1e-10 * scale
    if abs(params.gamma_L - gt) <= band:
        if abs(gt - g) <= band:
            kind = RegimeKind.PT_EXCEPTIONAL_POINT
        elif gt < g:
            kind = RegimeKind.PT_UNBROKEN
        else:
            kind = RegimeKind.PT_BROKEN
    else:
        s = params.gamma_L + gt
        if abs(s - 2 * g) <= band:
            kind = RegimeKind.NON_PT_AT_EP
        elif s < 2 * g:
            kind = RegimeKind.NON_PT_BELOW_EP
        else:
            kind = RegimeKind.NON_PT_ABOVE_EP
    return Regime(kind=kind, stable=stable)


def mean_field_evolve(psi0, params: ModelParams, t: float) -> np.ndarray:
    """Propagate a mean-field amplitude pair: exp(-i H t) @ psi0.

    Uses the matrix exponential, which stays valid at exceptional points
    where the generator is defective.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    h = mean_field_hamiltonian(params)
    return expm(-1j * h * t) @ np.asarray(psi0, dtype=complex)
