"""Covariance-matrix dynamics of the dissipative gain-loss system.

The ladder-basis covariance obeys the linear matrix equation

    sigma_dot = Y sigma + sigma Y^H + 4 D

with drift Y = blockdiag(-iH, +iH^H) built from the mean-field matrix H
and a constant diagonal diffusion D.  Note the conjugate transpose: the
covariance here is stored in its Hermitian form (vacuum = identity), for
which the transpose and adjoint readings of the drift differ; the
adjoint one is the one that reproduces the full master equation (checked
against the truncated-Fock oracle in the test suite).

The exact propagator is evaluated through one 8x8 augmented-block matrix
exponential per time point, which stays valid at exceptional points
where the drift is defective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import MarginallyStable, NegativeDiffusion, StepSizeUnderflow, Unstable
from .model import ModelParams, mean_field_hamiltonian

__all__ = [
    "DIVERGENCE_CAP",
    "DriftDiffusion",
    "PropagationResult",
    "Stability",
    "build_drift_diffusion",
    "propagate",
    "propagate_precise",
    "required_digits",
    "make_stepper",
    "propagate_adaptive",
    "stationary",
    "is_stable",
]

# Entry-magnitude cap above which a propagated covariance is flagged as
# diverged instead of being handed to downstream consumers.
DIVERGENCE_CAP = 1e100


@dataclass(frozen=True)
class DriftDiffusion:
    """Drift/diffusion pair of the covariance dynamics."""

    y: np.ndarray
    d: np.ndarray
    params: ModelParams


@dataclass(frozen=True)
class PropagationResult:
    """Covariance at one time, with method and rounding diagnostics.

    ``asymmetry`` is the max-entry deviation from Hermiticity before the
    final symmetrization; ``diverged`` marks entries beyond the cap, in
    which case ``sigma_t`` is the last raw (unusable) matrix.
    """

    sigma_t: np.ndarray
    t: float
    method: str
    asymmetry: float
    diverged: bool


@dataclass(frozen=True)
class StabilityReport:
    kind: str  # "stable" | "marginal" | "unstable"
    margin: float  # max real part of the drift spectrum


class Stability:
    STABLE = "stable"
    MARGINAL = "marginal"
    UNSTABLE = "unstable"


def build_drift_diffusion(params: ModelParams) -> DriftDiffusion:
    """Assemble Y = blockdiag(-iH, +iH^H) and the diagonal diffusion."""
    h = mean_field_hamiltonian(params)
    y = np.zeros((4, 4), dtype=complex)
    y[:2, :2] = -1j * h
    y[2:, 2:] = 1j * h.conj().T
    d_mode_g = 0.5 * (params.effective_gain + 2.0 * params.gamma_G)
    diag = np.array([0.5 * params.gamma_L, d_mode_g, 0.5 * params.gamma_L, d_mode_g])
    if diag.min() < 0:
        # Gamma_G + gamma_G >= 0 for valid ModelParams, so this is a bug trap.
        raise NegativeDiffusion(f"diffusion diagonal {diag} has a negative entry")
    return DriftDiffusion(y=y, d=np.diag(diag), params=params)


def _finish(sigma: np.ndarray, t: float, method: str) -> PropagationResult:
    asym = float(np.abs(sigma - sigma.conj().T).max())
    sigma = 0.5 * (sigma + sigma.conj().T)
    diverged = bool(np.abs(sigma).max() > DIVERGENCE_CAP) or not np.all(
        np.isfinite(sigma.view(float))
    )
    return PropagationResult(
        sigma_t=sigma, t=t, method=method, asymmetry=asym, diverged=diverged
    )


def _augmented_exponential(yd: DriftDiffusion, t: float):
    """F11 = e^{Yt} and the accumulated noise integral from one 8x8 expm."""
    m = np.zeros((8, 8), dtype=complex)
    m[:4, :4] = yd.y
    m[:4, 4:] = 4.0 * yd.d
    m[4:, 4:] = -yd.y.conj().T
    e = expm(m * t)
    f11 = e[:4, :4]
    noise = e[:4, 4:] @ f11.conj().T
    return f11, noise


def _propagator_pieces(yd: DriftDiffusion, t: float):
    """(F, J) with sigma(t) = F sigma0 F^H + J, stable at any horizon.

    The augmented exponential alone degrades when t is large and the
    drift has decaying modes (its lower-right block grows like their
    inverse).  So the pieces are built at a short substep and doubled,
    J <- F J F^H + J, F <- F F, which only ever multiplies bounded
    matrices.
    """
    nrm = float(np.abs(np.linalg.eigvals(yd.y)).max())
    k = 0
    if t > 0.0 and t * nrm > 1.0:
        k = min(int(math.ceil(math.log2(t * nrm))), 200)
    f, j = _augmented_exponential(yd, t / (1 << k))
    for _ in range(k):
        j = f @ j @ f.conj().T + j
        j = 0.5 * (j + j.conj().T)
        f = f @ f
    return f, j


def propagate(
    sigma0: np.ndarray, params: ModelParams, t: float
) -> PropagationResult:
    """Exact covariance at time t from the augmented-block exponential.

    sigma(t) = e^{Yt} sigma0 e^{Y^H t} + integral of the propagated noise.
    Growth in unstable regimes is legitimate; entries beyond the cap only
    set the ``diverged`` flag.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    sigma0 = np.asarray(sigma0, dtype=complex)
    yd = build_drift_diffusion(params)
    f11, noise = _propagator_pieces(yd, t)
    sigma = f11 @ sigma0 @ f11.conj().T + noise
    return _finish(sigma, t, "exact-exponential")


def required_digits(params: ModelParams, t: float) -> int:
    """Decimal digits needed to resolve order-one structure at time t.

    Exponential growth hides the small symplectic eigenvalue of the
    covariance underneath entries of size exp(2 r t), and the 4x4
    determinant behind that doubles the cancellation depth again, so the
    entries must carry about 4 r t / ln 10 digits plus a working margin.
    """
    yd = build_drift_diffusion(params)
    rate = float(np.max(np.real(np.linalg.eigvals(yd.y))))
    return 40 + max(0, int(math.ceil(4.2 * max(rate, 0.0) * t / math.log(10.0))))


def propagate_precise(
    sigma0: np.ndarray, params: ModelParams, t: float, dps: int | None = None
):
    """Arbitrary-precision covariance at time t (mpmath matrix).

    Double precision cannot store a covariance whose dynamic range
    exceeds ~1e15 without destroying its small symplectic eigenvalue,
    which is exactly the regime of unstable growth at long times.  This
    variant evaluates the same augmented-block exponential in mpmath and
    returns an ``mpmath.matrix`` so no rounding to float ever happens.
    """
    import mpmath as mp

    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if dps is None:
        dps = required_digits(params, t)
    yd = build_drift_diffusion(params)
    with mp.workdps(dps):
        m = mp.zeros(8, 8)
        for i in range(4):
            for j in range(4):
                m[i, j] = mp.mpc(yd.y[i, j]) * t
                m[i, j + 4] = mp.mpf(4.0 * yd.d[i, j]) * t
                m[i + 4, j + 4] = -mp.mpc(np.conj(yd.y[j, i])) * t
        e = mp.expm(m)
        f11 = e[:4, :4]
        f11h = mp.matrix(4, 4)
        for i in range(4):
            for j in range(4):
                f11h[i, j] = mp.conj(f11[j, i])
        s0 = mp.matrix(4, 4)
        for i in range(4):
            for j in range(4):
                s0[i, j] = mp.mpc(complex(sigma0[i, j]))
        sigma = f11 * s0 * f11h + e[:4, 4:] * f11h
        # Symmetrize away the residual of the expm itself.
        out = mp.matrix(4, 4)
        for i in range(4):
            for j in range(4):
                out[i, j] = (sigma[i, j] + mp.conj(sigma[j, i])) / 2
    return out


def make_stepper(params: ModelParams, dt: float):
    """Constant-step exact propagator: returns step(sigma) -> sigma(t+dt).

    One matrix exponential up front, two 4x4 products per step; used by
    time-series sweeps.
    """
    yd = build_drift_diffusion(params)
    f11, noise = _propagator_pieces(yd, dt)
    f11h = f11.conj().T

    def step(sigma: np.ndarray) -> np.ndarray:
        out = f11 @ sigma @ f11h + noise
        return 0.5 * (out + out.conj().T)

    return step


def propagate_adaptive(
    sigma0: np.ndarray,
    params: ModelParams,
    t_grid,
    rtol: float = 1e-10,
) -> list[PropagationResult]:
    """Adaptive explicit integration of the matrix ODE on a time grid.

    Independent numerical cross-check of :func:`propagate`; sigma0 is
    taken at t_grid[0].  An empty grid yields an empty list.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        return []
    if t_grid[0] < 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be non-negative and strictly increasing")
    sigma0 = np.asarray(sigma0, dtype=complex)
    yd = build_drift_diffusion(params)
    y, d4 = yd.y, 4.0 * yd.d
    yh = y.conj().T

    def rhs(_t, vec):
        s = vec.reshape(4, 4)
        return (y @ s + s @ yh + d4).ravel()

    if t_grid.size == 1:
        return [_finish(sigma0.copy(), float(t_grid[0]), "adaptive-integrator")]
    sol = solve_ivp(
        rhs,
        (t_grid[0], t_grid[-1]),
        sigma0.ravel(),
        t_eval=t_grid,
        method="DOP853",
        rtol=rtol,
        atol=rtol * 1e-2,
    )
    if not sol.success:
        raise StepSizeUnderflow(f"adaptive integration failed: {sol.message}")
    return [
        _finish(sol.y[:, k].reshape(4, 4), float(t_grid[k]), "adaptive-integrator")
        for k in range(t_grid.size)
    ]


def is_stable(params: ModelParams) -> StabilityReport:
    """Hurwitz test on the drift matrix, with a small marginal band."""
    yd = build_drift_diffusion(params)
    margin = float(np.linalg.eigvals(yd.y).real.max())
    tol = 1e-10 * params.rate_scale
    if margin < -tol:
        kind = Stability.STABLE
    elif margin > tol:
        kind = Stability.UNSTABLE
    else:
        kind = Stability.MARGINAL
    return StabilityReport(kind=kind, margin=margin)


def stationary(params: ModelParams) -> np.ndarray:
    """Unique stationary covariance of a strictly stable working point.

    Solves Y sigma + sigma Y^H + 4 D = 0 by vectorization.  The balanced
    gain-loss line is marginal, not unstable, and gets its own error so
    that callers can fall back to finite-time propagation.
    """
    report = is_stable(params)
    if report.kind == Stability.MARGINAL:
        raise MarginallyStable(
            f"drift spectrum margin {report.margin}; use finite-time propagation"
        )
    if report.kind == Stability.UNSTABLE:
        raise Unstable(f"drift spectrum margin {report.margin} > 0")
    yd = build_drift_diffusion(params)
    rhs = -4.0 * yd.d
    # Column-major vectorization: (I (x) Y + conj(Y) (x) I) vec(sigma) = vec(rhs)
    coeff = np.kron(np.eye(4), yd.y) + np.kron(yd.y.conj(), np.eye(4))
    sigma = np.linalg.solve(coeff, rhs.flatten(order="F")).reshape((4, 4), order="F")
    sigma = 0.5 * (sigma + sigma.conj().T)
    residual = np.abs(yd.y @ sigma + sigma @ yd.y.conj().T + 4.0 * yd.d).max()
    if residual > 1e-10 * max(np.abs(4.0 * yd.d).max(), 1e-300):
        raise Unstable(
            f"stationary solve residual {residual} too large; near-marginal point"
        )
    return sigma
