"""Gaussian two-mode states: covariance matrices, entropies, correlations.

Two covariance representations are used:

* ladder basis, operator order (a_L, a_G, a_L^dag, a_G^dag), with entries
  sigma_ij = <{A_i, A_j^dag}> - 2 <A_i><A_j^dag>.  The vacuum (and any
  coherent state) is the 4x4 identity.  The matrix is Hermitian and obeys
  the reality structure conj(sigma) = X sigma X with X the block swap of
  annihilation and creation operators.
* quadrature basis, mode-major order (x_L, p_L, x_G, p_G) with
  x = (a + a^dag)/sqrt(2), p = -i(a - a^dag)/sqrt(2): real symmetric,
  vacuum-normalized to the identity.

Entropies are in nats (natural logarithm) throughout; multiply by
``LOG2_TO_BITS`` for bits.

Determinant-based quantities (symplectic eigenvalues, mutual information,
discord) are evaluated on a rescaled copy of the covariance matrix so
that exponentially grown states (entries up to ~1e100) do not overflow
the 4x4 determinants.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from .errors import EntropyDomainError, NonPhysical

__all__ = [
    "LOG2_TO_BITS",
    "CorrelationReport",
    "vacuum_covariance",
    "to_quadrature",
    "from_quadrature",
    "mode_swap",
    "symplectic_eigenvalues",
    "entropy_f",
    "gaussian_discord",
    "correlation_report",
    "correlation_report_precise",
    "thermal_covariance",
    "two_mode_squeezed_covariance",
    "clamp_event_count",
    "reset_clamp_events",
]

LOG2_TO_BITS = 1.0 / math.log(2.0)

# Block swap exchanging annihilation and creation operators in the ladder
# ordering (a_L, a_G, a_L^dag, a_G^dag).
_X_SWAP = np.block(
    [[np.zeros((2, 2)), np.eye(2)], [np.eye(2), np.zeros((2, 2))]]
)

# Ladder -> quadrature map: permutation to per-mode (a, a^dag) order, then
# the unitary (x, p) = U (a, a^dag) on each mode.
_U1 = np.array([[1.0, 1.0], [-1.0j, 1.0j]]) / math.sqrt(2.0)
_PERM = np.zeros((4, 4))
for _new, _old in enumerate((0, 2, 1, 3)):
    _PERM[_new, _old] = 1.0
_T = np.kron(np.eye(2), _U1) @ _PERM

# Quadrature-basis permutation swapping the two modes.
_MODE_SWAP_XP = np.zeros((4, 4))
for _new, _old in enumerate((2, 3, 0, 1)):
    _MODE_SWAP_XP[_new, _old] = 1.0

# Diagnostic counter for symplectic eigenvalues clamped up to 1 from the
# "suspicious but tolerated" band [1 - 1e-6, 1 - 1e-9).
_clamp_events = 0


def clamp_event_count() -> int:
    return _clamp_events


def reset_clamp_events() -> None:
    global _clamp_events
    _clamp_events = 0


@dataclass(frozen=True)
class CorrelationReport:
    """Entropies and correlation measures of one two-mode Gaussian state.

    All entropic quantities in nats.  ``entangled_by_discord`` applies
    the criterion that discord above 1 certifies entanglement.
    """

    s_total: float
    s_L: float
    s_G: float
    mutual_information: float
    discord_LG: float
    discord_GL: float
    nu_minus: float
    nu_plus: float
    entangled_by_discord: bool


def vacuum_covariance() -> np.ndarray:
    """Ladder-basis covariance of the vacuum (or any coherent state)."""
    return np.eye(4, dtype=complex)


def _check_ladder(sigma: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (4, 4):
        raise ValueError(f"expected 4x4 covariance, got shape {sigma.shape}")
    scale = max(np.abs(sigma).max(), 1.0)
    if np.abs(sigma - sigma.conj().T).max() > rtol * scale:
        raise NonPhysical("ladder covariance is not Hermitian within tolerance")
    if np.abs(sigma.conj() - _X_SWAP @ sigma @ _X_SWAP).max() > rtol * scale:
        raise NonPhysical("ladder covariance violates its reality structure")
    return sigma


def to_quadrature(sigma: np.ndarray) -> np.ndarray:
    """Convert a ladder-basis covariance to the real quadrature basis.

    The congruence by the (unitary) ladder-to-quadrature map preserves
    |det| exactly.  The imaginary residue left by rounding is asserted
    small and discarded.
    """
    sigma = _check_ladder(sigma)
    out = _T @ sigma @ _T.conj().T
    scale = max(np.abs(out).max(), 1.0)
    if np.abs(out.imag).max() > 1e-10 * scale:
        raise NonPhysical("quadrature covariance has a large imaginary residue")
    out = out.real
    return 0.5 * (out + out.T)


def from_quadrature(sigma_xp: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_quadrature`."""
    sigma_xp = np.asarray(sigma_xp, dtype=float)
    return _T.conj().T @ sigma_xp @ _T


def mode_swap(sigma_xp: np.ndarray) -> np.ndarray:
    """Exchange the two modes of a quadrature covariance."""
    return _MODE_SWAP_XP @ np.asarray(sigma_xp) @ _MODE_SWAP_XP.T


def entropy_f(x: float) -> float:
    """Thermal entropy of one symplectic mode,

        f(x) = (x+1)/2 ln[(x+1)/2] - (x-1)/2 ln[(x-1)/2],

    with f(1) = 0 and the (x-1) ln(x-1) term guarded at the pure-state
    limit.  Arguments below 1 - 1e-6 are rejected; anything in
    [1 - 1e-6, 1] clamps to 1.
    """
    if not math.isfinite(x):
        raise EntropyDomainError(f"entropy argument must be finite, got {x}")
    if x < 1.0 - 1e-6:
        raise EntropyDomainError(f"entropy argument {x} below physical range")
    if x <= 1.0:
        return 0.0
    xp = 0.5 * (x + 1.0)
    xm = 0.5 * (x - 1.0)
    if xm == 0.0:
        return 0.0
    # The textbook difference xp ln xp - xm ln xm cancels to nothing for
    # x beyond ~1e16; this rearrangement is exact and stable everywhere.
    return math.log(xm) - xp * math.log1p(-1.0 / xp)


def _det4_exact(mat: np.ndarray) -> float:
    """Exact determinant of a 4x4 float matrix, as a Fraction.

    LU in double precision loses the determinant entirely once it sits
    more than ~14 orders below the matrix footprint; expanding in exact
    fractions keeps every digit of the stored entries.
    """
    f = [[Fraction(float(x)) for x in row] for row in mat.tolist()]

    def det2(r0, r1, c0, c1):
        return f[r0][c0] * f[r1][c1] - f[r0][c1] * f[r1][c0]

    total = Fraction(0)
    for (c0, c1), sg in (
        ((0, 1), 1), ((0, 2), -1), ((0, 3), 1),
        ((1, 2), 1), ((1, 3), -1), ((2, 3), 1),
    ):
        rest = [c for c in (0, 1, 2, 3) if c not in (c0, c1)]
        total += sg * det2(0, 1, c0, c1) * det2(2, 3, rest[0], rest[1])
    return total


def _scaled_dets(sigma_xp: np.ndarray):
    """Block determinants of sigma/m, plus the scale m >= 1.

    Returns (a, b, c, s, m) with a = det L-block, b = det G-block,
    c = det C-block (any sign), s = det of the full matrix, all of the
    rescaled copy.
    """
    sigma_xp = np.asarray(sigma_xp, dtype=float)
    ml = max(float(np.abs(sigma_xp[:2, :2]).max()), 1.0)
    mg = max(float(np.abs(sigma_xp[2:, 2:]).max()), 1.0)
    m = max(ml, mg)
    # Scale each mode block by its own magnitude first; one global scale
    # would underflow the smaller block's determinant when the state is
    # strongly anisotropic (one mode amplified far beyond the other).
    d = np.repeat([1.0 / math.sqrt(ml), 1.0 / math.sqrt(mg)], 2)
    sh = sigma_xp * np.outer(d, d)
    r, q = ml / m, mg / m
    a = float(np.linalg.det(sh[:2, :2])) * r * r
    b = float(np.linalg.det(sh[2:, 2:])) * q * q
    c = float(np.linalg.det(sh[:2, 2:])) * r * q
    s = float(np.linalg.det(sh)) * (r * q) ** 2
    if abs(np.linalg.det(sh)) < 1e-10:
        # Even the block-scaled copy carries fresh entry rounding that
        # swamps a determinant this small; take it exactly from the raw
        # stored matrix instead and divide the scale off rationally.
        s = float(_det4_exact(sigma_xp) / Fraction(m) ** 4)
    return a, b, c, s, m


def _clamp_nu(nu: float) -> float:
    global _clamp_events
    if nu < 1.0 - 1e-6:
        raise NonPhysical(f"symplectic eigenvalue {nu} < 1 beyond tolerance")
    if nu < 1.0:
        if nu < 1.0 - 1e-9:
            _clamp_events += 1
        return 1.0
    return nu


def symplectic_eigenvalues(sigma_xp: np.ndarray) -> tuple[float, float]:
    """Symplectic spectrum (nu_minus, nu_plus) of a quadrature covariance.

    Uses the block-determinant route 2 nu_pm^2 = Delta -+/+ sqrt(...)
    with Delta = det L + det G + 2 det C (det C may be negative).
    """
    a, b, c, s, m = _scaled_dets(sigma_xp)
    delta = a + b + 2.0 * c
    disc = max(delta * delta - 4.0 * s, 0.0)
    root = math.sqrt(disc)
    nu_plus = m * math.sqrt(max(0.5 * (delta + root), 0.0))
    # (delta - root)/2 cancels badly when delta >> sqrt(s); the product
    # form nu-^2 nu+^2 = s is exact and stable.
    if delta + root > 0.0:
        nu_minus = m * math.sqrt(max(2.0 * s / (delta + root), 0.0))
    else:
        nu_minus = 0.0
    if nu_minus > nu_plus:
        nu_minus, nu_plus = nu_plus, nu_minus
    return _clamp_nu(nu_minus), _clamp_nu(nu_plus)


def _measured_branch_arguments(a, b, c, s, m):
    """Scaled case expressions for the post-measurement minimum.

    Input determinants refer to sigma/m with the *measured* mode as the
    b-block.  Returns E/m^2 (so that sqrt(E) = m*sqrt(value)).
    """
    u = 1.0 / (m * m)
    c2 = c * c
    # Case discriminant, common factor m^8 removed.  The raw expression
    # (S - A*B)^2 - C^2*(B + 1)*(A + S) is inhomogeneous in the entries,
    # so the scaled terms carry different powers of m: (A + S)/m^2 is
    # a + s*m^2, not s + a/m^2.
    second = c2 * (b + u) * (a + s * m * m)
    delta = (s - a * b) ** 2 - second
    delta_scale = max((s - a * b) ** 2, abs(second), 1e-300)

    def branch_neg():
        if abs(b - u) < 1e-12:
            return None  # singular; the other branch covers this limit
        w = (b - u) * (s - a * u) + c2 * u
        if w < 0.0:
            return None
        return (
            2.0 * c2 * u
            + (b - u) * (s - a * u)
            + 2.0 * abs(c) * math.sqrt(u) * math.sqrt(w)
        ) / (b - u) ** 2

    def branch_pos():
        inner = c2 * c2 + (s - a * b) ** 2 - 2.0 * c2 * (s + a * b)
        return (a * b - c2 + s - math.sqrt(max(inner, 0.0))) / (2.0 * b)

    if delta < -1e-12 * delta_scale:
        e = branch_neg()
        if e is None:
            e = branch_pos()
        return [e]
    if delta > 1e-12 * delta_scale:
        return [branch_pos()]
    # On the case boundary both expressions agree analytically; evaluate
    # both and let the caller take the minimum to absorb rounding noise.
    out = [branch_pos()]
    e = branch_neg()
    if e is not None:
        out.append(e)
    return out


def _measured_min_exact(sigma_xp: np.ndarray) -> float:
    """High-precision evaluation of the post-measurement minimum.

    Fallback for states where the double-precision case expressions
    cancel catastrophically (a*b - c^2 can sit dozens of orders below
    its constituents).  The block determinants are taken exactly as
    rationals of the stored entries, and the case expressions evaluated
    in decimal arithmetic with enough digits for the state's dynamic
    range.  Returns E in raw (unscaled) units.
    """
    from decimal import Decimal, localcontext

    def det2(block):
        f = [[Fraction(float(v)) for v in row] for row in block.tolist()]
        return f[0][0] * f[1][1] - f[0][1] * f[1][0]

    a_r = det2(sigma_xp[:2, :2])
    b_r = det2(sigma_xp[2:, 2:])
    c_r = det2(sigma_xp[:2, 2:])
    s_r = _det4_exact(sigma_xp)
    span = max(float(np.abs(sigma_xp).max()), 1.0)
    with localcontext() as ctx:
        ctx.prec = 60 + int(4.0 * math.log10(span))

        def dec(fr):
            return Decimal(fr.numerator) / Decimal(fr.denominator)

        a, b, s = dec(a_r), dec(b_r), dec(s_r)
        cc = dec(c_r * c_r)
        c_abs = abs(dec(c_r))
        one = Decimal(1)
        delta = (s - a * b) ** 2 - cc * (b + one) * (s + a)
        candidates = []
        if delta >= 0:
            inner = cc * cc + (s - a * b) ** 2 - 2 * cc * (s + a * b)
            if inner < 0:
                inner = Decimal(0)
            candidates.append((a * b - cc + s - inner.sqrt()) / (2 * b))
        if delta <= 0 and b != one:
            w = (b - one) * (s - a) + cc
            if w >= 0:
                candidates.append(
                    (2 * cc + (b - one) * (s - a) + 2 * c_abs * w.sqrt())
                    / (b - one) ** 2
                )
        if not candidates:
            candidates.append(a)  # no usable case expression: no measurement gain
        return float(min(candidates))


def gaussian_discord(sigma_xp: np.ndarray, direction: str = "LG") -> float:
    """Gaussian quantum discord of a quadrature covariance.

    ``direction="LG"`` measures mode G (discord of L given G);
    ``"GL"`` exchanges the roles of the two modes.  The minimization over
    Gaussian measurements is closed-form, with a case split on the sign
    of its discriminant.  Small negative results are clamped to zero.
    """
    if direction == "GL":
        sigma_xp = mode_swap(sigma_xp)
    elif direction != "LG":
        raise ValueError(f"direction must be 'LG' or 'GL', got {direction!r}")
    a, b, c, s, m = _scaled_dets(sigma_xp)
    nu_minus, nu_plus = symplectic_eigenvalues(sigma_xp)
    s_meas = entropy_f(m * math.sqrt(max(b, 0.0)))
    # The case expressions run on determinant combinations; when a*b and
    # c^2 agree to more digits than double precision resolves, fall back
    # to the exact high-precision evaluation.
    d0_rel = abs(a * b - c * c) / max(a * b, c * c, 1e-300)
    use_exact = c != 0.0 and d0_rel < 1e-6
    if not use_exact:
        candidates = _measured_branch_arguments(a, b, c, s, m)
        f_min = min(
            entropy_f(max(m * math.sqrt(max(e, 0.0)), 1.0)) for e in candidates
        )
        d = s_meas - entropy_f(nu_minus) - entropy_f(nu_plus) + f_min
        use_exact = d < -1e-9 * max(1.0, s_meas)
    if use_exact:
        e_raw = _measured_min_exact(sigma_xp)
        f_min = entropy_f(max(math.sqrt(max(e_raw, 0.0)), 1.0))
        d = s_meas - entropy_f(nu_minus) - entropy_f(nu_plus) + f_min
    # Achievable absolute accuracy of the entropy differences degrades
    # with the dynamic range of the covariance; widen the clamp window
    # accordingly before treating a negative value as a hard error.
    tol_neg = 1e-6 * max(1.0, s_meas) + 2e-4 * math.log(max(m, 1.0))
    if d < -tol_neg:
        raise NonPhysical(f"discord came out at {d}, far below zero")
    return max(d, 0.0)


def correlation_report(sigma_xp: np.ndarray) -> CorrelationReport:
    """All entropic and correlation quantities of one quadrature covariance."""
    a, b, c, s, m = _scaled_dets(sigma_xp)
    nu_minus, nu_plus = symplectic_eigenvalues(sigma_xp)
    s_total = entropy_f(nu_minus) + entropy_f(nu_plus)
    s_l = entropy_f(max(m * math.sqrt(max(a, 0.0)), 1.0))
    s_g = entropy_f(max(m * math.sqrt(max(b, 0.0)), 1.0))
    mutual = s_l + s_g - s_total
    d_lg = gaussian_discord(sigma_xp, "LG")
    d_gl = gaussian_discord(sigma_xp, "GL")
    return CorrelationReport(
        s_total=s_total,
        s_L=s_l,
        s_G=s_g,
        mutual_information=mutual,
        discord_LG=d_lg,
        discord_GL=d_gl,
        nu_minus=nu_minus,
        nu_plus=nu_plus,
        entangled_by_discord=max(d_lg, d_gl) > 1.0,
    )


def correlation_report_precise(sigma_ladder) -> CorrelationReport:
    """Correlation report from an arbitrary-precision ladder covariance.

    Companion to ``dynamics.propagate_precise``: takes an
    ``mpmath.matrix`` so states with dynamic range beyond float64 (where
    the small symplectic eigenvalue drowns in entry rounding) still give
    correct entropies and discord.  The caller is responsible for having
    evaluated the input at sufficient working precision.
    """
    import mpmath as mp

    n = getattr(sigma_ladder, "rows", None)
    if n != 4 or sigma_ladder.cols != 4:
        raise ValueError("expected a 4x4 mpmath matrix")

    # Every mpmath operation rounds to the *ambient* precision, so the
    # whole computation must run at a precision that covers the 4x4
    # determinant's dynamic range (4 entry magnitudes) plus margin.
    span = max(float(mp.mpf(abs(sigma_ladder[i, j]))) for i in range(4) for j in range(4))
    dps = 40 + int(math.ceil(4.2 * math.log10(max(span, 1.0))))
    with mp.workdps(dps):
        return _report_precise_impl(mp, sigma_ladder)


def _report_precise_impl(mp, sigma_ladder) -> CorrelationReport:
    t_mp = mp.matrix(4, 4)
    for i in range(4):
        for j in range(4):
            t_mp[i, j] = mp.mpc(_T[i, j])
    t_h = mp.matrix(4, 4)
    for i in range(4):
        for j in range(4):
            t_h[i, j] = mp.conj(t_mp[j, i])
    sq_c = t_mp * sigma_ladder * t_h
    sq = mp.matrix(4, 4)
    for i in range(4):
        for j in range(4):
            sq[i, j] = (mp.re(sq_c[i, j]) + mp.re(sq_c[j, i])) / 2

    def det2(r0, c0):
        return sq[r0, c0] * sq[r0 + 1, c0 + 1] - sq[r0, c0 + 1] * sq[r0 + 1, c0]

    def f(x):
        if x <= 1:
            return mp.mpf(0)
        xp, xm = (x + 1) / 2, (x - 1) / 2
        return xp * mp.log(xp) - xm * mp.log(xm)

    a_det, b_det, c_det, s_det = det2(0, 0), det2(2, 2), det2(0, 2), mp.det(sq)
    delta_inv = a_det + b_det + 2 * c_det
    root = mp.sqrt(max(delta_inv * delta_inv - 4 * s_det, mp.mpf(0)))
    nu_plus = mp.sqrt((delta_inv + root) / 2)
    nu_minus = mp.sqrt(max((delta_inv - root) / 2, mp.mpf(1)))
    s_tot = f(nu_minus) + f(nu_plus)
    s_l = f(mp.sqrt(max(a_det, mp.mpf(1))))
    s_g = f(mp.sqrt(max(b_det, mp.mpf(1))))
    mutual = s_l + s_g - s_tot

    def measured_min(a, b, c2, s):
        delta = (s - a * b) ** 2 - c2 * (b + 1) * (s + a)
        cands = []
        if delta >= 0:
            inner = c2 * c2 + (s - a * b) ** 2 - 2 * c2 * (s + a * b)
            cands.append((a * b - c2 + s - mp.sqrt(max(inner, mp.mpf(0)))) / (2 * b))
        if delta <= 0 and b != 1:
            w = (b - 1) * (s - a) + c2
            if w >= 0:
                cands.append(
                    (2 * c2 + (b - 1) * (s - a) + 2 * mp.sqrt(c2) * mp.sqrt(w))
                    / (b - 1) ** 2
                )
        return min(cands) if cands else a

    def discord(a, b, c2, s, s_local):
        e_min = measured_min(a, b, c2, s)
        d = s_local - s_tot + f(mp.sqrt(max(e_min, mp.mpf(1))))
        return max(float(d), 0.0)

    c2 = c_det * c_det
    d_lg = discord(a_det, b_det, c2, s_det, f(mp.sqrt(max(b_det, mp.mpf(1)))))
    d_gl = discord(b_det, a_det, c2, s_det, f(mp.sqrt(max(a_det, mp.mpf(1)))))
    return CorrelationReport(
        s_total=float(s_tot),
        s_L=float(s_l),
        s_G=float(s_g),
        mutual_information=float(mutual),
        discord_LG=d_lg,
        discord_GL=d_gl,
        nu_minus=float(nu_minus),
        nu_plus=float(nu_plus),
        entangled_by_discord=max(d_lg, d_gl) > 1.0,
    )


def thermal_covariance(n_l: float, n_g: float) -> np.ndarray:
    """Quadrature covariance of a product of thermal states."""
    return np.diag(
        [2.0 * n_l + 1.0, 2.0 * n_l + 1.0, 2.0 * n_g + 1.0, 2.0 * n_g + 1.0]
    )


def two_mode_squeezed_covariance(r: float) -> np.ndarray:
    """Quadrature covariance of the two-mode squeezed vacuum."""
    ch = math.cosh(2.0 * r)
    sh = math.sinh(2.0 * r)
    return np.array(
        [
            [ch, 0.0, sh, 0.0],
            [0.0, ch, 0.0, -sh],
            [sh, 0.0, ch, 0.0],
            [0.0, -sh, 0.0, ch],
        ]
    )
