"""Calculus of orthogonally invariant matrix functions F = f o sigma.

Values, subderivatives, subdifferentials, critical cones, parabolic and
second subderivatives of f o sigma for absolutely symmetric f, the
nuclear-norm specializations (the bottom singular-value cluster sum and
the top-r sum), and tangent-set tests for orthogonally invariant sets.

The second-order formulas require one orthogonal pair (U, V) that
diagonalizes X and Y simultaneously with both value vectors ordered;
``simultaneous_gauge`` constructs it or raises ``NoSimultaneousGauge``,
which happens exactly when Y is not a subgradient direction compatible
with X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .absym import INF, ExtendedValue, SpectralFunctionSpec, _as_vector
from .errors import (
    AssumptionViolated,
    FullRank,
    NoSimultaneousGauge,
    NotASubgradient,
    NotInRegularSubdiff,
    NotInSet,
    ProjectionUnavailable,
    RankZero,
    ShapeError,
)
from .matrix_core import (
    CLUSTER_TOL,
    RANK_TOL,
    SvdDecomposition,
    as_matrix,
    lift,
    partition_of,
    require_tall,
    svd_ordered,
    sym_eig_ordered,
)
from .sv_calculus import (
    direction_blocks,
    min_direction_construct,
    sigma_dir1_from_blocks,
    sigma_dir2_from_blocks,
)

GAUGE_TOL = 1e-8          # off-block energy threshold, relative to ||Y||
CONE_TOL = 1e-8           # critical-cone duality gap, scaled below
SUBDIFF_ALIGN_TOL = 1e-9  # trace alignment in the subgradient test


def _flags_ok(f: SpectralFunctionSpec):
    return (f.lsc and f.convex) or f.lipschitz_on_domain


# -- simultaneous gauge --------------------------------------------------------

def simultaneous_gauge(X, Y, cluster_tol=CLUSTER_TOL, rank_tol=RANK_TOL):
    """Orthogonal pair (U, V) diagonalizing X and Y together.

    Returns (svd, part, sy) where ``svd`` is an ordered SVD of X whose
    (U, V) also satisfy U^T Y V = diag(sy) with sy the nonincreasing
    singular values of Y.  Within each equal-value block of X the freedom
    is one orthogonal factor applied to both sides, so the compressed Y
    block must be symmetric there; the zero block rotates freely on each
    side.  Raises ``NoSimultaneousGauge`` when the compression is not
    block-diagonal, not symmetric on a block, or yields values out of
    order, which characterizes Y not being alignable with X.
    """
    X = require_tall(as_matrix(X, "X"))
    Y = as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise ShapeError(f"X {X.shape} and Y {Y.shape} differ")
    m, n = X.shape
    svd = svd_ordered(X)
    part = partition_of(svd, cluster_tol, rank_tol)
    U, V = svd.U.copy(), svd.V.copy()
    M = U.T @ Y @ V
    tol = GAUGE_TOL * np.linalg.norm(Y)

    allowed = np.zeros((m, n), dtype=bool)
    for blk in part.alpha_blocks:
        allowed[np.ix_(blk, blk)] = True
    if part.r < n:
        allowed[part.r:, part.r:] = True
    off = np.linalg.norm(M[~allowed])
    if off > tol:
        raise NoSimultaneousGauge(
            f"off-block energy {off:.3e} exceeds {tol:.3e}")

    sy = np.zeros(n)
    for blk in part.alpha_blocks:
        Mb = M[np.ix_(blk, blk)]
        if np.linalg.norm(Mb - Mb.T) > tol:
            raise NoSimultaneousGauge(
                "compressed block not symmetric; one-sided rotation cannot "
                "diagonalize it")
        eig = sym_eig_ordered(Mb)
        U[:, blk] = U[:, blk] @ eig.Q
        V[:, blk] = V[:, blk] @ eig.Q
        sy[blk] = eig.lam
    if part.r < n:
        bh = part.betahat
        rs = svd_ordered(M[np.ix_(bh, part.beta)])
        U[:, bh] = U[:, bh] @ rs.U
        V[:, part.beta] = V[:, part.beta] @ rs.V
        sy[part.beta] = rs.sigma
    if np.any(np.diff(sy) > tol) or np.any(sy < -tol):
        raise NoSimultaneousGauge(
            "aligned values of Y not nonincreasing and nonnegative")
    return SvdDecomposition(U=U, sigma=svd.sigma.copy(), V=V), part, sy


# -- composite calculus --------------------------------------------------------

def F_eval(f: SpectralFunctionSpec, X) -> ExtendedValue:
    """F(X) = f(sigma(X))."""
    X = require_tall(as_matrix(X, "X"))
    return f.eval(np.linalg.svd(X, compute_uv=False))


def F_subderivative(f: SpectralFunctionSpec, X, H,
                    cluster_tol=CLUSTER_TOL,
                    rank_tol=RANK_TOL) -> ExtendedValue:
    """Chain rule dF(X)(H) = df(sigma(X))(sigma'(X; H))."""
    if not _flags_ok(f):
        raise AssumptionViolated(
            f"{f.name}: need (lsc and convex) or Lipschitz-on-domain")
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    if not math.isfinite(f.eval(blocks.gauge.sigma)):
        raise AssumptionViolated(f"{f.name} not finite at sigma(X)")
    return f.subderivative(blocks.gauge.sigma, sigma_dir1_from_blocks(blocks))


def F_subdiff_contains(f: SpectralFunctionSpec, X, Y, tol=None) -> bool:
    """Y in dF(X): sigma(Y) in df(sigma(X)) plus trace alignment."""
    if not (f.convex and f.lsc):
        raise AssumptionViolated(f"{f.name}: subdifferential test needs a "
                                 "convex lsc function")
    X = require_tall(as_matrix(X, "X"))
    Y = as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise ShapeError("X and Y must have equal shape")
    sx = np.linalg.svd(X, compute_uv=False)
    sy = np.linalg.svd(Y, compute_uv=False)
    if tol is None:
        tol = SUBDIFF_ALIGN_TOL * (
            1.0 + np.linalg.norm(X) * np.linalg.norm(Y))
    if not f.subdiff_contains(sx, sy):
        return False
    return abs(float(np.sum(X * Y)) - float(sx @ sy)) <= tol


def F_subdiff_element(f: SpectralFunctionSpec, X):
    """A subgradient of F at X from the representative of df(sigma(X))."""
    svd = svd_ordered(X)
    m, n = svd.shape
    rep = f.subdiff_representative(svd.sigma)
    return svd.U[:, :n] @ (rep[:, None] * svd.V.T)


def F_critical_cone_contains(f: SpectralFunctionSpec, X, Y, H, tol=None,
                             diagnostics=False,
                             cluster_tol=CLUSTER_TOL, rank_tol=RANK_TOL):
    """H in K_F(X, Y): the duality gap dF(X)(H) - <Y, H> vanishes.

    With ``diagnostics=True`` also reports the equivalent block
    conditions: the f-level cone membership of sigma'(X;H) and the
    Fan / von Neumann equality gaps of the compressed Y blocks against
    the reduced direction blocks (zero gaps characterize simultaneous
    ordered decompositions).
    """
    if not F_subdiff_contains(f, X, Y):
        raise NotASubgradient("Y is not a subgradient of F at X")
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    H = as_matrix(H, "H")
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    d1 = sigma_dir1_from_blocks(blocks)
    dF = f.subderivative(blocks.gauge.sigma, d1)
    gap = dF - float(np.sum(Y * H))
    if tol is None:
        tol = CONE_TOL * (1.0 + np.linalg.norm(Y) * np.linalg.norm(H))
    member = abs(gap) <= tol
    if not diagnostics:
        return member
    svd, part, sy = simultaneous_gauge(X, Y, cluster_tol, rank_tol)
    gblocks = direction_blocks(X, H, gauge=svd, cluster_tol=cluster_tol,
                               rank_tol=rank_tol)
    fan_gaps = []
    for ab in gblocks.alpha:
        yb = sy[ab.indices]
        fan_gaps.append(float(yb @ ab.eta - np.sum(np.diag(yb) * ab.S)))
    vn_gap = 0.0
    if gblocks.beta is not None:
        yb = sy[gblocks.beta.indices]
        vn_gap = float(yb @ gblocks.beta.eta
                       - np.sum(np.diag(yb) * gblocks.beta.R[:len(yb), :]))
    finfo = {
        "member": member,
        "duality_gap": gap,
        "f_level_member": f.critical_cone_contains(
            blocks.gauge.sigma, np.sort(sy)[::-1], d1, tol),
        "fan_gaps": fan_gaps,
        "von_neumann_gap": vn_gap,
    }
    return member, finfo


@dataclass(frozen=True)
class SecondSubderivativeReport:
    """Breakdown of d2F(X|Y)(H): value = d2f + alpha + beta when critical,
    +inf otherwise."""

    value: ExtendedValue
    d2f_term: ExtendedValue
    alpha_term: float
    beta_term: float
    critical: bool
    duality_gap: float
    warnings: tuple = ()


def _alpha_quadratic_terms(gblocks, sy, BH):
    """Per-block resolvent quadratics <diag(sy_b), G_b> and gap warnings."""
    total = 0.0
    warns = []
    scale = max(1.0, gblocks.gauge.sigma[0] if len(gblocks.gauge.sigma)
                else 1.0)
    for ab in gblocks.alpha:
        G = ab.resolvent.quadratic(BH)
        total += 2.0 * float(sy[ab.indices] @ np.diag(G))
        if ab.resolvent.min_gap < 1e-6 * scale:
            warns.append(
                f"spectral gap {ab.resolvent.min_gap:.3e} at block value "
                f"{ab.resolvent.mu:.6g}: alpha term ill-conditioned")
    return total, warns


def _beta_quadratic_term(gblocks, sy, H):
    """2 <Sigma(Y)_bh-beta, -U_bh^T H V_a Sigma_a^{-1} U_a^T H V_b>."""
    part = gblocks.part
    if part.r == 0 or part.r >= part.n:
        return 0.0
    svd = gblocks.gauge
    r = part.r
    Ua, Va = svd.U[:, :r], svd.V[:, :r]
    Ub = svd.U[:, part.betahat]
    Vb = svd.V[:, part.beta]
    Mb = -(Ub.T @ H @ Va / svd.sigma[:r]) @ (Ua.T @ H @ Vb)
    return 2.0 * float(sy[part.beta] @ np.diag(Mb))


def F_second_subderivative(f: SpectralFunctionSpec, X, Y, H,
                           cluster_tol=CLUSTER_TOL, rank_tol=RANK_TOL,
                           tol=None) -> SecondSubderivativeReport:
    """d2F(X|Y)(H) for convex f, with its additive breakdown.

    For critical H the value is the f-level second subderivative at the
    reduced data plus the alpha-block resolvent quadratic and the
    beta-block cross quadratic; outside the critical cone it is +inf.
    """
    if not (f.convex and f.lsc and f.lipschitz_on_domain):
        raise AssumptionViolated(
            f"{f.name}: second subderivative needs convex, lsc, "
            "Lipschitz-on-domain flags")
    if f.second_subderivative is None:
        raise AssumptionViolated(
            f"{f.name}: polyhedral flag or a second-subderivative hook "
            "is required")
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    H = as_matrix(H, "H")
    svd, part, sy = simultaneous_gauge(X, Y, cluster_tol, rank_tol)
    if not f.subdiff_contains(svd.sigma, sy):
        raise NotASubgradient(
            "sigma(Y) is not in the subdifferential of f at sigma(X)")
    gblocks = direction_blocks(X, H, gauge=svd, cluster_tol=cluster_tol,
                               rank_tol=rank_tol)
    d1 = sigma_dir1_from_blocks(gblocks)
    dF = f.subderivative(svd.sigma, d1)
    gap = dF - float(np.sum(Y * H))
    if tol is None:
        tol = CONE_TOL * (1.0 + np.linalg.norm(Y) * np.linalg.norm(H))
    critical = abs(gap) <= tol
    if not critical:
        return SecondSubderivativeReport(
            value=INF, d2f_term=INF, alpha_term=0.0, beta_term=0.0,
            critical=False, duality_gap=gap)
    d2f = f.second_subderivative(svd.sigma, sy, d1, tol)
    alpha_term, warns = _alpha_quadratic_terms(gblocks, sy, lift(H))
    beta_term = _beta_quadratic_term(gblocks, sy, H)
    value = d2f + alpha_term + beta_term if math.isfinite(d2f) else INF
    return SecondSubderivativeReport(
        value=value, d2f_term=d2f, alpha_term=alpha_term,
        beta_term=beta_term, critical=True, duality_gap=gap,
        warnings=tuple(warns))


def F_parabolic_subderivative(f: SpectralFunctionSpec, X, H, W,
                              cluster_tol=CLUSTER_TOL,
                              rank_tol=RANK_TOL) -> ExtendedValue:
    """d2F(X)(H | W) = d2f(sigma(X))(sigma'(X;H) | sigma''(X;H,W))."""
    if not (f.lipschitz_on_domain and (f.polyhedral or
                                       f.parabolic_subderivative)):
        raise AssumptionViolated(
            f"{f.name}: parabolic subderivative needs Lipschitz-on-domain "
            "and a parabolic hook")
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    sx = blocks.gauge.sigma
    if not math.isfinite(f.eval(sx)):
        raise AssumptionViolated(f"{f.name} not finite at sigma(X)")
    d1 = sigma_dir1_from_blocks(blocks)
    if not math.isfinite(f.subderivative(sx, d1)):
        raise AssumptionViolated("dF(X)(H) must be finite")
    d2 = sigma_dir2_from_blocks(blocks, as_matrix(H, "H"), W)
    return f.parabolic_subderivative(sx, d1, d2)


# -- nuclear norm specializations ----------------------------------------------

def nuclear_psi_eval(X, base_rank=None, cluster_tol=CLUSTER_TOL):
    """Sum of the trailing singular-value group.

    With ``base_rank=r`` the function is sigma_{r+1} + ... + sigma_n,
    the zero-block sum frozen at a base point of rank r; this is the
    right callable to feed difference-quotient oracles that probe a
    neighborhood of that base point.  With ``base_rank=None`` the group
    is the bottom cluster of X itself (all values equal to the smallest
    one within tolerance), which coincides with the frozen form at the
    base point.
    """
    X = require_tall(as_matrix(X, "X"))
    s = np.linalg.svd(X, compute_uv=False)
    if base_rank is not None:
        if not 0 <= base_rank <= len(s):
            raise ShapeError(f"base_rank {base_rank} outside 0..{len(s)}")
        return float(np.sum(s[base_rank:]))
    scale = max(1.0, s[0]) if len(s) else 1.0
    bottom = s[-1]
    return float(np.sum(s[np.abs(s - bottom) <= cluster_tol * scale]))


def _psi_blocks(X, cluster_tol, rank_tol):
    svd = svd_ordered(X)
    part = partition_of(svd, cluster_tol, rank_tol)
    if part.r >= part.n:
        raise FullRank("rank(X) = n: the zero block is empty")
    return svd, part


def nuclear_psi_subderivative(X, H, cluster_tol=CLUSTER_TOL,
                              rank_tol=RANK_TOL):
    """Directional derivative of the zero-cluster sum at rank-deficient X:
    the nuclear norm of the reduced block U_bh^T H V_b."""
    svd, part = _psi_blocks(X, cluster_tol, rank_tol)
    H = as_matrix(H, "H")
    R = svd.U[:, part.betahat].T @ H @ svd.V[:, part.beta]
    return float(np.sum(np.linalg.svd(R, compute_uv=False)))


def _psi_subgradient_block(X, Omega, svd, part, tol):
    """Extract Z with Omega = U_bh Z V_b^T, checking membership."""
    Omega = as_matrix(Omega, "Omega")
    Ub = svd.U[:, part.betahat]
    Vb = svd.V[:, part.beta]
    Z = Ub.T @ Omega @ Vb
    resid = np.linalg.norm(Omega - Ub @ Z @ Vb.T)
    if resid > tol:
        raise NotInRegularSubdiff(
            f"Omega has {resid:.3e} energy outside the zero-block range")
    svals = np.linalg.svd(Z, compute_uv=False)
    if len(svals) and svals[0] > 1.0 + tol:
        raise NotInRegularSubdiff(
            f"largest singular value of the reduced block is {svals[0]:.6g}")
    return Z


def nuclear_psi_second_epi(X, Omega, H, cluster_tol=CLUSTER_TOL,
                           rank_tol=RANK_TOL) -> ExtendedValue:
    """Second epi-derivative of the zero-cluster sum at X for Omega.

    Equals -2 <Omega, H V_a Sigma_a^{-1} U_a^T H> when the first-order
    identity psi'(X; H) = <Omega, H> holds, +inf otherwise.
    """
    svd, part = _psi_blocks(X, cluster_tol, rank_tol)
    H = as_matrix(H, "H")
    Omega = as_matrix(Omega, "Omega")
    tol = GAUGE_TOL * max(1.0, np.linalg.norm(Omega))
    _psi_subgradient_block(X, Omega, svd, part, tol)
    dpsi = nuclear_psi_subderivative(X, H, cluster_tol, rank_tol)
    pairing = float(np.sum(Omega * H))
    ctol = CONE_TOL * (1.0 + np.linalg.norm(Omega) * np.linalg.norm(H))
    if abs(dpsi - pairing) > ctol:
        return INF
    r = part.r
    if r == 0:
        return 0.0
    Ua, Va = svd.U[:, :r], svd.V[:, :r]
    corr = (H @ Va / svd.sigma[:r]) @ (Ua.T @ H)
    return -2.0 * float(np.sum(Omega * corr))


def nuclear_phi_second_diff(X, H, cluster_tol=CLUSTER_TOL,
                            rank_tol=RANK_TOL):
    """Second derivative of the top-r singular value sum along H.

    One resolvent trace per distinct positive singular value; smooth in a
    neighborhood of X because the r-th and (r+1)-th values stay apart.
    """
    X = as_matrix(X, "X")
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    if blocks.part.r == 0:
        raise RankZero("X has rank 0")
    BH = lift(H)
    total = 0.0
    for ab in blocks.alpha:
        total += 2.0 * float(np.trace(ab.resolvent.quadratic(BH)))
    return total


def nuclear_second_epi(X, Omega, H, cluster_tol=CLUSTER_TOL,
                       rank_tol=RANK_TOL) -> ExtendedValue:
    """Second epi-derivative of the nuclear norm at X for Omega.

    Splits as the smooth top-r term plus the zero-cluster epi-derivative
    taken at the zero-block part of Omega (the subgradient splits the
    same way: Omega = U_a V_a^T + U_bh Z V_b^T).
    """
    X = as_matrix(X, "X")
    Omega = as_matrix(Omega, "Omega")
    H = as_matrix(H, "H")
    svd = svd_ordered(X)
    part = partition_of(svd, cluster_tol, rank_tol)
    r, n = part.r, part.n
    tol = GAUGE_TOL * max(1.0, np.linalg.norm(Omega))
    M = svd.U.T @ Omega @ svd.V
    if np.linalg.norm(M[:r, :r] - np.eye(r)) > tol:
        raise NotASubgradient("top block of Omega is not the identity")
    if (np.linalg.norm(M[:r, r:]) > tol
            or np.linalg.norm(M[r:, :r]) > tol):
        raise NotASubgradient("Omega couples the top and zero blocks")
    if r < n:
        svals = np.linalg.svd(M[r:, r:], compute_uv=False)
        if len(svals) and svals[0] > 1.0 + tol:
            raise NotASubgradient(
                "zero-block part of Omega exceeds the unit spectral ball")
    phi_term = nuclear_phi_second_diff(X, H, cluster_tol, rank_tol) \
        if r > 0 else 0.0
    if r == n:
        return phi_term
    Ub = svd.U[:, part.betahat]
    Vb = svd.V[:, part.beta]
    Omega_beta = Ub @ M[r:, r:] @ Vb.T
    psi_term = nuclear_psi_second_epi(X, Omega_beta, H, cluster_tol,
                                      rank_tol)
    if not math.isfinite(psi_term):
        return INF
    return phi_term + psi_term


# -- invariant sets ------------------------------------------------------------

@dataclass(frozen=True)
class InvariantSetSpec:
    """An absolutely symmetric set described by membership / projection /
    tangency hooks on the singular-value side."""

    name: str
    contains: Callable
    tangent_contains: Callable
    tangent2_contains: Callable
    project: Optional[Callable] = None


def spectral_ball_set(radius=1.0, tol=1e-9) -> InvariantSetSpec:
    """The box {x : max |x_i| <= radius} (spectral-norm ball on sigma)."""
    if not (radius > 0):
        raise ShapeError("radius must be positive")

    def contains(x):
        return bool(np.max(np.abs(_as_vector(x)), initial=0.0)
                    <= radius + tol)

    def tangent(x, w):
        x, w = _as_vector(x), _as_vector(w, "w")
        hi = x >= radius - tol
        lo = x <= -radius + tol
        return bool(np.all(w[hi] <= tol) and np.all(w[lo] >= -tol))

    def tangent2(x, w, u):
        x, w, u = _as_vector(x), _as_vector(w, "w"), _as_vector(u, "u")
        if not tangent(x, w):
            return False
        hi = (x >= radius - tol) & (np.abs(w) <= tol)
        lo = (x <= -radius + tol) & (np.abs(w) <= tol)
        return bool(np.all(u[hi] <= tol) and np.all(u[lo] >= -tol))

    return InvariantSetSpec(
        name=f"spectral-ball:{radius:g}", contains=contains,
        tangent_contains=tangent, tangent2_contains=tangent2,
        project=lambda x: np.clip(_as_vector(x), -radius, radius))


def zero_set(tol=1e-9) -> InvariantSetSpec:
    def near_zero(v):
        return bool(np.max(np.abs(_as_vector(v)), initial=0.0) <= tol)

    return InvariantSetSpec(
        name="zero", contains=near_zero,
        tangent_contains=lambda x, w: near_zero(w),
        tangent2_contains=lambda x, w, u: near_zero(w) and near_zero(u),
        project=lambda x: np.zeros_like(_as_vector(x)))


def free_set() -> InvariantSetSpec:
    return InvariantSetSpec(
        name="free", contains=lambda x: True,
        tangent_contains=lambda x, w: True,
        tangent2_contains=lambda x, w, u: True,
        project=lambda x: _as_vector(x).copy())


def set_by_name(name: str) -> InvariantSetSpec:
    """Resolve "spectral-ball:R", "zero" or "free"."""
    if name == "zero":
        return zero_set()
    if name == "free":
        return free_set()
    if name.startswith("spectral-ball:"):
        return spectral_ball_set(float(name.split(":", 1)[1]))
    raise ShapeError(f"unknown invariant set {name!r}")


def invariant_tangent_contains(delta: InvariantSetSpec, X, H, order=1,
                               W=None, cluster_tol=CLUSTER_TOL,
                               rank_tol=RANK_TOL) -> bool:
    """Tangency through the singular value map: first order tests
    sigma'(X;H), second order tests sigma''(X;H,W)."""
    X = as_matrix(X, "X")
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    sx = blocks.gauge.sigma
    if not delta.contains(sx):
        raise NotInSet(f"sigma(X) is not in {delta.name}")
    d1 = sigma_dir1_from_blocks(blocks)
    if order == 1:
        return bool(delta.tangent_contains(sx, d1))
    if order != 2:
        raise ShapeError("order must be 1 or 2")
    if not delta.tangent_contains(sx, d1):
        raise NotInSet("H is not first-order tangent; second-order set "
                       "undefined")
    W = np.zeros_like(X) if W is None else as_matrix(W, "W")
    d2 = sigma_dir2_from_blocks(blocks, as_matrix(H, "H"), W)
    return bool(delta.tangent2_contains(sx, d1, d2))


def invariant_set_distance(delta: InvariantSetSpec, X):
    """Distance to the orthogonally invariant set sigma^{-1}(delta) and
    the nearest point, via projection of the singular values."""
    if delta.project is None:
        raise ProjectionUnavailable(f"{delta.name} has no projection hook")
    svd = svd_ordered(X)
    m, n = svd.shape
    p = np.asarray(delta.project(svd.sigma), dtype=float)
    # any absolutely symmetric set contains the sorted absolute value of
    # each member, and sorting can only decrease the distance to sigma(X)
    p = np.sort(np.abs(p))[::-1]
    distance = float(np.linalg.norm(svd.sigma - p))
    nearest = svd.U[:, :n] @ (p[:, None] * svd.V.T)
    return distance, nearest


# -- oracle guidance -----------------------------------------------------------

def guided_offsets(X, H, cluster_tol=CLUSTER_TOL, rank_tol=RANK_TOL):
    """Offset matrices D for liminf oracles: candidate minimizing
    perturbations w' = H + tau * D of the second-order quotients.

    The first offset steers the zero block along the cross term that the
    epi-limit construction uses; the second is half the direction that
    cancels all second-order terms (the zero-target minimizing parabola).
    """
    X = as_matrix(X, "X")
    H = as_matrix(H, "H")
    svd = svd_ordered(X)
    part = partition_of(svd, cluster_tol, rank_tol)
    out = []
    r = part.r
    if r > 0:
        Ua, Va = svd.U[:, :r], svd.V[:, :r]
        out.append((H @ Va / svd.sigma[:r]) @ (Ua.T @ H))
    out.append(0.5 * min_direction_construct(
        X, H, np.zeros(part.n), cluster_tol, rank_tol))
    return out
