"""First- and second-order directional derivatives of singular values.

Everything here is driven by the block structure that a direction H
induces on top of the multiplicity structure of X: inside each block of
equal singular values the first-order behaviour is an eigenvalue problem
for the reduced symmetric block, and across blocks the second-order
behaviour picks up a resolvent correction through the symmetric lift of
X.  Zero singular values behave like a reduced rectangular SVD problem
instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AsymmetricInput,
    ConditioningWarning,
    NotBlockSorted,
    ShapeError,
)
from .matrix_core import (
    CLUSTER_TOL,
    RANK_TOL,
    SingularPartition,
    SvdDecomposition,
    as_matrix,
    lift,
    lift_eigenbasis,
    partition_of,
    partition_values,
    svd_ordered,
    sym_eig_ordered,
)

# Spectral gaps below GAP_WARN * max(1, sigma_1) trigger a
# ConditioningWarning: the formulas stay exact but float error grows
# like 1/gap.
GAP_WARN = 1e-6


@dataclass(frozen=True)
class ResolventData:
    """Per-block resolvent ingredients for second-order formulas.

    ``P_block`` holds the eigenvectors of lift(X) for the block value
    ``mu``; ``P_comp`` the complementary eigenvectors with eigenvalues
    ``lam_comp`` (all different from mu by construction, so mu*I -
    diag(lam_comp) is invertible).
    """

    mu: float
    P_block: np.ndarray
    P_comp: np.ndarray
    lam_comp: np.ndarray
    min_gap: float

    def quadratic(self, BH):
        """P_b^T BH P_c (mu I - Lam)^{-1} P_c^T BH P_b, symmetric."""
        K = self.P_comp.T @ (BH @ self.P_block)
        return K.T @ (K / (self.mu - self.lam_comp)[:, None])


@dataclass(frozen=True)
class AlphaBlock:
    """Reduced data of one equal-positive-singular-value block."""

    indices: list            # global 0-based indices into sigma
    S: np.ndarray            # symmetrized reduced direction block
    Q: np.ndarray            # ordered eigenvectors of S
    eta: np.ndarray          # ordered eigenvalues of S
    groups: list             # second-level index groups, local to block
    resolvent: ResolventData


@dataclass(frozen=True)
class BetaBlock:
    """Reduced data of the zero-singular-value block."""

    indices: list            # global indices r..n-1
    R: np.ndarray            # U_betahat^T H V_beta
    Q: np.ndarray            # left orthogonal factor of R, (m-r) x (m-r)
    eta: np.ndarray          # singular values of R, length n-r
    Qhat: np.ndarray         # right orthogonal factor, (n-r) x (n-r)
    groups: list             # groups of equal positive values, local
    zero_group: list         # local indices with sigma(R) ~ 0


@dataclass(frozen=True)
class DirectionBlocks:
    """All reduced blocks of a pair (X, H) in a fixed SVD gauge."""

    gauge: SvdDecomposition
    part: SingularPartition
    alpha: list              # list of AlphaBlock
    beta: BetaBlock | None
    ltilde: np.ndarray       # 1-based second-level rank per index

    @property
    def shape(self):
        return self.gauge.shape


def _eigen_groups(vals, cluster_tol):
    """Second-level tie groups of a nonincreasing eigenvalue vector."""
    return list(partition_values(vals, cluster_tol, kind="eigen").blocks)


def direction_blocks(X, H, gauge=None, cluster_tol=CLUSTER_TOL,
                     rank_tol=RANK_TOL) -> DirectionBlocks:
    """Compute the per-direction reduced blocks of (X, H).

    ``gauge`` may supply a specific ordered SVD of X (any valid one); by
    default the deterministic ``svd_ordered`` gauge is used.  All outputs
    of ``sigma_dir1``/``sigma_dir2`` are invariant under this choice.
    """
    X = as_matrix(X, "X")
    H = as_matrix(H, "H")
    if X.shape != H.shape:
        raise ShapeError(f"X {X.shape} and H {H.shape} differ")
    m, n = X.shape
    svd = svd_ordered(X) if gauge is None else gauge
    part = partition_of(svd, cluster_tol, rank_tol)
    U, s, V = svd.U, svd.sigma, svd.V
    P, d = lift_eigenbasis(svd)
    BH = lift(H)
    scale = max(1.0, s[0]) if n else 1.0

    ltilde = np.zeros(n, dtype=int)
    alpha = []
    for blk in part.alpha_blocks:
        mu = float(s[blk[0]])
        Ua, Va = U[:, blk], V[:, blk]
        S = 0.5 * (Ua.T @ H @ Va + Va.T @ H.T @ Ua)
        eig = sym_eig_ordered(S)
        comp = np.setdiff1d(np.arange(m + n), blk)
        lam_comp = d[comp]
        min_gap = float(np.min(np.abs(mu - lam_comp))) if len(comp) else np.inf
        if min_gap < GAP_WARN * scale:
            warnings.warn(
                f"spectral gap {min_gap:.3e} at block value {mu:.6g} below "
                f"{GAP_WARN * scale:.1e}; second-order output ill-conditioned",
                ConditioningWarning, stacklevel=2)
        res = ResolventData(mu=mu, P_block=P[:, blk], P_comp=P[:, comp],
                            lam_comp=lam_comp, min_gap=min_gap)
        groups = _eigen_groups(eig.lam, cluster_tol)
        # rank within the second-level group
        for grp in groups:
            for pos, loc in enumerate(grp):
                ltilde[blk[loc]] = pos + 1
        alpha.append(AlphaBlock(indices=list(blk), S=S, Q=eig.Q, eta=eig.lam,
                                groups=groups, resolvent=res))

    beta = None
    if part.r < n:
        bh = part.betahat
        Ub, Vb = U[:, bh], V[:, part.beta]
        R = Ub.T @ H @ Vb
        rsvd = svd_ordered(R)
        rpart = partition_values(rsvd.sigma, cluster_tol, rank_tol)
        groups = list(rpart.alpha_blocks)
        zero_group = list(rpart.beta)
        for grp in groups + ([zero_group] if zero_group else []):
            for pos, loc in enumerate(grp):
                ltilde[part.r + loc] = pos + 1
        beta = BetaBlock(indices=list(part.beta), R=R, Q=rsvd.U,
                         eta=rsvd.sigma, Qhat=rsvd.V, groups=groups,
                         zero_group=zero_group)

    return DirectionBlocks(gauge=svd, part=part, alpha=alpha, beta=beta,
                           ltilde=ltilde)


def sigma_dir1_from_blocks(blocks: DirectionBlocks):
    """First directional derivative of every singular value."""
    n = blocks.shape[1]
    out = np.zeros(n)
    for ab in blocks.alpha:
        out[ab.indices] = ab.eta
    if blocks.beta is not None:
        out[blocks.beta.indices] = blocks.beta.eta
    return out


def _beta_cross_term(blocks: DirectionBlocks, H):
    """-2 U_bh^T H V_alpha Sigma_alpha^{-1} U_alpha^T H V_beta (the part
    of the reduced second-order direction that H induces on its own)."""
    part = blocks.part
    svd = blocks.gauge
    r = part.r
    if r == 0:
        return 0.0
    U, s, V = svd.U, svd.sigma, svd.V
    bh = part.betahat
    left = U[:, bh].T @ H @ V[:, :r]
    right = U[:, :r].T @ H @ V[:, part.beta]
    return -2.0 * (left / s[:r]) @ right


def sigma_dir2_from_blocks(blocks: DirectionBlocks, H, W):
    """Second directional derivative of every singular value along (H, W)."""
    m, n = blocks.shape
    W = as_matrix(W, "W")
    if W.shape != (m, n):
        raise ShapeError(f"W {W.shape} does not match X {(m, n)}")
    BW = lift(W)
    BH = lift(H)
    out = np.zeros(n)
    for ab in blocks.alpha:
        res = ab.resolvent
        M = res.P_block.T @ BW @ res.P_block + 2.0 * res.quadratic(BH)
        for grp in ab.groups:
            Qj = ab.Q[:, grp]
            vals = np.linalg.eigvalsh(Qj.T @ M @ Qj)[::-1]
            for pos, loc in enumerate(grp):
                out[ab.indices[loc]] = vals[pos]
    bb = blocks.beta
    if bb is not None:
        part = blocks.part
        svd = blocks.gauge
        Ub = svd.U[:, part.betahat]
        Vb = svd.V[:, part.beta]
        C = Ub.T @ W @ Vb + _beta_cross_term(blocks, H)
        for grp in bb.groups:
            Qk = bb.Q[:, grp]
            Qhk = bb.Qhat[:, grp]
            D = Qk.T @ C @ Qhk
            vals = np.linalg.eigvalsh(0.5 * (D + D.T))[::-1]
            for pos, loc in enumerate(grp):
                out[part.r + loc] = vals[pos]
        if bb.zero_group:
            nb = len(part.beta)
            cols = bb.zero_group + list(range(nb, len(part.betahat)))
            Dz = bb.Q[:, cols].T @ C @ bb.Qhat[:, bb.zero_group]
            vals = np.linalg.svd(Dz, compute_uv=False)
            for pos, loc in enumerate(bb.zero_group):
                out[part.r + loc] = vals[pos]
    return out


def sigma_dir1(X, H, cluster_tol=CLUSTER_TOL, rank_tol=RANK_TOL):
    """sigma'(X; H): directional derivatives of all singular values.

    Component s in an equal-value block equals the matching ordered
    eigenvalue of the symmetrized reduced block; for zero singular
    values it equals the matching singular value of the reduced
    rectangular block.  Gauge-invariant and positively homogeneous in H.
    """
    return sigma_dir1_from_blocks(direction_blocks(X, H, None, cluster_tol,
                                                   rank_tol))


def sigma_dir2(X, H, W, cluster_tol=CLUSTER_TOL, rank_tol=RANK_TOL):
    """sigma''(X; H, W): parabolic second directional derivatives.

    W = 0 is a first-class input; it gives the curvature of the
    singular-value map along the straight line X + tH.
    """
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    return sigma_dir2_from_blocks(blocks, as_matrix(H, "H"), W)


def eig_expand2(A, E, cluster_tol=CLUSTER_TOL):
    """Two-term expansion of every eigenvalue of A along A + tau E.

    Returns (first, second) with lambda_s(A + tau E) = lambda_s(A) +
    tau * first_s + tau^2/2 * second_s + O(tau^3).  A and E must be
    symmetric; asymmetry beyond 1e-12 * ||.|| is rejected.
    """
    A = as_matrix(A, "A")
    E = as_matrix(E, "E")
    if A.shape != E.shape or A.shape[0] != A.shape[1]:
        raise ShapeError(f"A {A.shape} and E {E.shape} must be equal square")
    for M, name in ((A, "A"), (E, "E")):
        dev = np.linalg.norm(M - M.T)
        if dev > 1e-12 * max(1.0, np.linalg.norm(M)):
            raise AsymmetricInput(f"{name} deviates from symmetry by {dev:.3e}")
    n = A.shape[0]
    eig = sym_eig_ordered(A)
    part = partition_values(eig.lam, cluster_tol, kind="eigen")
    first = np.zeros(n)
    second = np.zeros(n)
    for blk in part.blocks:
        lam_s = eig.lam[blk[0]]
        Us = eig.Q[:, blk]
        comp = np.setdiff1d(np.arange(n), blk)
        S = Us.T @ E @ Us
        inner = sym_eig_ordered(S)
        first[blk] = inner.lam
        if len(comp):
            K = eig.Q[:, comp].T @ E @ Us
            M2 = K.T @ (K / (lam_s - eig.lam[comp])[:, None])
        else:
            M2 = np.zeros((len(blk), len(blk)))
        groups = _eigen_groups(inner.lam, cluster_tol)
        for grp in groups:
            Qj = inner.Q[:, grp]
            vals = np.linalg.eigvalsh(2.0 * Qj.T @ M2 @ Qj)[::-1]
            for pos, loc in enumerate(grp):
                second[blk[loc]] = vals[pos]
    return first, second


def expansion_residual(X, H, W, t, cluster_tol=CLUSTER_TOL,
                       rank_tol=RANK_TOL):
    """sigma(X + tH + t^2 W/2) minus its two-term prediction.

    The prediction is sigma(X) + t sigma'(X;H) + t^2/2 sigma''(X;H,W);
    the residual is o(t^2) (O(t^3) in exact arithmetic).
    """
    if not (t > 0):
        raise ShapeError("t must be positive")
    X = as_matrix(X, "X")
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    d1 = sigma_dir1_from_blocks(blocks)
    d2 = sigma_dir2_from_blocks(blocks, as_matrix(H, "H"), W)
    s_t = np.linalg.svd(X + t * np.asarray(H) + 0.5 * t * t * np.asarray(W),
                        compute_uv=False)
    return s_t - (blocks.gauge.sigma + t * d1 + 0.5 * t * t * d2)


def _check_block_sorted(zbar, blocks: DirectionBlocks, tol):
    for ab in blocks.alpha:
        for grp in ab.groups:
            vals = zbar[[ab.indices[loc] for loc in grp]]
            if np.any(np.diff(vals) > tol):
                raise NotBlockSorted(
                    "zbar not nonincreasing inside an alpha-level group")
    bb = blocks.beta
    if bb is None:
        return
    r = blocks.part.r
    for grp in bb.groups:
        vals = zbar[[r + loc for loc in grp]]
        if np.any(np.diff(vals) > tol):
            raise NotBlockSorted(
                "zbar not nonincreasing inside a beta-level group")
    if bb.zero_group:
        vals = zbar[[r + loc for loc in bb.zero_group]]
        if np.any(np.diff(vals) > tol):
            raise NotBlockSorted(
                "zbar not nonincreasing inside the zero-value group")
        if np.any(vals < -tol):
            # second derivatives of identically-zero singular values are
            # singular values of a reduced block, hence never negative
            raise NotBlockSorted(
                "zbar negative on the zero-value group; unreachable target")


def min_direction_construct(X, H, zbar, cluster_tol=CLUSTER_TOL,
                            rank_tol=RANK_TOL):
    """Build W-hat with sigma''(X; H, W-hat) equal to a sorted target.

    ``zbar`` must be nonincreasing inside every second-level group of
    direction_blocks(X, H) (and nonnegative on the zero-value group).
    The construction cancels the resolvent term of each alpha block and
    the cross term of the beta block, then plants the target values via
    the second-level eigenvector/singular-vector bases.
    """
    X = as_matrix(X, "X")
    H = as_matrix(H, "H")
    zbar = np.asarray(zbar, dtype=float)
    m, n = X.shape
    if zbar.shape != (n,):
        raise ShapeError(f"zbar must have length {n}")
    blocks = direction_blocks(X, H, None, cluster_tol, rank_tol)
    _check_block_sorted(zbar, blocks, 1e-12 * max(1.0, np.max(np.abs(zbar))))
    svd = blocks.gauge
    part = blocks.part
    BH = lift(H)
    Wred = np.zeros((m, n))
    for ab in blocks.alpha:
        res = ab.resolvent
        A = ab.Q @ (zbar[ab.indices][:, None] * ab.Q.T)
        Wred[np.ix_(ab.indices, ab.indices)] = A - 2.0 * res.quadratic(BH)
    bb = blocks.beta
    if bb is not None:
        r = part.r
        Dz = np.zeros((m - r, n - r))
        np.fill_diagonal(Dz, zbar[r:])
        A = bb.Q @ Dz @ bb.Qhat.T
        Wred[r:, r:] = A - _beta_cross_term(blocks, H)
    return svd.U @ Wred @ svd.V.T
