"""Absolutely symmetric functions on R^n and signed-permutation machinery.

The built-ins are the sum-of-k-largest-absolute-values family: k = n is
the l1 norm (generating the nuclear norm through the singular value map),
k = 1 the sup norm (generating the spectral norm), general k the Ky Fan
k-norm generator.  All are polyhedral, so their subderivative, critical
cone, second subderivative and parabolic subderivative have closed forms
built on one tie-aware "top-k face" classification.

Extended-real values are plain floats with math.inf: IEEE arithmetic is
absorbing for +inf and comparisons are total, which is exactly the
contract the codomain [-inf, +inf] needs.  Formulas never smuggle inf
through intermediate arithmetic; they return it explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import BadK, NotASubgradient, NotPolyhedral, ShapeError

ExtendedValue = float
INF = math.inf

# zero / tie classification threshold, scaled by (1 + ||x||_inf)
ZERO_TOL = 1e-12


def _as_vector(x, name="x"):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be a vector")
    return v


# -- signed permutations -------------------------------------------------------

@dataclass(frozen=True)
class SignedPermutation:
    """A coordinate permutation combined with a sign per position.

    Applying it sends x to y with y[i] = signs[i] * x[perm[i]]; the
    induced matrix has exactly one +-1 entry per row and column.
    """

    perm: tuple
    signs: tuple

    def __post_init__(self):
        n = len(self.perm)
        if sorted(self.perm) != list(range(n)) or len(self.signs) != n:
            raise ShapeError("perm must be a permutation with matching signs")
        if any(s not in (-1, 1) for s in self.signs):
            raise ShapeError("signs must be +-1")

    @property
    def n(self):
        return len(self.perm)

    def apply(self, x):
        x = _as_vector(x)
        return np.array([self.signs[i] * x[self.perm[i]]
                         for i in range(self.n)])

    def matrix(self):
        M = np.zeros((self.n, self.n))
        for i in range(self.n):
            M[i, self.perm[i]] = self.signs[i]
        return M

    def inverse(self):
        inv = [0] * self.n
        sg = [1] * self.n
        for i in range(self.n):
            inv[self.perm[i]] = i
            sg[self.perm[i]] = self.signs[i]
        return SignedPermutation(perm=tuple(inv), signs=tuple(sg))


def random_signed_permutation(n, rng) -> SignedPermutation:
    perm = tuple(int(i) for i in rng.permutation(n))
    signs = tuple(int(s) for s in rng.choice([-1, 1], size=n))
    return SignedPermutation(perm=perm, signs=signs)


def stabilizer_sample(x, rng, tol=None) -> SignedPermutation:
    """Random signed permutation Q with Q x = x: it permutes within
    equal-value groups of x and flips signs only on zero entries."""
    x = _as_vector(x)
    n = len(x)
    tol = ZERO_TOL * (1.0 + np.max(np.abs(x), initial=0.0)) if tol is None \
        else tol
    perm = np.arange(n)
    signs = np.ones(n, dtype=int)
    order = np.argsort(-x, kind="stable")
    i = 0
    while i < n:
        grp = [order[i]]
        while i + len(grp) < n and abs(x[order[i + len(grp)]] - x[grp[0]]) \
                <= tol:
            grp.append(order[i + len(grp)])
        shuffled = rng.permutation(grp)
        for a, b in zip(grp, shuffled):
            perm[a] = b
        if abs(x[grp[0]]) <= tol:
            for a in grp:
                signs[a] = int(rng.choice([-1, 1]))
        i += len(grp)
    return SignedPermutation(perm=tuple(int(p) for p in perm),
                             signs=tuple(int(s) for s in signs))


def stabilizer_contains(x, Q: SignedPermutation) -> bool:
    """True iff Q x = x (within the zero tolerance)."""
    x = _as_vector(x)
    tol = ZERO_TOL * (1.0 + np.max(np.abs(x), initial=0.0))
    return bool(np.max(np.abs(Q.apply(x) - x), initial=0.0) <= tol)


def stabilizer2_contains(x, w, Q: SignedPermutation) -> bool:
    """True iff Q fixes both x and the refinement direction w."""
    w = _as_vector(w, "w")
    tolw = ZERO_TOL * (1.0 + np.max(np.abs(w), initial=0.0))
    return stabilizer_contains(x, Q) and bool(
        np.max(np.abs(Q.apply(w) - w), initial=0.0) <= tolw)


# -- top-k face classification -------------------------------------------------

@dataclass(frozen=True)
class _Face:
    """Tie structure of |x| around its k-th largest value."""

    above: np.ndarray     # indices with |x_i| strictly above the tie value
    tied: np.ndarray      # indices in the tie cluster of the k-th value
    below: np.ndarray     # the rest
    q: int                # budget left for the tie cluster
    theta_zero: bool      # tie value is (numerically) zero
    signs: np.ndarray     # sign(x_i) for all i (0 for numerically zero)


def _classify(x, k):
    x = _as_vector(x)
    n = len(x)
    a = np.abs(x)
    tol = ZERO_TOL * (1.0 + np.max(a, initial=0.0))
    order = np.argsort(-a, kind="stable")
    # cluster the sorted magnitudes, locate the cluster holding rank k-1
    bounds = [0]
    for i in range(1, n):
        if abs(a[order[i]] - a[order[bounds[-1]]]) > tol:
            bounds.append(i)
    bounds.append(n)
    g = next(j for j in range(len(bounds) - 1)
             if bounds[j] <= k - 1 < bounds[j + 1])
    above = order[:bounds[g]]
    tied = order[bounds[g]:bounds[g + 1]]
    below = order[bounds[g + 1]:]
    signs = np.where(a <= tol, 0, np.sign(x)).astype(int)
    return _Face(above=above, tied=tied, below=below, q=k - len(above),
                 theta_zero=bool(a[order[bounds[g]]] <= tol), signs=signs)


def _sum_top(u, q):
    """Sum of the q largest entries of u."""
    if q <= 0:
        return 0.0
    return float(np.sort(u)[::-1][:q].sum())


def _signed_top_dirderiv(u, z, q, scale):
    """Directional derivative of v -> sum of q largest entries, at u
    along z: resolve the tie cluster at the q-th largest value of u."""
    n = len(u)
    if q >= n:
        return float(np.sum(z))
    tol = ZERO_TOL * (1.0 + scale)
    order = np.argsort(-u, kind="stable")
    theta = u[order[q - 1]]
    above2 = [i for i in order if u[i] > theta + tol]
    tied2 = [i for i in order if abs(u[i] - theta) <= tol]
    q2 = q - len(above2)
    return float(np.sum(z[above2])) + _sum_top(z[tied2], q2)


class _TopKAbs:
    """Sum of the k largest absolute values, with exact face calculus.

    k = None adapts to the input length, giving the l1 norm.
    """

    def __init__(self, k=None):
        self.k = None if k is None else int(k)

    def _check(self, x):
        x = _as_vector(x)
        k = len(x) if self.k is None else self.k
        if k < 1 or k > len(x):
            raise BadK(f"k={k} outside 1..{len(x)}")
        return x, k

    def eval(self, x):
        x, k = self._check(x)
        return _sum_top(np.abs(x), k)

    def subderivative(self, x, w):
        x, k = self._check(x)
        w = _as_vector(w, "w")
        f = _classify(x, k)
        val = float(np.sum(f.signs[f.above] * w[f.above]))
        if f.theta_zero:
            val += _sum_top(np.abs(w[f.tied]), f.q)
        else:
            val += _sum_top(f.signs[f.tied] * w[f.tied], f.q)
        return val

    def parabolic_subderivative(self, x, w, z):
        """Directional derivative of w -> df(x)(w) at w along z, which is
        the parabolic subderivative of a convex piecewise linear f."""
        x, k = self._check(x)
        w = _as_vector(w, "w")
        z = _as_vector(z, "z")
        f = _classify(x, k)
        val = float(np.sum(f.signs[f.above] * z[f.above]))
        if len(f.tied) == 0 or f.q <= 0:
            return val
        if f.theta_zero:
            # df restricted to the tied block is the top-q abs sum there
            inner = _TopKAbs(f.q)
            return val + inner.subderivative(w[f.tied], z[f.tied])
        u = f.signs[f.tied] * w[f.tied]
        uz = f.signs[f.tied] * z[f.tied]
        scale = float(np.max(np.abs(u), initial=0.0))
        return val + _signed_top_dirderiv(u, uz, f.q, scale)

    def subdiff_violation(self, x, v):
        """Max constraint violation of v against the subdifferential."""
        x, k = self._check(x)
        v = _as_vector(v, "v")
        f = _classify(x, k)
        viol = 0.0
        if len(f.above):
            viol = max(viol, float(np.max(np.abs(v[f.above]
                                                 - f.signs[f.above]))))
        if len(f.below):
            viol = max(viol, float(np.max(np.abs(v[f.below]))))
        if len(f.tied):
            if f.theta_zero:
                viol = max(viol, float(np.max(np.abs(v[f.tied]))) - 1.0,
                           float(np.sum(np.abs(v[f.tied]))) - f.q)
            else:
                tv = f.signs[f.tied] * v[f.tied]
                viol = max(viol, float(np.max(-tv)), float(np.max(tv)) - 1.0,
                           abs(float(np.sum(tv)) - f.q))
        return max(viol, 0.0)

    def subdiff_contains(self, x, v, tol=1e-10):
        return self.subdiff_violation(x, v) <= tol

    def subdiff_representative(self, x):
        x, k = self._check(x)
        f = _classify(x, k)
        v = np.zeros(len(x))
        v[f.above] = f.signs[f.above]
        if len(f.tied) and not f.theta_zero:
            v[f.tied] = f.signs[f.tied] * (f.q / len(f.tied))
        return v

    def subdiff_sample(self, x, rng):
        x, k = self._check(x)
        f = _classify(x, k)
        v = np.zeros(len(x))
        v[f.above] = f.signs[f.above]
        T = len(f.tied)
        if T and not f.theta_zero:
            for _ in range(50):
                t = rng.dirichlet(np.ones(T)) * f.q
                if np.all(t <= 1.0):
                    break
            else:
                t = np.full(T, f.q / T)
            v[f.tied] = f.signs[f.tied] * t
        elif T:
            raw = rng.uniform(-1.0, 1.0, T)
            budget = float(np.sum(np.abs(raw)))
            if budget > f.q:
                raw *= (f.q / budget) * rng.uniform(0.2, 1.0)
            v[f.tied] = raw
        return v


# -- spectral function specs ---------------------------------------------------

@dataclass(frozen=True)
class SpectralFunctionSpec:
    """An absolutely symmetric function bundled with its calculus hooks.

    ``second_subderivative(x, v, w, tol=None)`` must return the full
    second subderivative d2f(x|v)(w) as an extended real; for polyhedral
    built-ins it is the indicator of the critical cone.  Non-polyhedral
    functions must supply the hook themselves.
    """

    name: str
    polyhedral: bool
    convex: bool
    lsc: bool
    lipschitz_on_domain: bool
    eval: Callable
    subderivative: Callable
    subdiff_contains: Callable
    subdiff_representative: Callable
    critical_cone_contains: Callable
    parabolic_subderivative: Callable
    second_subderivative: Optional[Callable] = None
    subdiff_violation: Optional[Callable] = None
    subdiff_sample: Optional[Callable] = None


def _make_polyhedral_spec(name, core: _TopKAbs) -> SpectralFunctionSpec:
    def critical(x, v, w, tol=None):
        w = _as_vector(w, "w")
        v = _as_vector(v, "v")
        if tol is None:
            tol = 1e-9 * (1.0 + np.linalg.norm(v) * np.linalg.norm(w))
        return abs(core.subderivative(x, w) - float(v @ w)) <= tol

    def second(x, v, w, tol=None):
        return 0.0 if critical(x, v, w, tol) else INF

    return SpectralFunctionSpec(
        name=name, polyhedral=True, convex=True, lsc=True,
        lipschitz_on_domain=True,
        eval=core.eval,
        subderivative=core.subderivative,
        subdiff_contains=core.subdiff_contains,
        subdiff_representative=core.subdiff_representative,
        critical_cone_contains=critical,
        parabolic_subderivative=core.parabolic_subderivative,
        second_subderivative=second,
        subdiff_violation=core.subdiff_violation,
        subdiff_sample=core.subdiff_sample,
    )


def l1_spec() -> SpectralFunctionSpec:
    """Sum of absolute values; generates the nuclear norm."""
    return _make_polyhedral_spec("l1", _TopKAbs(None))


def linf_spec() -> SpectralFunctionSpec:
    """Largest absolute value; generates the spectral norm."""
    return _make_polyhedral_spec("linf", _TopKAbs(1))


def kyfan_spec(k: int) -> SpectralFunctionSpec:
    """Sum of the k largest absolute values; generates the Ky Fan k-norm."""
    if k < 1:
        raise BadK(f"k={k} must be >= 1")
    return _make_polyhedral_spec(f"kyfan:{k}", _TopKAbs(k))


def scale_spec(spec: SpectralFunctionSpec, c: float) -> SpectralFunctionSpec:
    """The spec of c*f for c > 0 (used to fold regularization weights)."""
    if not (c > 0):
        raise ShapeError("scale factor must be positive")
    if c == 1.0:
        return spec

    def contains(x, v, tol=1e-10):
        return spec.subdiff_contains(x, np.asarray(v, dtype=float) / c, tol)

    def second(x, v, w, tol=None):
        if spec.second_subderivative is None:
            raise NotPolyhedral(f"{spec.name} has no second subderivative "
                                "hook")
        return c * spec.second_subderivative(x, np.asarray(v, float) / c, w,
                                             tol)

    return replace(
        spec,
        name=f"{c:g}*{spec.name}",
        eval=lambda x: c * spec.eval(x),
        subderivative=lambda x, w: c * spec.subderivative(x, w),
        subdiff_contains=contains,
        subdiff_representative=lambda x: c * spec.subdiff_representative(x),
        critical_cone_contains=lambda x, v, w, tol=None:
            spec.critical_cone_contains(x, np.asarray(v, float) / c, w, tol),
        parabolic_subderivative=lambda x, w, z:
            c * spec.parabolic_subderivative(x, w, z),
        second_subderivative=second,
        subdiff_violation=(None if spec.subdiff_violation is None else
                           lambda x, v: c * spec.subdiff_violation(
                               x, np.asarray(v, float) / c)),
        subdiff_sample=(None if spec.subdiff_sample is None else
                        lambda x, rng: c * spec.subdiff_sample(x, rng)),
    )


def spec_by_name(name: str) -> SpectralFunctionSpec:
    """Resolve "l1", "linf" or "kyfan:k", used by CLI and job files."""
    if name == "l1":
        return l1_spec()
    if name == "linf":
        return linf_spec()
    if name.startswith("kyfan:"):
        return kyfan_spec(int(name.split(":", 1)[1]))
    raise BadK(f"unknown spectral function {name!r}")


# -- module-level operations ---------------------------------------------------

def f_subderivative(spec: SpectralFunctionSpec, x, w) -> ExtendedValue:
    """df(x)(w); requires f(x) finite."""
    if not math.isfinite(spec.eval(x)):
        raise NotASubgradient(f"{spec.name} not finite at base point")
    return spec.subderivative(x, w)


def f_subdiff_contains(spec, x, v, tol=1e-10) -> bool:
    return spec.subdiff_contains(x, v, tol)


def f_subdiff_representative(spec, x):
    return spec.subdiff_representative(x)


def f_critical_cone_contains(spec, x, v, w, tol=None) -> bool:
    """True iff df(x)(w) equals <v, w>; v must be a subgradient."""
    if not spec.subdiff_contains(x, v):
        raise NotASubgradient(f"v is not in the subdifferential of "
                              f"{spec.name} at x")
    return spec.critical_cone_contains(x, v, w, tol)


def f_second_subderivative(spec, x, v, w, tol=None) -> ExtendedValue:
    """d2f(x|v)(w): indicator of the critical cone for polyhedral f."""
    if spec.second_subderivative is None:
        raise NotPolyhedral(
            f"{spec.name} is not polyhedral and supplies no hook")
    if not spec.polyhedral and spec.second_subderivative is None:
        raise NotPolyhedral(spec.name)
    if not spec.subdiff_contains(x, v):
        raise NotASubgradient(f"v is not in the subdifferential of "
                              f"{spec.name} at x")
    return spec.second_subderivative(x, v, w, tol)


def f_parabolic_subderivative(spec, x, w, z) -> ExtendedValue:
    return spec.parabolic_subderivative(x, w, z)
