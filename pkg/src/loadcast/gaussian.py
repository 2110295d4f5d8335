"""Gaussian arithmetic backing every Gibbs block.

Provides the precision-weighted combination of two Gaussians, conditional
extraction from a jointly Gaussian vector given precision blocks, the
flat-prior regression posterior, and sampling with optional truncation to
the positive l1 ball.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import cho_solve

from .errors import NumericalError, ValidationError

SYMMETRY_TOL = 1e-10
REJECTION_BUDGET = 1000
BALL_SUM_TOL = 1e-12


def repair_spd(matrix, *, min_jitter=0.0, label="covariance"):
    """Symmetrize a matrix and factorize it, jittering once if needed.

    Returns ``(repaired, chol, jitter)`` where ``chol`` is the lower
    Cholesky factor and ``jitter`` is the diagonal bump that was applied
    (0.0 when none was needed). Raises NumericalError if the matrix still
    fails to factorize after one jitter pass.
    """
    matrix = np.asarray(matrix, dtype=float)
    sym = 0.5 * (matrix + matrix.T)
    try:
        return sym, np.linalg.cholesky(sym), 0.0
    except np.linalg.LinAlgError:
        pass
    d = sym.shape[0]
    jitter = max(1e-10 * np.trace(sym) / d, min_jitter)
    if jitter > 0.0:
        bumped = sym + jitter * np.eye(d)
        try:
            return bumped, np.linalg.cholesky(bumped), jitter
        except np.linalg.LinAlgError:
            pass
    raise NumericalError(f"{label} is not positive definite (Cholesky failed after jitter)")


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    """A multivariate normal N(mean, cov).

    The covariance is symmetrized on construction and must admit a
    Cholesky factorization (one jitter pass allowed); the lower factor is
    cached on the instance as ``chol``.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValidationError("mean must be a vector and cov a square matrix")
        if cov.shape[0] != mean.shape[0]:
            raise ValidationError(
                f"dimension mismatch: mean has {mean.shape[0]} entries, cov is {cov.shape[0]}x{cov.shape[1]}"
            )
        asym = np.max(np.abs(cov - cov.T), initial=0.0)
        if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(cov), initial=0.0)):
            raise ValidationError(f"covariance is not symmetric (max asymmetry {asym:.3e})")
        cov, chol, _ = repair_spd(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def precision(self) -> np.ndarray:
        p = cho_solve((self.chol, True), np.eye(self.dim))
        return 0.5 * (p + p.T)

    def logpdf(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        resid = x - self.mean
        w = np.linalg.solve(self.chol, resid)
        logdet = 2.0 * np.sum(np.log(np.diag(self.chol)))
        return float(-0.5 * (self.dim * np.log(2.0 * np.pi) + logdet + w @ w))


@dataclass(frozen=True)
class TruncationRegion:
    """Support restriction for sampling: none, or the positive l1 ball.

    ``positive_l1_ball`` is {x : x >= 0 componentwise, sum(x) <= 1}.
    """

    kind: str
    dimension: int

    def __post_init__(self):
        if self.kind not in ("none", "positive_l1_ball"):
            raise ValidationError(f"unknown truncation kind {self.kind!r}")
        if self.dimension < 1:
            raise ValidationError("dimension must be >= 1")

    @classmethod
    def none(cls, dimension: int) -> "TruncationRegion":
        return cls("none", dimension)

    @classmethod
    def positive_l1_ball(cls, dimension: int) -> "TruncationRegion":
        return cls("positive_l1_ball", dimension)

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape[0] != self.dimension:
            return False
        if self.kind == "none":
            return bool(np.all(np.isfinite(x)))
        return bool(np.all(x >= 0.0) and np.sum(x) <= 1.0 + BALL_SUM_TOL)


def combine(g1: GaussianSpec, g2: GaussianSpec) -> GaussianSpec:
    """Precision-weighted product of two Gaussians.

    Returns N([P1+P2]^-1 (P1 mu1 + P2 mu2), [P1+P2]^-1) with Pi the
    precision of gi. Commutative and associative up to rounding.
    """
    if g1.dim != g2.dim:
        raise ValidationError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    p1 = g1.precision()
    p2 = g2.precision()
    prec = p1 + p2
    _, chol, _ = repair_spd(prec, label="combined precision")
    cov = cho_solve((chol, True), np.eye(g1.dim))
    mean = cho_solve((chol, True), p1 @ g1.mean + p2 @ g2.mean)
    return GaussianSpec(mean, 0.5 * (cov + cov.T))


def conditional(precision_blocks, means, x2) -> GaussianSpec:
    """Conditional of X1 given X2 = x2 for a joint Gaussian in precision form.

    The joint is N((mu1, mu2), [[R, S], [S', T]]^-1); the conditional is
    N(mu1 - R^-1 S (x2 - mu2), R^-1). T is accepted for completeness and
    not used by the formula.
    """
    R, S, _ = precision_blocks
    mu1, mu2 = means
    R = np.atleast_2d(np.asarray(R, dtype=float))
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    S = np.asarray(S, dtype=float).reshape(mu1.shape[0], mu2.shape[0])
    if x2.shape != mu2.shape:
        raise ValidationError("x2 and mu2 dimensions disagree")
    try:
        chol = np.linalg.cholesky(0.5 * (R + R.T))
    except np.linalg.LinAlgError:
        raise NumericalError("conditional precision block is singular") from None
    cov = cho_solve((chol, True), np.eye(mu1.shape[0]))
    mean = mu1 - cho_solve((chol, True), S @ (x2 - mu2))
    return GaussianSpec(mean, 0.5 * (cov + cov.T))


def regression_posterior(M, Z, y, sigma2) -> GaussianSpec:
    """Flat-prior Gaussian posterior of x in y = Z + M x + noise(sigma2 I).

    Returns N([M'M]^-1 M'(y - Z), sigma2 [M'M]^-1). M must have full
    column rank d < n.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    n, d = M.shape
    if n <= d:
        raise ValidationError(f"regression needs more rows than columns (n={n}, d={d})")
    if sigma2 <= 0.0:
        raise ValidationError("sigma2 must be positive")
    y = np.asarray(y, dtype=float)
    Z = np.broadcast_to(np.asarray(Z, dtype=float), y.shape)
    G = M.T @ M
    try:
        chol = np.linalg.cholesky(0.5 * (G + G.T))
    except np.linalg.LinAlgError:
        raise NumericalError("rank-deficient regression: M'M has no Cholesky factor") from None
    mean = cho_solve((chol, True), M.T @ (y - Z))
    cov = sigma2 * cho_solve((chol, True), np.eye(d))
    return GaussianSpec(mean, 0.5 * (cov + cov.T))


def _feasible_start(g: GaussianSpec) -> np.ndarray:
    x = np.clip(g.mean, 0.0, None)
    s = x.sum()
    if s > 1.0:
        x = x * ((1.0 - 1e-9) / s)
    return x


def _gibbs_ball_sweeps(g, x, sweeps, rng):
    # Single-coordinate truncated-normal updates; each leaves N(mean, cov)
    # restricted to the ball invariant.
    prec = g.precision()
    d = g.dim
    for _ in range(sweeps):
        for j in range(d):
            pj = prec[j, j]
            rest = prec[j] @ (x - g.mean) - pj * (x[j] - g.mean[j])
            m = g.mean[j] - rest / pj
            s = 1.0 / np.sqrt(pj)
            hi = 1.0 - (x.sum() - x[j])
            if hi <= 0.0:
                x[j] = 0.0
                continue
            a, b = (0.0 - m) / s, (hi - m) / s
            x[j] = float(stats.truncnorm.rvs(a, b, loc=m, scale=s, random_state=rng))
    return x


def sample(
    g: GaussianSpec,
    region: TruncationRegion,
    rng: np.random.Generator,
    *,
    initial=None,
    rejection_budget: int = REJECTION_BUDGET,
    gibbs_sweeps: int | None = None,
) -> np.ndarray:
    """Draw from N(mean, cov) restricted to ``region``.

    Untruncated draws use the cached Cholesky factor. Ball-truncated draws
    first try plain rejection (``rejection_budget`` proposals); when the
    region holds too little mass the sampler falls back to coordinate-wise
    Gibbs sweeps with exact 1-D truncated conditionals, started from
    ``initial`` when given (pass the current MCMC state to keep a Gibbs
    chain exactly invariant) and from a feasible point otherwise.
    """
    if region.dimension != g.dim:
        raise ValidationError(f"region dimension {region.dimension} != Gaussian dimension {g.dim}")
    if region.kind == "none":
        x = g.mean + g.chol @ rng.standard_normal(g.dim)
        return x

    block = 32
    used = 0
    while used < rejection_budget:
        m = min(block, rejection_budget - used)
        z = rng.standard_normal((g.dim, m))
        cand = g.mean[:, None] + g.chol @ z
        ok = np.all(cand >= 0.0, axis=0) & (cand.sum(axis=0) <= 1.0)
        hit = np.flatnonzero(ok)
        if hit.size:
            x = cand[:, hit[0]].copy()
            if not region.contains(x):
                raise AssertionError("truncated draw left the region")
            return x
        used += m

    if initial is not None:
        x = np.asarray(initial, dtype=float).copy()
        if not region.contains(x):
            raise ValidationError("initial point for Gibbs fallback is outside the region")
        sweeps = 1 if gibbs_sweeps is None else gibbs_sweeps
    else:
        x = _feasible_start(g)
        sweeps = 128 if gibbs_sweeps is None else gibbs_sweeps
    x = _gibbs_ball_sweeps(g, x, sweeps, rng)
    if not region.contains(x):
        raise AssertionError("truncated draw left the region")
    return x
