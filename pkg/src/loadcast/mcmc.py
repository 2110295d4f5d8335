"""Metropolis-within-Gibbs samplers for both priors.

The non-informative sampler cycles sigma2, gamma, beta, alpha and a
random-walk Metropolis step on the threshold u. The informative sampler
additionally updates the similarity hyperparameters (r, q, l, k) before
the regression blocks, combining each likelihood Gaussian with the
conditional of the transferred prior. The Metropolis proposal variance is
estimated during burn-in and frozen, rescaled by (2.38/d)^2, for the kept
run.

The cond_* functions expose each full conditional; ``fit`` assembles the
same distributions in natural (precision, linear-term) form to keep the
hot loop free of redundant factorizations. A dedicated test pins the two
routes to each other.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve, lapack

from .designs import DesignSet, ModelSpec, default_rank_grid, heating_column, rank_check
from .errors import NumericalError, ValidationError
from .gaussian import (
    GaussianSpec,
    TruncationRegion,
    combine,
    conditional,
    regression_posterior,
    sample,
)
from .model import ThetaState, eval_f
from .transfer import PosteriorSummary

MH_RESCALE = 2.38


@dataclass(frozen=True, eq=False)
class HyperState:
    """Similarity hyperparameters of the informative prior."""

    k: np.ndarray
    l: float
    q: float
    r: float

    def __post_init__(self):
        object.__setattr__(self, "k", np.atleast_1d(np.asarray(self.k, dtype=float)))
        if not (self.l > 0.0 and self.r > 0.0):
            raise ValidationError("l and r must be strictly positive")


@dataclass(frozen=True)
class HyperPriorConfig:
    """Fixed vague-hyperprior constants (defaults follow the simulation study)."""

    sigma_q2: float = 1e4
    a_l: float = 1e-3
    b_l: float = 1e-3
    a_r: float = 1e-6
    b_r: float = 1e-6

    def __post_init__(self):
        if min(self.sigma_q2, self.a_l, self.b_l, self.a_r, self.b_r) <= 0.0:
            raise ValidationError("hyperprior constants must be strictly positive")


@dataclass(frozen=True)
class McmcConfig:
    """Chain length, seed and Metropolis tuning.

    ``iterations`` counts total sweeps including burn-in; the kept sample
    has iterations - burn_in draws. ``mh_initial_step`` is the proposal
    standard deviation (degC) used during burn-in; ``adapt_window`` is the
    number of trailing burn-in draws used to estimate the frozen proposal
    variance (defaults to the whole burn-in).
    """

    iterations: int = 20000
    burn_in: int = 2000
    seed: int = 0
    mh_initial_step: float = 0.5
    adapt_window: int | None = None

    def __post_init__(self):
        if self.adapt_window is None:
            object.__setattr__(self, "adapt_window", self.burn_in)
        if not 0 <= self.burn_in < self.iterations:
            raise ValidationError("need 0 <= burn_in < iterations")
        if not 0 <= self.adapt_window <= self.burn_in:
            raise ValidationError("need adapt_window <= burn_in")
        if self.mh_initial_step <= 0.0:
            raise ValidationError("mh_initial_step must be positive")

    @property
    def kept(self) -> int:
        return self.iterations - self.burn_in


MCMC_PRESETS = {
    "desk": McmcConfig(iterations=20000, burn_in=2000),
    "paper": McmcConfig(iterations=500000, burn_in=10000),
}


@dataclass(frozen=True, eq=False)
class Chain:
    """Kept draws of one run, plus the Metropolis acceptance rate."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    u: np.ndarray
    sigma2: np.ndarray
    k: np.ndarray | None
    l: np.ndarray | None
    q: np.ndarray | None
    r: np.ndarray | None
    acceptance_rate_u: float
    config: McmcConfig
    prior: str
    spec: ModelSpec
    origin: dt.date | None = None

    @property
    def n_kept(self) -> int:
        return int(self.gamma.shape[0])

    def eta_matrix(self) -> np.ndarray:
        """Kept draws of (alpha, beta, gamma, u), one row per iteration."""
        return np.column_stack([self.alpha, self.beta, self.gamma, self.u])


def _eta_indices(spec: ModelSpec):
    da, db = spec.d_alpha, spec.d_beta
    return {
        "alpha": np.arange(da),
        "beta": np.arange(da, da + db),
        "gamma": np.array([da + db]),
        "u": np.array([da + db + 1]),
    }


def cond_sigma2(state: ThetaState, design: DesignSet) -> tuple[float, float]:
    """Inverse-gamma full conditional of sigma2: (shape N/2, scale RSS/2)."""
    resid = design.y - eval_f(state, design)
    rss = float(resid @ resid)
    if rss == 0.0:
        raise NumericalError("zero residual: the state interpolates the data exactly")
    return 0.5 * design.n, 0.5 * rss


def _likelihood_parts(block: str, state: ThetaState, design: DesignSet):
    hb = heating_column(design.T, state.u)
    if block == "alpha":
        Z = state.gamma * hb
        M = (design.B @ state.beta + design.C)[:, None] * design.A
    elif block == "beta":
        a1 = design.A @ state.alpha
        Z = a1 * design.C + state.gamma * hb
        M = a1[:, None] * design.B
    elif block == "gamma":
        a1 = design.A @ state.alpha
        Z = a1 * (design.B @ state.beta + design.C)
        M = hb[:, None]
    else:
        raise ValidationError(f"unknown linear block {block!r}")
    return M, Z


def _prior_conditional(
    block: str, state: ThetaState, summary: PosteriorSummary, hyper: HyperState, spec: ModelSpec
) -> GaussianSpec:
    idx = _eta_indices(spec)
    own = idx[block]
    rest = np.concatenate([idx[b] for b in ("alpha", "beta", "gamma", "u") if b != block])
    mu = hyper.k * summary.mu
    prec = hyper.l * summary.sigma_inv
    eta = state.eta()
    return conditional(
        (prec[np.ix_(own, own)], prec[np.ix_(own, rest)], None),
        (mu[own], mu[rest]),
        eta[rest],
    )


def cond_linear_block(
    block: str,
    state: ThetaState,
    design: DesignSet,
    prior_info: tuple[PosteriorSummary, HyperState] | None = None,
) -> tuple[GaussianSpec, TruncationRegion | None]:
    """Gaussian full conditional of alpha, beta or gamma.

    Non-informative: the flat-prior regression posterior of the block.
    Informative: that Gaussian combined with the conditional of the
    transferred prior given the remaining coordinates of eta. The beta
    block additionally carries its positive-l1-ball truncation.
    """
    M, Z = _likelihood_parts(block, state, design)
    lik = regression_posterior(M, Z, design.y, state.sigma2)
    if prior_info is None:
        gauss = lik
    else:
        summary, hyper = prior_info
        gauss = combine(_prior_conditional(block, state, summary, hyper, design.spec), lik)
    region = TruncationRegion.positive_l1_ball(design.spec.d_beta) if block == "beta" else None
    return gauss, region


def cond_hyper(
    which: str,
    state: ThetaState,
    hyper: HyperState,
    summary: PosteriorSummary,
    cfg: HyperPriorConfig,
    *,
    mu_ridge: float | None = None,
):
    """Full conditional parameters of one similarity hyperparameter.

    Returns (shape, rate) for the gamma conditionals of r and l, (mean,
    variance) for q, and a GaussianSpec for k. The k conditional needs
    diag(mu_A) invertible; zero coordinates raise unless ``mu_ridge``
    replaces them by sign * ridge.
    """
    d = summary.d
    eta = state.eta()
    if which == "r":
        return cfg.a_r + 0.5 * d, cfg.b_r + 0.5 * float(np.sum((hyper.k - hyper.q) ** 2))
    if which == "q":
        prec = 1.0 / cfg.sigma_q2 + hyper.r * d
        mean = (1.0 / cfg.sigma_q2 + hyper.r * float(np.sum(hyper.k))) / prec
        return mean, 1.0 / prec
    if which == "l":
        dev = eta - hyper.k * summary.mu
        return cfg.a_l + 0.5 * d, cfg.b_l + 0.5 * float(dev @ summary.sigma_inv @ dev)
    if which == "k":
        # Precision-form evaluation of the conjugate combination
        # (q 1, r^-1 I) * ((M_A)^-1 eta, l^-1 (M_A)^-1 Sigma_A (M_A)^-1):
        # the scaled covariance spans many orders of magnitude, so its
        # precision l M_A Sigma_A^-1 M_A is assembled directly.
        mu_a = _ridged_mu(summary.mu, mu_ridge)
        lik_prec = hyper.l * (mu_a[:, None] * summary.sigma_inv * mu_a[None, :])
        prec = lik_prec + hyper.r * np.eye(d)
        b = lik_prec @ (eta / mu_a) + hyper.r * hyper.q
        chol = np.linalg.cholesky(prec)
        cov = cho_solve((chol, True), np.eye(d), check_finite=False)
        mean = cho_solve((chol, True), b, check_finite=False)
        return GaussianSpec(mean, 0.5 * (cov + cov.T))
    raise ValidationError(f"unknown hyperparameter block {which!r}")


def _ridged_mu(mu: np.ndarray, mu_ridge: float | None) -> np.ndarray:
    if mu_ridge is None:
        if np.any(mu == 0.0):
            raise NumericalError(
                "transferred posterior mean has a zero coordinate; "
                "rerun with a mu-ridge to regularize diag(mu_A)"
            )
        return mu
    out = mu.copy()
    small = np.abs(out) < mu_ridge
    signs = np.where(out[small] < 0.0, -1.0, 1.0)
    out[small] = signs * mu_ridge
    return out


def log_u_conditional(
    u_value: float,
    state: ThetaState,
    design: DesignSet,
    prior_info: tuple[PosteriorSummary, HyperState] | None = None,
) -> float:
    """Unnormalized log full conditional of the threshold at ``u_value``."""
    lo, hi = design.spec.u_bounds
    if not lo <= u_value <= hi:
        return -math.inf
    base = (design.A @ state.alpha) * (design.B @ state.beta + design.C)
    resid = design.y - base - state.gamma * heating_column(design.T, u_value)
    val = -0.5 * float(resid @ resid) / state.sigma2
    if prior_info is not None:
        summary, hyper = prior_info
        eta = state.eta()
        eta[-1] = u_value
        dev = eta - hyper.k * summary.mu
        val -= 0.5 * hyper.l * float(dev @ summary.sigma_inv @ dev)
    return val


def mh_step_u(
    state: ThetaState,
    design: DesignSet,
    prior_info,
    step_cov: float,
    rng: np.random.Generator,
) -> tuple[float, bool]:
    """One Gaussian random-walk Metropolis step on the threshold.

    Proposals outside the threshold bounds have zero posterior mass and
    are rejected outright.
    """
    delta = rng.normal(0.0, math.sqrt(step_cov))
    upsilon = rng.uniform()
    proposal = state.u + delta
    log_new = log_u_conditional(proposal, state, design, prior_info)
    if log_new == -math.inf:
        return state.u, False
    log_old = log_u_conditional(state.u, state, design, prior_info)
    if math.log(upsilon) < log_new - log_old:
        return float(proposal), True
    return state.u, False


def adapt_proposal(u_draws, d_block: int = 1, previous: float | None = None) -> float:
    """Proposal variance from burn-in draws, rescaled by (2.38/d)^2.

    Constant draws carry no scale information: the previous variance is
    kept (and required).
    """
    u_draws = np.asarray(u_draws, dtype=float)
    if u_draws.size < 2:
        raise ValidationError("need at least two draws to adapt the proposal")
    var = float(np.var(u_draws, ddof=1))
    if var == 0.0:
        if previous is None:
            raise ValidationError("zero variance in burn-in draws and no previous step to keep")
        return previous
    return var * (MH_RESCALE / d_block) ** 2


# ---------------------------------------------------------------------------
# Natural-parameter route used inside the sampling loop. Equivalent to the
# cond_* functions above (see the dual-route test in the suite); it avoids
# building covariance matrices for every block draw.


def natural_linear_block(M, Z, y, sigma2, prior_nat=None):
    """Precision and linear term of a linear block's full conditional.

    ``prior_nat`` packs the transferred-prior pieces (R, prior_rows,
    eta_own, dev) where R is the own-block slice of l * Sigma_A^-1,
    prior_rows its own-rows slice, and dev = eta - K mu_A; the conditional
    contributes precision R and linear term R eta_own - prior_rows dev.
    With a prior present the likelihood part M'M is gated for rank
    deficiency; without one, factorizing the returned precision performs
    the identical check.
    """
    if M.ndim == 1:
        M = M[:, None]
    G = M.T @ M
    if prior_nat is not None:
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise NumericalError("rank-deficient regression: M'M has no Cholesky factor") from None
    P = G / sigma2
    b = M.T @ (y - Z) / sigma2
    if prior_nat is not None:
        R, rows, eta_own, dev = prior_nat
        P = P + R
        b = b + R @ eta_own - rows @ dev
    return P, b


def _chol_precision(P):
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise NumericalError("rank-deficient regression: M'M has no Cholesky factor") from None


def _draw_from_natural(P, b, rng):
    chol = _chol_precision(P)
    mean = lapack.dpotrs(chol, b, lower=1)[0]
    z = rng.standard_normal(b.shape[0])
    draw = mean + lapack.dtrtrs(chol, z, lower=1, trans=1)[0]
    return draw, mean, chol


def _draw_ball_from_natural(P, b, rng, current, budget=1000):
    chol = _chol_precision(P)
    mean = lapack.dpotrs(chol, b, lower=1)[0]
    d = b.shape[0]
    used = 0
    while used < budget:
        m = min(32, budget - used)
        z = rng.standard_normal((d, m))
        cand = mean[:, None] + lapack.dtrtrs(chol, z, lower=1, trans=1)[0]
        ok = np.all(cand >= 0.0, axis=0) & (cand.sum(axis=0) <= 1.0)
        hit = np.flatnonzero(ok)
        if hit.size:
            return cand[:, hit[0]].copy()
        used += m
    cov = cho_solve((chol, True), np.eye(d), check_finite=False)
    gauss = GaussianSpec(mean, 0.5 * (cov + cov.T))
    return sample(gauss, TruncationRegion.positive_l1_ball(d), rng, initial=current,
                  rejection_budget=1)


def _initial_state(design, fix_beta, fix_gamma, fix_u):
    spec = design.spec
    beta0 = np.asarray(fix_beta, dtype=float) if fix_beta is not None else np.full(spec.d_beta, 1.0 / spec.d2)
    u0 = float(fix_u) if fix_u is not None else 0.5 * (spec.u_bounds[0] + spec.u_bounds[1])
    scale = design.B @ beta0 + design.C
    hb = heating_column(design.T, u0)
    if fix_gamma is None:
        m = np.column_stack([scale[:, None] * design.A, hb])
        coef, *_ = np.linalg.lstsq(m, design.y, rcond=None)
        alpha0, gamma0 = coef[:-1], float(coef[-1])
        if abs(gamma0) < 1e-9:
            gamma0 = -1.0
        fitted = m @ coef
    else:
        gamma0 = float(fix_gamma)
        m = scale[:, None] * design.A
        alpha0, *_ = np.linalg.lstsq(m, design.y - gamma0 * hb, rcond=None)
        fitted = m @ alpha0 + gamma0 * hb
    resid = design.y - fitted
    sigma20 = max(float(resid @ resid) / design.n, 1e-12)
    return ThetaState(alpha0, beta0, gamma0, u0, sigma20)


def _sample_gamma_rate(shape, rate, rng):
    return float(rng.gamma(shape) / rate)


def _sample_inverse_gamma(shape, scale, rng):
    return float(scale / rng.gamma(shape))


def fit(
    design: DesignSet,
    cfg: McmcConfig,
    prior: str = "noninformative",
    *,
    summary: PosteriorSummary | None = None,
    hyper_config: HyperPriorConfig | None = None,
    fix_beta=None,
    fix_gamma=None,
    fix_u=None,
    fix_k=None,
    mu_ridge: float | None = None,
    check_design: bool = True,
) -> Chain:
    """Run one Metropolis-within-Gibbs chain on a design.

    ``prior`` is "noninformative" or "informative"; the informative prior
    needs the transferred ``summary`` (its dimension must match the
    design's eta dimension). The fix_* arguments freeze a block at a given
    value and skip its update, which is how reduced submodels (e.g. the
    conjugate linear-Gaussian check) are run; fixing any block also skips
    the design diagnostics since reduced models violate them by design.
    Fully reproducible from cfg.seed.
    """
    spec = design.spec
    if prior not in ("noninformative", "informative"):
        raise ValidationError(f"unknown prior {prior!r}")
    informative = prior == "informative"
    if informative:
        if summary is None:
            raise ValidationError("the informative prior requires a posterior summary")
        if summary.d != spec.d_eta:
            raise ValidationError(
                f"summary dimension {summary.d} does not match the design's eta dimension {spec.d_eta}"
            )
        hyper_config = hyper_config or HyperPriorConfig()
        mu_a = _ridged_mu(summary.mu, mu_ridge) if fix_k is None else summary.mu
    if not np.all(np.isfinite(design.y)):
        raise ValidationError("loads contain non-finite values; cannot fit")
    if design.n <= spec.d_alpha + 1:
        raise NumericalError(
            f"too few observations for a proper posterior: need N > d_alpha + 1 = {spec.d_alpha + 1}, got {design.n}"
        )
    fixes = any(v is not None for v in (fix_beta, fix_gamma, fix_u))
    if check_design and not fixes:
        spec.check_support(design.T)
        report = rank_check(design, default_rank_grid(spec))
        if not report.ok:
            worst = min(p.smallest_singular_value for p in report.flagged)
            raise NumericalError(
                f"rank diagnostic failed at {len(report.flagged)} grid point(s) "
                f"(smallest singular value {worst:.3e})"
            )

    rng = np.random.default_rng(cfg.seed)
    state0 = _initial_state(design, fix_beta, fix_gamma, fix_u)

    da, db = spec.d_alpha, spec.d_beta
    ig, iu = da + db, da + db + 1
    eta = np.empty(spec.d_eta)
    eta[:da] = state0.alpha
    eta[da : da + db] = state0.beta
    eta[ig] = state0.gamma
    eta[iu] = state0.u
    sigma2 = state0.sigma2
    k = np.ones(spec.d_eta) if fix_k is None else np.asarray(fix_k, dtype=float)
    l = q = r = 1.0

    A, B, C, T, y = design.A, design.B, design.C, design.T, design.y
    n = design.n
    lo_u, hi_u = spec.u_bounds
    if informative:
        sigma_inv = summary.sigma_inv
        mu_inv = 1.0 / mu_a if fix_k is None else None
        hc = hyper_config

    kept = cfg.kept
    alpha_d = np.empty((kept, da))
    beta_d = np.empty((kept, db))
    gamma_d = np.empty(kept)
    u_d = np.empty(kept)
    sigma2_d = np.empty(kept)
    if informative:
        k_d = np.empty((kept, spec.d_eta))
        l_d = np.empty(kept)
        q_d = np.empty(kept)
        r_d = np.empty(kept)

    step_cov = cfg.mh_initial_step**2
    burn_u = np.empty(max(cfg.burn_in, 1))
    accepted = 0

    hb = heating_column(T, eta[iu])
    a1 = A @ eta[:da]
    x2 = B @ eta[da : da + db] + C

    for t in range(cfg.iterations):
        if t == cfg.burn_in and cfg.adapt_window >= 2 and fix_u is None:
            step_cov = adapt_proposal(
                burn_u[cfg.burn_in - cfg.adapt_window : cfg.burn_in], 1, previous=step_cov
            )

        # sigma2 | rest ~ IG(N/2, RSS/2)
        resid = y - a1 * x2 - eta[ig] * hb
        rss = float(resid @ resid)
        if rss == 0.0:
            raise NumericalError("zero residual: the state interpolates the data exactly")
        sigma2 = _sample_inverse_gamma(0.5 * n, 0.5 * rss, rng)

        prior_nat = None
        if informative:
            # r, q, l, k in the hierarchical scan order
            d = spec.d_eta
            r = _sample_gamma_rate(hc.a_r + 0.5 * d, hc.b_r + 0.5 * float(np.sum((k - q) ** 2)), rng)
            qprec = 1.0 / hc.sigma_q2 + r * d
            qmean = (1.0 / hc.sigma_q2 + r * float(np.sum(k))) / qprec
            q = qmean + rng.standard_normal() / math.sqrt(qprec)
            dev = eta - k * summary.mu
            l = _sample_gamma_rate(hc.a_l + 0.5 * d, hc.b_l + 0.5 * float(dev @ sigma_inv @ dev), rng)
            if fix_k is None:
                Pk = l * (mu_a[:, None] * summary.sigma_inv * mu_a[None, :])
                bk = Pk @ (eta * mu_inv) + r * q
                Pk = Pk + r * np.eye(d)
                k, _, _ = _draw_from_natural(Pk, bk, rng)
            lP0 = l * sigma_inv
            kmu = k * summary.mu

        def _prior_nat(sl):
            dev = eta - kmu
            return lP0[sl, sl], lP0[sl], eta[sl], dev

        # gamma | rest
        if fix_gamma is None:
            Z = a1 * x2
            sl = slice(ig, ig + 1)
            P, b = natural_linear_block(hb, Z, y, sigma2, _prior_nat(sl) if informative else None)
            draw, _, _ = _draw_from_natural(P, b, rng)
            eta[ig] = draw[0]

        # beta | rest (truncated to the positive l1 ball)
        if fix_beta is None:
            Z = a1 * C + eta[ig] * hb
            M = a1[:, None] * B
            sl = slice(da, da + db)
            P, b = natural_linear_block(M, Z, y, sigma2, _prior_nat(sl) if informative else None)
            eta[da : da + db] = _draw_ball_from_natural(P, b, rng, eta[da : da + db].copy())
            x2 = B @ eta[da : da + db] + C

        # alpha | rest
        Z = eta[ig] * hb
        M = x2[:, None] * A
        sl = slice(0, da)
        P, b = natural_linear_block(M, Z, y, sigma2, _prior_nat(sl) if informative else None)
        draw, _, _ = _draw_from_natural(P, b, rng)
        eta[:da] = draw
        a1 = A @ eta[:da]

        # u | rest via random-walk Metropolis
        if fix_u is None:
            delta = rng.normal(0.0, math.sqrt(step_cov))
            upsilon = rng.uniform()
            u_prop = eta[iu] + delta
            if lo_u <= u_prop <= hi_u:
                base = y - a1 * x2
                hb_prop = heating_column(T, u_prop)
                r_new = base - eta[ig] * hb_prop
                r_old = base - eta[ig] * hb
                log_ratio = -0.5 * (float(r_new @ r_new) - float(r_old @ r_old)) / sigma2
                if informative:
                    dev = eta - kmu
                    dev_prop = dev.copy()
                    dev_prop[iu] = u_prop - kmu[iu]
                    log_ratio -= 0.5 * l * (
                        float(dev_prop @ sigma_inv @ dev_prop) - float(dev @ sigma_inv @ dev)
                    )
                if math.log(upsilon) < log_ratio:
                    eta[iu] = u_prop
                    hb = hb_prop
                    if t >= cfg.burn_in:
                        accepted += 1
            if t < cfg.burn_in:
                burn_u[t] = eta[iu]

        if t >= cfg.burn_in:
            s = t - cfg.burn_in
            alpha_d[s] = eta[:da]
            beta_d[s] = eta[da : da + db]
            gamma_d[s] = eta[ig]
            u_d[s] = eta[iu]
            sigma2_d[s] = sigma2
            if informative:
                k_d[s] = k
                l_d[s] = l
                q_d[s] = q
                r_d[s] = r
            if __debug__:
                assert sigma2 > 0.0
                assert np.all(eta[da : da + db] >= 0.0) and eta[da : da + db].sum() <= 1.0 + 1e-12
                assert fix_u is not None or lo_u <= eta[iu] <= hi_u

    return Chain(
        alpha=alpha_d,
        beta=beta_d,
        gamma=gamma_d,
        u=u_d,
        sigma2=sigma2_d,
        k=k_d if informative else None,
        l=l_d if informative else None,
        q=q_d if informative else None,
        r=r_d if informative else None,
        acceptance_rate_u=(accepted / kept) if fix_u is None else 0.0,
        config=cfg,
        prior=prior,
        spec=spec,
        origin=design.origin,
    )


def _spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "d11": spec.d11,
        "d12": spec.d12,
        "d2": spec.d2,
        "u_bounds": list(spec.u_bounds),
        "cooling": spec.cooling,
        "period_days": spec.period_days,
    }


def _spec_from_dict(d: dict) -> ModelSpec:
    return ModelSpec(
        d11=int(d["d11"]),
        d12=int(d["d12"]),
        d2=int(d["d2"]),
        u_bounds=(float(d["u_bounds"][0]), float(d["u_bounds"][1])),
        cooling=None if d.get("cooling") is None else float(d["cooling"]),
        period_days=float(d.get("period_days", 365.25)),
    )


def chain_columns(chain: Chain) -> list[str]:
    cols = [f"alpha.{i + 1}" for i in range(chain.alpha.shape[1])]
    cols += [f"beta.{i + 1}" for i in range(chain.beta.shape[1])]
    cols += ["gamma", "u", "sigma2"]
    if chain.k is not None:
        cols += [f"k.{i + 1}" for i in range(chain.k.shape[1])]
        cols += ["l", "q", "r"]
    return cols


def save_chain(chain: Chain, path) -> None:
    """Write the chain CSV and its JSON sidecar (same stem, .json)."""
    path = Path(path)
    mats = [chain.alpha, chain.beta, chain.gamma[:, None], chain.u[:, None], chain.sigma2[:, None]]
    if chain.k is not None:
        mats += [chain.k, chain.l[:, None], chain.q[:, None], chain.r[:, None]]
    data = np.hstack(mats)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(chain_columns(chain))
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
    sidecar = {
        "prior": chain.prior,
        "seed": chain.config.seed,
        "acceptance_rate_u": chain.acceptance_rate_u,
        "n_kept": chain.n_kept,
        "config": {
            "iterations": chain.config.iterations,
            "burn_in": chain.config.burn_in,
            "seed": chain.config.seed,
            "mh_initial_step": chain.config.mh_initial_step,
            "adapt_window": chain.config.adapt_window,
        },
        "spec": _spec_to_dict(chain.spec),
        "origin": chain.origin.isoformat() if chain.origin else None,
    }
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_chain(path) -> Chain:
    """Read a chain CSV plus its sidecar back into a Chain."""
    path = Path(path)
    sidecar_path = path.with_suffix(".json")
    if not sidecar_path.exists():
        raise ValidationError(f"missing chain sidecar {sidecar_path}")
    with open(sidecar_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])
    if rows.size == 0:
        raise ValidationError(f"{path}: empty chain")
    da = sum(1 for c in header if c.startswith("alpha."))
    db = sum(1 for c in header if c.startswith("beta."))
    dk = sum(1 for c in header if c.startswith("k."))
    informative = dk > 0
    idx = {name: header.index(name) for name in ("gamma", "u", "sigma2")}
    cfg_d = meta["config"]
    cfg = McmcConfig(
        iterations=int(cfg_d["iterations"]),
        burn_in=int(cfg_d["burn_in"]),
        seed=int(cfg_d["seed"]),
        mh_initial_step=float(cfg_d["mh_initial_step"]),
        adapt_window=int(cfg_d["adapt_window"]),
    )
    origin = dt.date.fromisoformat(meta["origin"]) if meta.get("origin") else None
    k_cols = slice(idx["sigma2"] + 1, idx["sigma2"] + 1 + dk)
    return Chain(
        alpha=rows[:, :da],
        beta=rows[:, da : da + db],
        gamma=rows[:, idx["gamma"]],
        u=rows[:, idx["u"]],
        sigma2=rows[:, idx["sigma2"]],
        k=rows[:, k_cols] if informative else None,
        l=rows[:, header.index("l")] if informative else None,
        q=rows[:, header.index("q")] if informative else None,
        r=rows[:, header.index("r")] if informative else None,
        acceptance_rate_u=float(meta["acceptance_rate_u"]),
        config=cfg,
        prior=meta["prior"],
        spec=_spec_from_dict(meta["spec"]),
        origin=origin,
    )
