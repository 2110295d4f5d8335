"""Posterior moment transfer from the long dataset to the short one.

The informative prior is anchored by the posterior mean and covariance of
(alpha, beta, gamma, u) estimated on the long dataset with the
non-informative prior. This module extracts those moments from a chain
and round-trips them through a small JSON artifact.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ValidationError
from .gaussian import repair_spd

if TYPE_CHECKING:
    from .mcmc import Chain

MIN_SUMMARY_DRAWS = 1000


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Posterior mean and covariance of eta on the source dataset.

    The covariance inverse and Cholesky factor are cached on construction;
    ``meta`` carries provenance (dataset id, draw count, ...).
    """

    mu: np.ndarray
    sigma: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if sigma.shape != (mu.shape[0], mu.shape[0]):
            raise ValidationError(
                f"summary dimensions disagree: mu has {mu.shape[0]} entries, sigma is {sigma.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ValidationError("summary moments must be finite")
        asym = np.max(np.abs(sigma - sigma.T), initial=0.0)
        if asym > 1e-10 * max(1.0, np.max(np.abs(sigma), initial=0.0)):
            raise ValidationError("summary covariance is not symmetric")
        sigma, chol, _ = repair_spd(sigma, label="summary covariance")
        inv = np.linalg.inv(sigma)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "sigma_chol", chol)
        object.__setattr__(self, "sigma_inv", 0.5 * (inv + inv.T))

    @property
    def d(self) -> int:
        return int(self.mu.shape[0])


def summarize(chain: "Chain", *, min_draws: int = MIN_SUMMARY_DRAWS) -> PosteriorSummary:
    """Empirical mean and covariance (divisor n-1) of the eta draws.

    A degenerate covariance (e.g. a constant chain) is jittered to stay
    factorizable and reported with a warning.
    """
    eta = chain.eta_matrix()
    n = eta.shape[0]
    if n < max(min_draws, 2):
        raise ValidationError(f"too few kept draws to summarize: {n} < {max(min_draws, 2)}")
    mu = eta.mean(axis=0)
    cov = np.cov(eta, rowvar=False, ddof=1)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
        raise ValidationError("non-finite posterior moments")
    repaired, _, jitter = repair_spd(cov, min_jitter=1e-12, label="posterior covariance")
    if jitter > 0.0:
        warnings.warn(
            f"degenerate posterior summary: covariance jittered by {jitter:.3e}", stacklevel=2
        )
    meta = {
        "draws": n,
        "prior": chain.prior,
        "seed": chain.config.seed,
        "iterations": chain.config.iterations,
    }
    return PosteriorSummary(mu, repaired, meta)


def save_summary(summary: PosteriorSummary, path) -> None:
    """Write the summary JSON: {"d", "mu", "sigma", "meta"}, row-major sigma."""
    payload = {
        "d": summary.d,
        "mu": [float(v) for v in summary.mu],
        "sigma": [[float(v) for v in row] for row in summary.sigma],
        "meta": summary.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_summary(path) -> PosteriorSummary:
    """Read a summary JSON back, validating schema and dimensions."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    for fieldname in ("d", "mu", "sigma"):
        if fieldname not in payload:
            raise ValidationError(f"{path}: missing field {fieldname!r}")
    d = int(payload["d"])
    mu = np.asarray(payload["mu"], dtype=float)
    sigma = np.asarray(payload["sigma"], dtype=float)
    if mu.shape != (d,) or sigma.shape != (d, d):
        raise ValidationError(
            f"{path}: dimension mismatch (d={d}, mu {mu.shape}, sigma {sigma.shape})"
        )
    return PosteriorSummary(mu, sigma, dict(payload.get("meta", {})))
