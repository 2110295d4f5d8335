"""Point forecasts from a chain and forecast quality metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .designs import DesignSet
from .errors import ValidationError
from .mcmc import Chain

DRAW_BLOCK = 4096


@dataclass(frozen=True, eq=False)
class ForecastResult:
    """Point forecast over a horizon, optionally with predictive draws.

    ``point`` averages the noiseless model output over the kept draws (the
    noise integrates to zero); ``predictive_draws`` (horizon x draws), when
    requested, add per-draw Gaussian noise and support interval quantiles.
    """

    point: np.ndarray
    predictive_draws: np.ndarray | None
    dates: tuple = ()


def _eval_f_draws(chain: Chain, design: DesignSet, lo: int, hi: int) -> np.ndarray:
    seasonal = design.A @ chain.alpha[lo:hi].T
    shape = design.B @ chain.beta[lo:hi].T + design.C[:, None]
    u = chain.u[lo:hi][None, :]
    t = design.T[:, None]
    heat = chain.gamma[lo:hi][None, :] * (t - u) * (t <= u)
    return seasonal * shape + heat


def predict(
    chain: Chain,
    future_design: DesignSet,
    *,
    predictive_draws: bool = False,
    rng: np.random.Generator | None = None,
) -> ForecastResult:
    """Posterior-mean forecast over the future design's rows.

    Draws are evaluated in blocks to bound memory. Requesting predictive
    draws needs an rng for the observation noise.
    """
    if (
        future_design.spec.d_alpha != chain.spec.d_alpha
        or future_design.spec.d_beta != chain.spec.d_beta
    ):
        raise ValidationError(
            "future design dimensions do not match the chain "
            f"(({future_design.spec.d_alpha}, {future_design.spec.d_beta}) vs "
            f"({chain.spec.d_alpha}, {chain.spec.d_beta}))"
        )
    if predictive_draws and rng is None:
        raise ValidationError("predictive draws need an rng")
    n_draws = chain.n_kept
    h = future_design.n
    total = np.zeros(h)
    draws = np.empty((h, n_draws)) if predictive_draws else None
    for lo in range(0, n_draws, DRAW_BLOCK):
        hi = min(lo + DRAW_BLOCK, n_draws)
        f = _eval_f_draws(chain, future_design, lo, hi)
        total += f.sum(axis=1)
        if predictive_draws:
            noise = rng.standard_normal((h, hi - lo)) * np.sqrt(chain.sigma2[lo:hi])[None, :]
            draws[:, lo:hi] = f + noise
    return ForecastResult(total / n_draws, draws, dates=future_design.dates)


def criterion(f_true, y_hat) -> float:
    """Root-mean-square distance between the true regression function and
    the point forecast over the horizon."""
    f_true = np.asarray(f_true, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if f_true.shape != y_hat.shape:
        raise ValidationError(f"length mismatch: {f_true.shape} vs {y_hat.shape}")
    return float(np.sqrt(np.mean((f_true - y_hat) ** 2)))


def rmse(y, y_hat) -> float:
    """Root mean squared error."""
    return criterion(y, y_hat)


def mape(y, y_hat) -> float:
    """Mean absolute percentage error (in percent). Rejects zero targets."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValidationError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if np.any(y == 0.0):
        raise ValidationError("mape is undefined for zero targets")
    return float(100.0 * np.mean(np.abs((y - y_hat) / y)))


def write_forecast(result: ForecastResult, path) -> None:
    """Forecast CSV: date, point and, when draws exist, the 5%/95% bands."""
    with_bands = result.predictive_draws is not None
    if with_bands:
        q05, q95 = np.quantile(result.predictive_draws, [0.05, 0.95], axis=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "point", "q05", "q95"] if with_bands else ["date", "point"])
        for i, date in enumerate(result.dates):
            row = [date.isoformat(), repr(float(result.point[i]))]
            if with_bands:
                row += [repr(float(q05[i])), repr(float(q95[i]))]
            writer.writerow(row)
