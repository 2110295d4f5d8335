"""Regression function and likelihood of the seasonal-heating load model.

The mean load is (A alpha) * (B beta + C) plus a piecewise-linear heating
term that is active below the temperature threshold u.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .designs import DesignSet, heating_column
from .errors import ValidationError

GAMMA_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class ThetaState:
    """Full parameter point (alpha, beta, gamma, u, sigma2).

    beta lives in the positive l1 ball; gamma is the heating gradient in
    MW/degC; u the heating threshold in degC; sigma2 the noise variance.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: float
    u: float
    sigma2: float

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if np.any(beta < 0.0) or beta.sum() > 1.0 + 1e-12:
            raise ValidationError("beta must lie in the positive l1 ball")
        if not self.sigma2 > 0.0:
            raise ValidationError("sigma2 must be positive")
        if abs(self.gamma) < GAMMA_EPS:
            warnings.warn("heating gradient is numerically zero", stacklevel=2)

    def eta(self) -> np.ndarray:
        """Parameters of interest stacked as (alpha, beta, gamma, u)."""
        return np.concatenate([self.alpha, self.beta, [self.gamma, self.u]])

    def validate_for(self, design: DesignSet) -> None:
        spec = design.spec
        if self.alpha.shape[0] != spec.d_alpha or self.beta.shape[0] != spec.d_beta:
            raise ValidationError(
                f"state dims ({self.alpha.shape[0]}, {self.beta.shape[0]}) do not match "
                f"spec ({spec.d_alpha}, {spec.d_beta})"
            )
        lo, hi = spec.u_bounds
        if not lo <= self.u <= hi:
            raise ValidationError(f"threshold {self.u} outside [{lo}, {hi}]")


def heating_term(gamma: float, u: float, T):
    """gamma * (T - u) below the threshold, zero above."""
    return gamma * heating_column(T, u)


def eval_f(state: ThetaState, design: DesignSet) -> np.ndarray:
    """Noiseless model output for every row of the design."""
    if state.alpha.shape[0] != design.A.shape[1] or state.beta.shape[0] != design.B.shape[1]:
        raise ValidationError("parameter dimensions do not match the design")
    seasonal = design.A @ state.alpha
    shape = design.B @ state.beta + design.C
    return seasonal * shape + heating_term(state.gamma, state.u, design.T)


def log_likelihood(state: ThetaState, design: DesignSet) -> float:
    """Gaussian log-likelihood of the observed loads under ``state``."""
    resid = design.y - eval_f(state, design)
    n = design.n
    return float(-0.5 * n * math.log(2.0 * math.pi * state.sigma2) - resid @ resid / (2.0 * state.sigma2))
