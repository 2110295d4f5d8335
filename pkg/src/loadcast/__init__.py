"""Bayesian estimation of a seasonal-heating electricity-load model with
hierarchical prior transfer from a long dataset to a short one."""

__version__ = "0.1.0"

from .designs import (
    CalendarDay,
    DesignSet,
    ModelSpec,
    SeriesRecord,
    add_cooling_regressor,
    build_design,
    default_rank_grid,
    load_series,
    normal_temperatures,
    rank_check,
    smooth_temperature,
)
from .errors import LoadcastError, NumericalError, ValidationError
from .forecast import ForecastResult, criterion, mape, predict, rmse
from .gaussian import (
    GaussianSpec,
    TruncationRegion,
    combine,
    conditional,
    regression_posterior,
    sample,
)
from .mcmc import (
    Chain,
    HyperPriorConfig,
    HyperState,
    MCMC_PRESETS,
    McmcConfig,
    adapt_proposal,
    cond_hyper,
    cond_linear_block,
    cond_sigma2,
    fit,
    load_chain,
    log_u_conditional,
    mh_step_u,
    save_chain,
)
from .model import ThetaState, eval_f, heating_term, log_likelihood
from .simulate import (
    ScenarioSpec,
    SimilarityScales,
    TruthParams,
    default_scenario,
    default_truth,
    run_replications,
    scale_truth,
    simulate,
    synth_temperature,
)
from .transfer import PosteriorSummary, load_summary, save_summary, summarize

__all__ = [name for name in dir() if not name.startswith("_")]
