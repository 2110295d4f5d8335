"""Synthetic data generation and the replication study engine.

Datasets are simulated from the load model on a weekly-daytype calendar
with a sinusoid + AR(1) temperature series (the measured series used in
the original study is not distributable). The long dataset starts at a
fixed epoch and the short one exactly 4 x 365.25 days later, so their
seasonal regressors are phase-congruent and transferred coefficients
compare one-to-one. The replication engine fits the long dataset, builds
the transferred prior, fits the short dataset under both priors and
scores year-ahead predictions against the noiseless truth.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .designs import (
    CalendarDay,
    DesignSet,
    ModelSpec,
    SeriesRecord,
    build_design,
    normal_temperatures,
)
from .errors import LoadcastError, ValidationError
from .forecast import criterion, predict
from .mcmc import McmcConfig, MCMC_PRESETS, fit
from .model import ThetaState, eval_f
from .transfer import MIN_SUMMARY_DRAWS, summarize

EPOCH = dt.date(1996, 9, 1)

PREDICTION_DAYS = 365


@dataclass(frozen=True, eq=False)
class TruthParams:
    """True (alpha, beta, gamma, u) used to generate a dataset."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: float
    u: float

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if np.any(beta < 0.0) or beta.sum() > 1.0 + 1e-12:
            raise ValidationError("true beta leaves the positive l1 ball")

    def eta(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta, [self.gamma, self.u]])


@dataclass(frozen=True)
class SimilarityScales:
    """Componentwise scalings turning the long dataset's truth into the
    short one's: all of alpha, the first beta coordinate, gamma and u."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    u: float = 1.0


def default_truth() -> tuple[TruthParams, ModelSpec]:
    """Reference truth of the simulation study and its model dimensions."""
    truth = TruthParams(
        alpha=np.array([27.0, 7.0, -3.0, 1.0, 5.0, -1.0, 4.0, 0.5, 490.0, 495.0]),
        beta=np.array([0.13, 0.15, 0.16, 0.16, 0.16, 0.13]),
        gamma=-3.0,
        u=14.0,
    )
    spec = ModelSpec(d11=4, d12=2, d2=7, u_bounds=(8.0, 19.0))
    return truth, spec


def scale_truth(truth: TruthParams, scales: SimilarityScales) -> TruthParams:
    """Apply the similarity scalings (only beta_1 scales among the betas)."""
    beta = truth.beta.copy()
    beta[0] *= scales.beta
    return TruthParams(
        alpha=scales.alpha * truth.alpha,
        beta=beta,
        gamma=scales.gamma * truth.gamma,
        u=scales.u * truth.u,
    )


def make_calendar(start: dt.date, n_days: int, spec: ModelSpec) -> list[CalendarDay]:
    """Weekly daytypes (reference = last weekday index) and a two-season
    offset partition; no special days."""
    days = []
    for i in range(n_days):
        date = start + dt.timedelta(days=i)
        daytype = (date.isoweekday() - 1) % spec.d2 + 1
        offset = 1 if 4 <= date.month <= 10 else 2
        days.append(CalendarDay(date, daytype, min(offset, spec.d12)))
    return days


def _synth_days(
    n_days, rng, *, start_day=0, mean=12.0, amplitude=8.0, peak_day=317, ar_phi=0.8, ar_sd=2.0
):
    t = np.arange(start_day, start_day + n_days, dtype=float)
    base = mean + amplitude * np.cos(2.0 * np.pi * (t - peak_day) / 365.25)
    if ar_sd == 0.0:
        return base
    noise = np.empty(n_days)
    noise[0] = rng.normal(0.0, ar_sd / math.sqrt(1.0 - ar_phi**2))
    innov = rng.normal(0.0, ar_sd, size=n_days)
    for i in range(1, n_days):
        noise[i] = ar_phi * noise[i - 1] + innov[i]
    return base + noise


def synth_temperature(years: float, rng: np.random.Generator, **kwargs) -> np.ndarray:
    """Daily temperature series: yearly sinusoid plus AR(1) noise.

    With the default parameters the noiseless series spans [4, 20] degC,
    keeping the default heating-threshold bounds interior to the observed
    range.
    """
    if years < 1:
        raise ValidationError("need at least one year of temperatures")
    return _synth_days(round(365.25 * years), rng, **kwargs)


def simulate(
    truth: TruthParams,
    temps,
    calendar,
    sigma: float,
    rng: np.random.Generator,
    *,
    spec: ModelSpec,
    origin: dt.date | None = None,
) -> DesignSet:
    """Generate observations y = f(truth) + sigma * noise on a calendar."""
    temps = np.asarray(temps, dtype=float)
    if len(calendar) != temps.shape[0]:
        raise ValidationError("calendar and temperature lengths disagree")
    records = [SeriesRecord(day, 0.0, float(t)) for day, t in zip(calendar, temps)]
    design = build_design(records, spec, origin=origin)
    state = ThetaState(truth.alpha, truth.beta, truth.gamma, truth.u, 1.0)
    f = eval_f(state, design)
    y = f + sigma * rng.standard_normal(design.n) if sigma > 0.0 else f.copy()
    return dataclasses.replace(design, y=y)


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """Full description of one replication experiment."""

    name: str
    truth: TruthParams
    spec: ModelSpec
    scales: SimilarityScales = SimilarityScales()
    sigma: float = 2.0
    years_a: int = 4
    years_b: int = 1
    replications: int = 30
    mcmc: McmcConfig = MCMC_PRESETS["desk"]
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError("need at least one replication")
        if self.sigma < 0.0:
            raise ValidationError("sigma must be non-negative")
        scale_truth(self.truth, self.scales)  # validates the scaled beta

    def truth_b(self) -> TruthParams:
        return scale_truth(self.truth, self.scales)


def default_scenario(name="ideal", scales=SimilarityScales(), **overrides) -> ScenarioSpec:
    truth, spec = default_truth()
    return ScenarioSpec(name=name, truth=truth, spec=spec, scales=scales, **overrides)


def scenario_to_json(scenario: ScenarioSpec, path) -> None:
    payload = {
        "name": scenario.name,
        "truth": {
            "alpha": [float(v) for v in scenario.truth.alpha],
            "beta": [float(v) for v in scenario.truth.beta],
            "gamma": scenario.truth.gamma,
            "u": scenario.truth.u,
        },
        "spec": {
            "d11": scenario.spec.d11,
            "d12": scenario.spec.d12,
            "d2": scenario.spec.d2,
            "u_bounds": list(scenario.spec.u_bounds),
            "cooling": scenario.spec.cooling,
        },
        "scales": dataclasses.asdict(scenario.scales),
        "sigma": scenario.sigma,
        "years_a": scenario.years_a,
        "years_b": scenario.years_b,
        "replications": scenario.replications,
        "mcmc": {
            "iterations": scenario.mcmc.iterations,
            "burn_in": scenario.mcmc.burn_in,
            "seed": scenario.mcmc.seed,
            "mh_initial_step": scenario.mcmc.mh_initial_step,
            "adapt_window": scenario.mcmc.adapt_window,
        },
        "seed": scenario.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def scenario_from_json(path) -> ScenarioSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    try:
        truth = TruthParams(
            alpha=np.asarray(payload["truth"]["alpha"], dtype=float),
            beta=np.asarray(payload["truth"]["beta"], dtype=float),
            gamma=float(payload["truth"]["gamma"]),
            u=float(payload["truth"]["u"]),
        )
        sp = payload["spec"]
        spec = ModelSpec(
            d11=int(sp["d11"]),
            d12=int(sp["d12"]),
            d2=int(sp["d2"]),
            u_bounds=(float(sp["u_bounds"][0]), float(sp["u_bounds"][1])),
            cooling=None if sp.get("cooling") is None else float(sp["cooling"]),
        )
        mc = payload.get("mcmc", {})
        mcmc = McmcConfig(
            iterations=int(mc.get("iterations", 20000)),
            burn_in=int(mc.get("burn_in", 2000)),
            seed=int(mc.get("seed", 0)),
            mh_initial_step=float(mc.get("mh_initial_step", 0.5)),
            adapt_window=None if mc.get("adapt_window") is None else int(mc["adapt_window"]),
        )
        return ScenarioSpec(
            name=str(payload.get("name", "scenario")),
            truth=truth,
            spec=spec,
            scales=SimilarityScales(**payload.get("scales", {})),
            sigma=float(payload.get("sigma", 2.0)),
            years_a=int(payload.get("years_a", 4)),
            years_b=int(payload.get("years_b", 1)),
            replications=int(payload.get("replications", 30)),
            mcmc=mcmc,
            seed=int(payload.get("seed", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: scenario schema error ({exc})") from None


@dataclass(frozen=True, eq=False)
class SimulatedStudy:
    """One replicate's datasets: designs, records and the noiseless truth
    of the prediction year."""

    design_a: DesignSet
    records_a: list
    design_b: DesignSet
    records_b: list
    design_pred: DesignSet
    records_pred: list
    f_true_pred: np.ndarray
    truth_a: TruthParams
    truth_b: TruthParams
    seeds: tuple


def _records_with_loads(calendar, temps, loads):
    return [
        SeriesRecord(day, float(y), float(t)) for day, t, y in zip(calendar, temps, loads)
    ]


def replicate_seeds(master_seed: int, replicate: int, n: int = 8) -> tuple:
    """Seed-splitting rule: one stream per replicate, derived from
    SeedSequence([master_seed, replicate]) and consumed in a fixed order
    (temperatures, y_A, y_B, y_pred, fit A, fit B noninfo, fit B info)."""
    ss = np.random.SeedSequence([int(master_seed), int(replicate)])
    return tuple(int(v) for v in ss.generate_state(n, dtype=np.uint64))


def simulate_study(scenario: ScenarioSpec, replicate: int = 0) -> SimulatedStudy:
    """Simulate one replicate's A, B and prediction-year datasets."""
    seeds = replicate_seeds(scenario.seed, replicate)
    spec = scenario.spec
    n_a = round(365.25 * scenario.years_a)
    n_b = round(365.25 * scenario.years_b)
    calendar = make_calendar(EPOCH, n_a + n_b + PREDICTION_DAYS, spec)
    temps = _synth_days(n_a + n_b, np.random.default_rng(seeds[0]))

    truth_a = scenario.truth
    truth_b = scenario.truth_b()

    cal_a, t_a = calendar[:n_a], temps[:n_a]
    design_a = simulate(truth_a, t_a, cal_a, scenario.sigma, np.random.default_rng(seeds[1]), spec=spec)
    records_a = _records_with_loads(cal_a, t_a, design_a.y)

    cal_b, t_b = calendar[n_a : n_a + n_b], temps[n_a : n_a + n_b]
    design_b = simulate(truth_b, t_b, cal_b, scenario.sigma, np.random.default_rng(seeds[2]), spec=spec)
    records_b = _records_with_loads(cal_b, t_b, design_b.y)

    cal_p = calendar[n_a + n_b :]
    t_p = normal_temperatures(records_a + records_b, [d.date for d in cal_p])
    design_p = simulate(
        truth_b, t_p, cal_p, scenario.sigma, np.random.default_rng(seeds[3]),
        spec=spec, origin=cal_b[0].date,
    )
    state_b = ThetaState(truth_b.alpha, truth_b.beta, truth_b.gamma, truth_b.u, 1.0)
    f_true = eval_f(state_b, design_p)
    records_p = _records_with_loads(cal_p, t_p, design_p.y)
    return SimulatedStudy(
        design_a, records_a, design_b, records_b, design_p, records_p,
        f_true, truth_a, truth_b, seeds,
    )


@dataclass
class ReplicationRow:
    replicate: int
    scenario: str
    crit_info: float
    crit_noninfo: float
    ratio: float
    k_post: np.ndarray
    l_post: float
    q_post: float
    r_post: float
    seed: int
    cover90: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.error == ""


def _coverage90(chain, truth_eta) -> float:
    eta = chain.eta_matrix()
    lo, hi = np.quantile(eta, [0.05, 0.95], axis=0)
    return float(np.mean((lo <= truth_eta) & (truth_eta <= hi)))


def run_replicate(scenario: ScenarioSpec, replicate: int) -> ReplicationRow:
    """One replicate: simulate, fit A, transfer, fit B both ways, score."""
    d_eta = scenario.spec.d_eta
    seeds = replicate_seeds(scenario.seed, replicate)
    try:
        study = simulate_study(scenario, replicate)
        cfg_a = dataclasses.replace(scenario.mcmc, seed=seeds[4])
        chain_a = fit(study.design_a, cfg_a, "noninformative")
        summary = summarize(chain_a, min_draws=min(MIN_SUMMARY_DRAWS, chain_a.n_kept))

        cfg_bn = dataclasses.replace(scenario.mcmc, seed=seeds[5])
        chain_bn = fit(study.design_b, cfg_bn, "noninformative")
        cfg_bi = dataclasses.replace(scenario.mcmc, seed=seeds[6])
        chain_bi = fit(study.design_b, cfg_bi, "informative", summary=summary)

        crit_non = criterion(study.f_true_pred, predict(chain_bn, study.design_pred).point)
        crit_inf = criterion(study.f_true_pred, predict(chain_bi, study.design_pred).point)
        return ReplicationRow(
            replicate=replicate,
            scenario=scenario.name,
            crit_info=crit_inf,
            crit_noninfo=crit_non,
            ratio=crit_inf / crit_non,
            k_post=chain_bi.k.mean(axis=0),
            l_post=float(chain_bi.l.mean()),
            q_post=float(chain_bi.q.mean()),
            r_post=float(chain_bi.r.mean()),
            seed=seeds[0],
            cover90=_coverage90(chain_bi, study.truth_b.eta()),
        )
    except (LoadcastError, np.linalg.LinAlgError) as exc:
        nan = float("nan")
        return ReplicationRow(
            replicate, scenario.name, nan, nan, nan, np.full(d_eta, nan),
            nan, nan, nan, seeds[0], nan, error=str(exc),
        )


@dataclass(frozen=True, eq=False)
class ReplicationTable:
    rows: tuple
    scenario: str

    def ok_rows(self):
        return [r for r in self.rows if r.ok]

    def aggregate(self) -> dict:
        """Mean ratio with its 5/80/90/95% quantiles plus hyperparameter
        location summaries over successful replicates."""
        ok = self.ok_rows()
        if not ok:
            raise ValidationError("no successful replicates to aggregate")
        ratios = np.array([r.ratio for r in ok])
        q05, q80, q90, q95 = np.quantile(ratios, [0.05, 0.80, 0.90, 0.95])
        return {
            "scenario": self.scenario,
            "replicates": len(self.rows),
            "failed": len(self.rows) - len(ok),
            "mean_ratio": float(ratios.mean()),
            "ratio_q05": float(q05),
            "ratio_q80": float(q80),
            "ratio_q90": float(q90),
            "ratio_q95": float(q95),
            "median_r_post": float(np.median([r.r_post for r in ok])),
            "median_q_post": float(np.median([r.q_post for r in ok])),
            "mean_cover90": float(np.mean([r.cover90 for r in ok])),
        }


def run_replications(scenario: ScenarioSpec, *, jobs: int = 1) -> ReplicationTable:
    """Run every replicate (in parallel when jobs > 1).

    Rows are deterministic per (scenario.seed, replicate) regardless of
    the execution order or job count; failures are recorded with their
    error message instead of aborting the table.
    """
    indices = range(scenario.replications)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_replicate, [scenario] * scenario.replications, indices))
    else:
        rows = [run_replicate(scenario, r) for r in indices]
    return ReplicationTable(tuple(rows), scenario.name)


def table_columns(d_eta: int) -> list[str]:
    cols = ["replicate", "scenario", "crit_info", "crit_noninfo", "ratio"]
    cols += [f"k_post.{i + 1}" for i in range(d_eta)]
    cols += ["l_post", "q_post", "r_post", "seed", "cover90", "error"]
    return cols


def save_table(table: ReplicationTable, path) -> None:
    rows = table.rows
    d_eta = rows[0].k_post.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table_columns(d_eta))
        for r in rows:
            writer.writerow(
                [r.replicate, r.scenario, repr(r.crit_info), repr(r.crit_noninfo), repr(r.ratio)]
                + [repr(float(v)) for v in r.k_post]
                + [repr(r.l_post), repr(r.q_post), repr(r.r_post), r.seed, repr(r.cover90), r.error]
            )


def load_table(path) -> ReplicationTable:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d_eta = sum(1 for c in header if c.startswith("k_post."))
        if not set(table_columns(d_eta)).issubset(header):
            raise ValidationError(f"{path}: unexpected table header")
        rows = []
        col = {name: header.index(name) for name in header}
        for raw in reader:
            rows.append(
                ReplicationRow(
                    replicate=int(raw[col["replicate"]]),
                    scenario=raw[col["scenario"]],
                    crit_info=float(raw[col["crit_info"]]),
                    crit_noninfo=float(raw[col["crit_noninfo"]]),
                    ratio=float(raw[col["ratio"]]),
                    k_post=np.array([float(raw[col[f"k_post.{i + 1}"]]) for i in range(d_eta)]),
                    l_post=float(raw[col["l_post"]]),
                    q_post=float(raw[col["q_post"]]),
                    r_post=float(raw[col["r_post"]]),
                    seed=int(raw[col["seed"]]),
                    cover90=float(raw[col["cover90"]]),
                    error=raw[col["error"]],
                )
            )
    if not rows:
        raise ValidationError(f"{path}: empty replication table")
    return ReplicationTable(tuple(rows), rows[0].scenario)
