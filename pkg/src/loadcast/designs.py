"""Calendar data, temperature preprocessing and design-matrix construction.

The daily load model sees the calendar through two partitions: offset
periods (additive level shifts inside the seasonal component) and
daytypes (multiplicative day shapes). This module parses the input CSV
format, builds the y, A, B, C, T blocks consumed by the samplers, and
runs the full-rank diagnostic that the posterior propriety result
requires.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

RANK_THRESHOLD = 1e-8

CSV_COLUMNS = ("date", "load", "temperature", "daytype", "offset_period", "excluded")


@dataclass(frozen=True)
class CalendarDay:
    """One calendar day with its partition memberships."""

    date: dt.date
    daytype: int
    offset_period: int
    excluded: bool = False


@dataclass(frozen=True)
class SeriesRecord:
    """Observed (load, temperature) pair for one day. Load may be NaN on
    excluded days."""

    day: CalendarDay
    load: float
    temperature: float

    def __post_init__(self):
        if not math.isfinite(self.temperature):
            raise ValidationError(f"{self.day.date}: temperature must be finite")


@dataclass(frozen=True)
class ModelSpec:
    """Model dimensions and threshold support.

    d11 is the Fourier order, d12 the number of offset periods, d2 the
    number of daytypes (the last one is the reference absorbed into C).
    ``cooling`` optionally fixes a cooling threshold whose regressor is
    appended to A.
    """

    d11: int = 4
    d12: int = 2
    d2: int = 7
    u_bounds: tuple[float, float] = (8.0, 19.0)
    cooling: float | None = None
    period_days: float = 365.25

    def __post_init__(self):
        if self.d11 < 1 or self.d12 < 1 or self.d2 < 2:
            raise ValidationError("need d11 >= 1, d12 >= 1, d2 >= 2")
        lo, hi = self.u_bounds
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError(f"invalid threshold bounds {self.u_bounds}")

    @property
    def d_alpha(self) -> int:
        return 2 * self.d11 + self.d12 + (1 if self.cooling is not None else 0)

    @property
    def d_beta(self) -> int:
        return self.d2 - 1

    @property
    def d_eta(self) -> int:
        # (alpha, beta, gamma, u)
        return self.d_alpha + self.d_beta + 2

    @property
    def d_theta(self) -> int:
        return self.d_eta + 1

    def check_support(self, temperatures) -> None:
        """Threshold bounds must be interior to the observed temperatures."""
        t = np.asarray(temperatures, dtype=float)
        lo, hi = self.u_bounds
        if not (t.min() < lo and hi < t.max()):
            raise ValidationError(
                f"threshold bounds ({lo}, {hi}) are not interior to observed "
                f"temperatures [{t.min():.2f}, {t.max():.2f}]"
            )


@dataclass(frozen=True, eq=False)
class DesignSet:
    """Observations and regressors for one instant of the day.

    Rows correspond to non-excluded days in date order. B uses the
    reference-daytype encoding (entries in {-1, 0, 1}) and C indicates the
    reference daytype.
    """

    y: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    T: np.ndarray
    spec: ModelSpec
    dates: tuple = ()
    origin: dt.date | None = None

    @property
    def n(self) -> int:
        return int(self.y.shape[0])


def _parse_row(i, row, allow_missing_load):
    try:
        date = dt.date.fromisoformat(row["date"].strip())
        temperature = float(row["temperature"])
        daytype = int(row["daytype"])
        offset_period = int(row["offset_period"])
        excluded = bool(int(row["excluded"]))
        raw_load = row["load"].strip()
        if raw_load == "":
            if not (excluded or allow_missing_load):
                raise ValueError("empty load on a non-excluded day")
            load = float("nan")
        else:
            load = float(raw_load)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ValidationError(f"line {i}: malformed row ({exc})") from None
    return SeriesRecord(CalendarDay(date, daytype, offset_period, excluded), load, temperature)


def load_series(path, *, allow_missing_load: bool = False) -> list[SeriesRecord]:
    """Parse the input CSV into date-sorted records.

    The file must carry the header ``date,load,temperature,daytype,
    offset_period,excluded``. Loads may be empty on excluded days (stored
    as NaN); duplicate dates are rejected. Pass ``allow_missing_load`` for
    future/prediction files whose loads are not needed.
    """
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise ValidationError(f"{path}: missing columns {missing}")
        for i, row in enumerate(reader, start=2):
            records.append(_parse_row(i, row, allow_missing_load))
    records.sort(key=lambda r: r.day.date)
    for a, b in zip(records, records[1:]):
        if a.day.date == b.day.date:
            raise ValidationError(f"duplicate date {a.day.date}")
    return records


def write_series(path, records) -> None:
    """Write records in the input CSV format (inverse of load_series)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in sorted(records, key=lambda r: r.day.date):
            load = "" if math.isnan(rec.load) else repr(rec.load)
            writer.writerow(
                [
                    rec.day.date.isoformat(),
                    load,
                    repr(rec.temperature),
                    rec.day.daytype,
                    rec.day.offset_period,
                    int(rec.day.excluded),
                ]
            )


def add_cooling_regressor(A, T, u_c) -> np.ndarray:
    """Append the cooling column (T - u_c) * 1{T >= u_c} to A."""
    A = np.asarray(A, dtype=float)
    T = np.asarray(T, dtype=float)
    if A.shape[0] != T.shape[0]:
        raise ValidationError("A and T row counts disagree")
    col = np.where(T >= u_c, T - u_c, 0.0)
    return np.column_stack([A, col])


def build_design(records, spec: ModelSpec, *, origin: dt.date | None = None) -> DesignSet:
    """Assemble the DesignSet for a list of records.

    Excluded days are dropped. The Fourier argument uses days elapsed
    since ``origin`` (default: the first kept observation); two datasets
    meant to share transferred parameters must use phase-congruent
    origins. Requires every daytype 1..d2 to appear at least once.
    """
    kept = sorted((r for r in records if not r.day.excluded), key=lambda r: r.day.date)
    if not kept:
        raise ValidationError("empty dataset after exclusions")
    for rec in kept:
        if not 1 <= rec.day.daytype <= spec.d2:
            raise ValidationError(f"{rec.day.date}: daytype {rec.day.daytype} outside 1..{spec.d2}")
        if not 1 <= rec.day.offset_period <= spec.d12:
            raise ValidationError(
                f"{rec.day.date}: offset_period {rec.day.offset_period} outside 1..{spec.d12}"
            )
    present = {r.day.daytype for r in kept}
    missing = sorted(set(range(1, spec.d2 + 1)) - present)
    if missing:
        raise ValidationError(f"missing daytype coverage: {missing}")

    if origin is None:
        origin = kept[0].day.date
    t = np.array([(r.day.date - origin).days for r in kept], dtype=float)
    n = len(kept)

    cols = []
    for j in range(1, spec.d11 + 1):
        w = 2.0 * j * np.pi * t / spec.period_days
        cols.append(np.cos(w))
        cols.append(np.sin(w))
    offsets = np.array([r.day.offset_period for r in kept])
    for j in range(1, spec.d12 + 1):
        cols.append((offsets == j).astype(float))
    A = np.column_stack(cols)

    T = np.array([r.temperature for r in kept], dtype=float)
    if spec.cooling is not None:
        A = add_cooling_regressor(A, T, spec.cooling)

    daytypes = np.array([r.day.daytype for r in kept])
    ref = (daytypes == spec.d2).astype(float)
    B = np.empty((n, spec.d_beta))
    for j in range(1, spec.d2):
        B[:, j - 1] = (daytypes == j).astype(float) - ref

    y = np.array([r.load for r in kept], dtype=float)
    return DesignSet(
        y=y, A=A, B=B, C=ref, T=T, spec=spec,
        dates=tuple(r.day.date for r in kept), origin=origin,
    )


def smooth_temperature(T, lam: float) -> np.ndarray:
    """Exponential smoothing S_t = lam*T_t + (1-lam)*S_{t-1}, S_1 = T_1."""
    if not 0.0 < lam <= 1.0:
        raise ValidationError(f"smoothing coefficient {lam} outside (0, 1]")
    T = np.asarray(T, dtype=float)
    if T.size == 0:
        raise ValidationError("empty temperature vector")
    out = np.empty_like(T)
    out[0] = T[0]
    for i in range(1, T.shape[0]):
        out[i] = lam * T[i] + (1.0 - lam) * out[i - 1]
    return out


def normal_temperatures(history, target_dates) -> np.ndarray:
    """Per-date mean of historical temperatures sharing the (month, day).

    Feb 29 targets fall back to the Feb 28 pool when no Feb 29 history
    exists.
    """
    pools: dict[tuple[int, int], list[float]] = {}
    for rec in history:
        pools.setdefault((rec.day.date.month, rec.day.date.day), []).append(rec.temperature)
    out = np.empty(len(target_dates))
    for i, date in enumerate(target_dates):
        key = (date.month, date.day)
        if key not in pools and key == (2, 29):
            key = (2, 28)
        if key not in pools:
            raise ValidationError(f"no historical temperatures for calendar day {date.month:02d}-{date.day:02d}")
        out[i] = float(np.mean(pools[key]))
    return out


@dataclass(frozen=True)
class RankCheckPoint:
    beta: np.ndarray
    u: float
    smallest_singular_value: float
    flagged: bool


@dataclass(frozen=True)
class RankReport:
    points: tuple[RankCheckPoint, ...]
    threshold: float = RANK_THRESHOLD

    @property
    def ok(self) -> bool:
        return not any(p.flagged for p in self.points)

    @property
    def flagged(self) -> tuple[RankCheckPoint, ...]:
        return tuple(p for p in self.points if p.flagged)


def heating_column(T, u) -> np.ndarray:
    """Heating degrees (T - u) * 1{T <= u}."""
    T = np.asarray(T, dtype=float)
    return np.where(T <= u, T - u, 0.0)


def rank_check(design: DesignSet, grid) -> RankReport:
    """Smallest singular value of the stacked regressor matrix over a grid.

    For each (beta, u) the matrix has rows [(B beta + C) * A_row,
    heating degrees]; a smallest singular value below the threshold flags
    the point. This is the full-rank condition under which the posterior
    is proper.
    """
    points = []
    for beta, u in grid:
        beta = np.asarray(beta, dtype=float)
        scale = design.B @ beta + design.C
        a_star = np.column_stack([scale[:, None] * design.A, heating_column(design.T, u)])
        smin = float(np.linalg.svd(a_star, compute_uv=False)[-1])
        points.append(RankCheckPoint(beta, float(u), smin, smin < RANK_THRESHOLD))
    return RankReport(tuple(points))


def default_rank_grid(spec: ModelSpec, n_u: int = 5):
    """Centroid, origin and the ball vertices crossed with a threshold grid."""
    d = spec.d_beta
    betas = [np.full(d, 1.0 / spec.d2), np.zeros(d)]
    betas.extend(np.eye(d))
    us = np.linspace(spec.u_bounds[0], spec.u_bounds[1], n_u)
    return [(b, u) for b in betas for u in us]
