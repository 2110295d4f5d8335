"""Calendar parsing, design-matrix construction, temperature preprocessing
and the rank diagnostic."""
import datetime as dt
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loadcast.designs import (
    CalendarDay,
    ModelSpec,
    SeriesRecord,
    add_cooling_regressor,
    build_design,
    default_rank_grid,
    load_series,
    normal_temperatures,
    rank_check,
    smooth_temperature,
    write_series,
)
from loadcast.errors import ValidationError
from loadcast.simulate import default_scenario, simulate_study


def day(datestr, daytype=1, offset=1, excluded=False):
    return CalendarDay(dt.date.fromisoformat(datestr), daytype, offset, excluded)


def small_records(n=14, d2=7, d12=2):
    start = dt.date(2001, 1, 1)
    recs = []
    for i in range(n):
        d = start + dt.timedelta(days=i)
        recs.append(
            SeriesRecord(
                CalendarDay(d, i % d2 + 1, i % d12 + 1), 100.0 + i, 10.0 + 0.1 * i
            )
        )
    return recs


class TestModelSpec:
    def test_dimensions(self):
        spec = ModelSpec(d11=4, d12=2, d2=7)
        assert spec.d_alpha == 10
        assert spec.d_beta == 6
        assert spec.d_eta == 18
        assert spec.d_theta == 19

    def test_cooling_adds_a_column(self):
        assert ModelSpec(cooling=16.0).d_alpha == ModelSpec().d_alpha + 1

    def test_invalid_bounds(self):
        with pytest.raises(ValidationError):
            ModelSpec(u_bounds=(19.0, 8.0))

    def test_support_check(self):
        spec = ModelSpec(u_bounds=(8.0, 19.0))
        spec.check_support([4.0, 25.0])
        with pytest.raises(ValidationError):
            spec.check_support([10.0, 25.0])


class TestLoadSeries:
    def test_well_formed_file_sorted(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text(
            "date,load,temperature,daytype,offset_period,excluded\n"
            "2001-01-03,102.0,8.5,3,1,0\n"
            "2001-01-01,100.0,9.5,1,1,0\n"
            "2001-01-02,101.0,9.0,2,1,0\n"
        )
        recs = load_series(path)
        assert [r.day.date.day for r in recs] == [1, 2, 3]
        assert recs[0].load == 100.0

    def test_empty_load_on_excluded_day(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text(
            "date,load,temperature,daytype,offset_period,excluded\n"
            "2001-01-01,,9.5,1,1,1\n"
        )
        recs = load_series(path)
        assert math.isnan(recs[0].load)

    def test_empty_load_on_kept_day_rejected(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text(
            "date,load,temperature,daytype,offset_period,excluded\n"
            "2001-01-01,,9.5,1,1,0\n"
        )
        with pytest.raises(ValidationError, match="line 2"):
            load_series(path)
        assert math.isnan(load_series(path, allow_missing_load=True)[0].load)

    def test_duplicate_date(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text(
            "date,load,temperature,daytype,offset_period,excluded\n"
            "2001-01-01,100,9.5,1,1,0\n"
            "2001-01-01,101,9.0,2,1,0\n"
        )
        with pytest.raises(ValidationError, match="2001-01-01"):
            load_series(path)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("date,load,temperature,daytype\n2001-01-01,1,2,3\n")
        with pytest.raises(ValidationError, match="offset_period"):
            load_series(path)

    def test_round_trip(self, tmp_path):
        recs = small_records()
        path = tmp_path / "out.csv"
        write_series(path, recs)
        back = load_series(path)
        assert len(back) == len(recs)
        assert all(a.load == b.load and a.day == b.day for a, b in zip(recs, back))


class TestBuildDesign:
    def test_reference_day_encoding(self):
        spec = ModelSpec(d11=1, d12=2, d2=7)
        recs = small_records()
        design = build_design(recs, spec)
        ref_rows = [i for i, r in enumerate(recs) if r.day.daytype == spec.d2]
        for i in ref_rows:
            np.testing.assert_array_equal(design.B[i], -np.ones(6))
            assert design.C[i] == 1.0
        first = recs[0]
        assert first.day.daytype == 1
        np.testing.assert_array_equal(design.B[0], [1, 0, 0, 0, 0, 0])
        assert design.C[0] == 0.0

    def test_fourier_at_origin(self):
        spec = ModelSpec(d11=1, d12=2, d2=7)
        design = build_design(small_records(), spec)
        assert design.A[0, 0] == pytest.approx(1.0)  # cos 0
        assert design.A[0, 1] == pytest.approx(0.0)  # sin 0

    def test_encoding_value_sets(self):
        spec = ModelSpec(d11=2, d12=2, d2=7)
        design = build_design(small_records(), spec)
        assert set(np.unique(design.B)) <= {-1.0, 0.0, 1.0}
        assert set(np.unique(design.C)) <= {0.0, 1.0}

    def test_shape_reconstruction_matches_simplex_form(self):
        # oracle: evaluate the day-shape factor directly from the full
        # simplex weights psi = (beta, 1 - |beta|_1)
        spec = ModelSpec(d11=2, d12=2, d2=7)
        recs = small_records()
        design = build_design(recs, spec)
        beta = np.array([0.13, 0.15, 0.16, 0.16, 0.16, 0.13])
        psi = np.append(beta, 1.0 - beta.sum())
        x2 = design.B @ beta + design.C
        for i, rec in enumerate(recs):
            assert x2[i] == pytest.approx(psi[rec.day.daytype - 1], abs=1e-15)
        assert x2[0] == pytest.approx(0.13)
        ref = next(i for i, r in enumerate(recs) if r.day.daytype == 7)
        assert x2[ref] == pytest.approx(1.0 - 0.89)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_simplex_round_trip_property(self, seed):
        rng = np.random.default_rng(seed)
        spec = ModelSpec(d11=1, d12=2, d2=5)
        recs = small_records(n=10, d2=5)
        design = build_design(recs, spec)
        beta = rng.dirichlet(np.ones(5))[:4]
        psi = np.append(beta, 1.0 - beta.sum())
        assert np.all(psi >= -1e-12) and np.sum(np.abs(psi)) == pytest.approx(1.0)
        x2 = design.B @ beta + design.C
        direct = np.array([psi[r.day.daytype - 1] for r in recs])
        np.testing.assert_allclose(x2, direct, atol=1e-12)

    def test_permutation_stable(self):
        spec = ModelSpec(d11=2, d12=2, d2=7)
        recs = small_records()
        shuffled = recs.copy()
        random.Random(5).shuffle(shuffled)
        d1 = build_design(recs, spec)
        d2_ = build_design(shuffled, spec)
        np.testing.assert_array_equal(d1.A, d2_.A)
        np.testing.assert_array_equal(d1.B, d2_.B)
        np.testing.assert_array_equal(d1.y, d2_.y)
        assert d1.dates == d2_.dates

    def test_excluded_days_absent(self):
        spec = ModelSpec(d11=1, d12=2, d2=7)
        recs = small_records()
        recs[3] = SeriesRecord(
            CalendarDay(recs[3].day.date, recs[3].day.daytype, 1, True), float("nan"), 10.0
        )
        design = build_design(recs, spec)
        assert design.n == len(recs) - 1
        assert recs[3].day.date not in design.dates

    def test_missing_daytype_coverage(self):
        spec = ModelSpec(d11=1, d12=2, d2=7)
        recs = small_records(n=6)  # only daytypes 1..6 appear
        with pytest.raises(ValidationError, match="daytype coverage"):
            build_design(recs, spec)

    def test_empty_after_exclusion(self):
        spec = ModelSpec()
        recs = [
            SeriesRecord(CalendarDay(dt.date(2001, 1, 1), 1, 1, True), float("nan"), 5.0)
        ]
        with pytest.raises(ValidationError, match="empty"):
            build_design(recs, spec)

    def test_explicit_origin_shifts_phase(self):
        spec = ModelSpec(d11=1, d12=2, d2=7)
        recs = small_records()
        base = build_design(recs, spec)
        shifted = build_design(recs, spec, origin=recs[0].day.date - dt.timedelta(days=100))
        w = 2.0 * np.pi * 100.0 / 365.25
        assert shifted.A[0, 0] == pytest.approx(np.cos(w))
        assert base.A[0, 0] == pytest.approx(1.0)


class TestCoolingRegressor:
    def test_all_below_threshold(self):
        A = np.ones((3, 2))
        out = add_cooling_regressor(A, np.array([10.0, 12.0, 14.0]), 16.0)
        np.testing.assert_array_equal(out[:, -1], 0.0)

    def test_two_degrees_above(self):
        out = add_cooling_regressor(np.ones((1, 1)), np.array([18.0]), 16.0)
        assert out[0, -1] == 2.0

    def test_paper_threshold_example(self):
        out = add_cooling_regressor(np.zeros((2, 1)), np.array([14.0, 18.0]), 16.0)
        np.testing.assert_array_equal(out[:, -1], [0.0, 2.0])


class TestSmoothTemperature:
    def test_identity_at_one(self):
        t = np.array([3.0, -1.0, 5.0])
        np.testing.assert_array_equal(smooth_temperature(t, 1.0), t)

    def test_constant_series(self):
        t = np.full(10, 7.5)
        np.testing.assert_allclose(smooth_temperature(t, 0.3), t)

    def test_one_step(self):
        np.testing.assert_allclose(smooth_temperature(np.array([0.0, 10.0]), 0.5), [0.0, 5.0])

    def test_invalid_coefficient(self):
        for lam in (0.0, -0.1, 1.5):
            with pytest.raises(ValidationError):
                smooth_temperature(np.array([1.0]), lam)

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=60),
           st.floats(0.05, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_contraction(self, values, lam):
        out = smooth_temperature(np.array(values), lam)
        assert np.max(np.abs(out)) <= np.max(np.abs(values)) + 1e-9


class TestNormalTemperatures:
    def test_single_year_identity(self):
        recs = small_records()
        dates = [r.day.date for r in recs]
        out = normal_temperatures(recs, dates)
        np.testing.assert_allclose(out, [r.temperature for r in recs])

    def test_two_year_mean(self):
        r1 = SeriesRecord(day("2000-03-05"), 1.0, 4.0)
        r2 = SeriesRecord(day("2001-03-05"), 1.0, 8.0)
        out = normal_temperatures([r1, r2], [dt.date(2002, 3, 5)])
        assert out[0] == 6.0

    def test_leap_day_fallback(self):
        r1 = SeriesRecord(day("2001-02-28"), 1.0, 3.0)
        out = normal_temperatures([r1], [dt.date(2004, 2, 29)])
        assert out[0] == 3.0

    def test_uncovered_day(self):
        r1 = SeriesRecord(day("2001-02-28"), 1.0, 3.0)
        with pytest.raises(ValidationError, match="03-01"):
            normal_temperatures([r1], [dt.date(2004, 3, 1)])


@pytest.fixture(scope="module")
def sim_design():
    scenario = default_scenario(seed=123)
    return simulate_study(scenario, 0).design_a


class TestRankCheck:
    def test_simulated_design_clean_on_5x5_grid(self, sim_design):
        spec = sim_design.spec
        rng = np.random.default_rng(0)
        betas = [np.full(6, 1.0 / 7), np.zeros(6)] + [rng.dirichlet(np.ones(7))[:6] for _ in range(3)]
        us = np.linspace(*spec.u_bounds, 5)
        grid = [(b, u) for b in betas for u in us]
        assert len(grid) == 25
        report = rank_check(sim_design, grid)
        assert report.ok

    def test_duplicated_column_flagged(self, sim_design):
        import dataclasses

        bad = dataclasses.replace(sim_design, A=np.column_stack([sim_design.A, sim_design.A[:, 0]]))
        report = rank_check(bad, default_rank_grid(bad.spec))
        assert not report.ok
        assert len(report.flagged) == len(report.points)

    def test_threshold_below_all_temperatures_flagged(self, sim_design):
        u_dead = sim_design.T.min() - 1.0
        report = rank_check(sim_design, [(np.full(6, 1.0 / 7), u_dead)])
        assert not report.ok
