"""Regression function, likelihood and parameter containers."""
import dataclasses

import numpy as np
import pytest
from scipy import stats

from loadcast.designs import ModelSpec
from loadcast.errors import ValidationError
from loadcast.mcmc import McmcConfig
from loadcast.model import ThetaState, eval_f, heating_term, log_likelihood
from loadcast.simulate import default_scenario, simulate_study, TruthParams


@pytest.fixture(scope="module")
def study():
    scenario = default_scenario(seed=21, mcmc=McmcConfig(iterations=200, burn_in=20))
    return simulate_study(scenario, 0)


def state_for(design, alpha=None, beta=None, gamma=-3.0, u=14.0, sigma2=4.0):
    spec = design.spec
    alpha = np.zeros(spec.d_alpha) if alpha is None else alpha
    beta = np.full(spec.d_beta, 1.0 / spec.d2) if beta is None else beta
    return ThetaState(alpha, beta, gamma, u, sigma2)


class TestThetaState:
    def test_beta_outside_ball_rejected(self):
        with pytest.raises(ValidationError):
            ThetaState(np.zeros(2), np.array([0.6, 0.6]), 1.0, 10.0, 1.0)
        with pytest.raises(ValidationError):
            ThetaState(np.zeros(2), np.array([-0.1, 0.2]), 1.0, 10.0, 1.0)

    def test_sigma2_positive(self):
        with pytest.raises(ValidationError):
            ThetaState(np.zeros(2), np.array([0.2]), 1.0, 10.0, 0.0)

    def test_near_zero_gamma_warns(self):
        with pytest.warns(UserWarning):
            ThetaState(np.zeros(2), np.array([0.2]), 0.0, 10.0, 1.0)

    def test_eta_ordering(self):
        st_ = ThetaState(np.array([1.0, 2.0]), np.array([0.3]), -3.0, 14.0, 1.0)
        np.testing.assert_array_equal(st_.eta(), [1.0, 2.0, 0.3, -3.0, 14.0])

    def test_validate_for_bounds(self, study):
        design = study.design_b
        good = state_for(design)
        good.validate_for(design)
        with pytest.raises(ValidationError):
            dataclasses.replace(good, u=25.0).validate_for(design)


class TestHeatingTerm:
    def test_reference_values(self):
        assert heating_term(-3.0, 14.0, 10.0) == 12.0

    def test_boundary_and_above(self):
        assert heating_term(-3.0, 14.0, 14.0) == 0.0
        assert heating_term(-3.0, 14.0, 20.0) == 0.0

    def test_vectorized(self):
        out = heating_term(-3.0, 14.0, np.array([10.0, 14.0, 20.0]))
        np.testing.assert_array_equal(out, [12.0, 0.0, 0.0])


class TestEvalF:
    def test_zero_alpha_no_heating(self, study):
        design = study.design_b
        st_ = state_for(design, gamma=1.0, u=design.spec.u_bounds[0])
        base = eval_f(dataclasses.replace(st_, u=design.T.min() - 1.0), design)
        # alpha = 0 and heating inactive: output identically zero
        assert np.allclose(base, 0.0)

    def test_single_day_product(self):
        spec = ModelSpec(d11=1, d12=1, d2=2, u_bounds=(8.0, 19.0))
        import datetime as dt

        from loadcast.designs import CalendarDay, SeriesRecord, build_design

        recs = [
            SeriesRecord(CalendarDay(dt.date(2001, 1, 1) + dt.timedelta(days=i), i % 2 + 1, 1), 0.0, 25.0)
            for i in range(4)
        ]
        design = build_design(recs, spec)
        # A row at origin: (cos 0, sin 0, offset) = (1, 0, 1); pick alpha so A alpha = 100
        st_ = ThetaState(np.array([50.0, 0.0, 50.0]), np.array([0.5]), -3.0, 14.0, 1.0)
        f = eval_f(st_, design)
        assert f[0] == pytest.approx(50.0)  # 100 * 0.5, no heating at 25 degC

    def test_matches_simulator_noiselessly(self, study):
        truth = study.truth_b
        st_ = ThetaState(truth.alpha, truth.beta, truth.gamma, truth.u, 1.0)
        f = eval_f(st_, study.design_pred)
        np.testing.assert_allclose(f, study.f_true_pred, atol=1e-12)

    def test_matches_componentwise_transcription(self, study):
        # independent oracle: rebuild the three components from the raw
        # calendar quantities and the full simplex weights
        design = study.design_b
        spec = design.spec
        rng = np.random.default_rng(9)
        alpha = rng.standard_normal(spec.d_alpha) * 5.0
        beta = rng.dirichlet(np.ones(spec.d2))[: spec.d_beta]
        psi = np.append(beta, 1.0 - beta.sum())
        st_ = ThetaState(alpha, beta, -2.5, 13.0, 1.0)
        f = eval_f(st_, design)
        zc, zs = alpha[0 : 2 * spec.d11 : 2], alpha[1 : 2 * spec.d11 : 2]
        omega = alpha[2 * spec.d11 :]
        for i, date in enumerate(design.dates):
            t = (date - design.origin).days
            x1 = sum(
                zc[j - 1] * np.cos(2 * j * np.pi * t / 365.25)
                + zs[j - 1] * np.sin(2 * j * np.pi * t / 365.25)
                for j in range(1, spec.d11 + 1)
            )
            offset = int(np.argmax(design.A[i, 2 * spec.d11 :]))  # one-hot
            x1 += omega[offset]
            daytype = int(design.C[i]) * spec.d2 or int(np.argmax(design.B[i]) + 1)
            x2 = psi[daytype - 1]
            temp = design.T[i]
            x3 = st_.gamma * (temp - st_.u) if temp <= st_.u else 0.0
            assert f[i] == pytest.approx(x1 * x2 + x3, abs=1e-12)

    def test_affine_in_alpha_and_gamma(self, study):
        design = study.design_b
        rng = np.random.default_rng(3)
        alpha = rng.standard_normal(design.spec.d_alpha)
        st1 = state_for(design, alpha=alpha)
        st2 = state_for(design, alpha=2.0 * alpha)
        base = state_for(design, alpha=np.zeros_like(alpha))
        f1 = eval_f(st1, design) - eval_f(base, design)
        f2 = eval_f(st2, design) - eval_f(base, design)
        np.testing.assert_allclose(f2, 2.0 * f1, atol=1e-10)
        g1 = eval_f(state_for(design, gamma=-1.0), design) - eval_f(state_for(design, gamma=-2.0), design)
        g2 = eval_f(state_for(design, gamma=-3.0), design) - eval_f(state_for(design, gamma=-4.0), design)
        np.testing.assert_allclose(g1, g2, atol=1e-10)

    def test_lipschitz_in_threshold_between_kinks(self, study):
        design = study.design_b
        st_ = state_for(design, alpha=np.ones(design.spec.d_alpha))
        ts = np.sort(design.T)
        gaps = np.diff(ts)
        j = int(np.argmax(gaps))
        u1 = ts[j] + 0.25 * gaps[j]
        u2 = ts[j] + 0.75 * gaps[j]
        f1 = eval_f(dataclasses.replace(st_, u=u1), design)
        f2 = eval_f(dataclasses.replace(st_, u=u2), design)
        bound = abs(st_.gamma) * abs(u1 - u2) * np.sqrt(design.n)
        assert np.linalg.norm(f1 - f2) <= bound + 1e-12

    def test_dimension_mismatch(self, study):
        with pytest.raises(ValidationError):
            eval_f(ThetaState(np.zeros(3), np.array([0.2]), 1.0, 14.0, 1.0), study.design_b)


class TestLogLikelihood:
    def test_normalizing_case(self, study):
        design = study.design_pred
        truth = study.truth_b
        st_ = ThetaState(truth.alpha, truth.beta, truth.gamma, truth.u, 1.0 / (2.0 * np.pi))
        design = dataclasses.replace(design, y=eval_f(st_, design))
        assert log_likelihood(st_, design) == pytest.approx(0.0, abs=1e-9)

    def test_doubling_sigma2_with_zero_residuals(self, study):
        design = study.design_pred
        truth = study.truth_b
        st1 = ThetaState(truth.alpha, truth.beta, truth.gamma, truth.u, 1.0)
        design = dataclasses.replace(design, y=eval_f(st1, design))
        st2 = dataclasses.replace(st1, sigma2=2.0)
        delta = log_likelihood(st2, design) - log_likelihood(st1, design)
        assert delta == pytest.approx(-0.5 * design.n * np.log(2.0))

    def test_per_point_density_oracle(self, study):
        design = study.design_b
        st_ = state_for(design, alpha=np.full(design.spec.d_alpha, 5.0))
        f = eval_f(st_, design)
        expected = stats.norm.logpdf(design.y, loc=f, scale=np.sqrt(st_.sigma2)).sum()
        assert log_likelihood(st_, design) == pytest.approx(expected, rel=1e-12)

    def test_sigma2_argmax(self, study):
        design = study.design_b
        st_ = state_for(design, alpha=np.full(design.spec.d_alpha, 5.0))
        resid = design.y - eval_f(st_, design)
        best = float(resid @ resid) / design.n
        ll_best = log_likelihood(dataclasses.replace(st_, sigma2=best), design)
        for factor in (0.5, 0.9, 1.1, 2.0):
            assert ll_best >= log_likelihood(dataclasses.replace(st_, sigma2=best * factor), design)


class TestTruthParams:
    def test_eta_concatenation(self):
        t = TruthParams(np.array([1.0]), np.array([0.2]), -3.0, 14.0)
        np.testing.assert_array_equal(t.eta(), [1.0, 0.2, -3.0, 14.0])

    def test_ball_validation(self):
        with pytest.raises(ValidationError):
            TruthParams(np.array([1.0]), np.array([0.7, 0.7]), -3.0, 14.0)
