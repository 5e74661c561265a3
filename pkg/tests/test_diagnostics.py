"""Tests for the Jacobian splitting, oscillatory decay and monodromy diagnostics."""

import math

import numpy as np
import pytest

from vortex_mather.diagnostics import (
    Check,
    OscillatoryIntegral,
    circular_mean,
    derivative_estimates,
    monodromy_limit_scan,
    monodromy_uniformity,
    norms_bounded,
    oscillatory_decay,
    polynomial_q,
    rl_constant_bound,
    splitting,
    splitting_scan,
    trajectory_integral,
    weak_b12_scan,
)
from vortex_mather.errors import DomainError, HypothesisError
from vortex_mather.model import VortexModel
from vortex_mather.schemas import MonomialTerm, Perturbation

GAMMA = 0.01
LAMBDAS = np.geomspace(1e2, 1e4, 7)


def _with_quintic(quartic: Perturbation, delta: float) -> VortexModel:
    return VortexModel(Perturbation(terms=quartic.leading_terms, remainder=[MonomialTerm(i=5, j=0, a0=delta)]))


def _cosine_integral(lambdas=LAMBDAS):
    return OscillatoryIntegral(
        poly=polynomial_q([MonomialTerm(i=1, j=0, a0=1.0)]),
        degree=1,
        lambdas=lambdas,
        beta=lambda s: 0.1 * np.sin(2.0 * np.pi * np.asarray(s)),
        beta_dot=lambda s: 0.1 * 2.0 * np.pi * np.cos(2.0 * np.pi * np.asarray(s)),
    )


# ── splitting ───────────────────────────────────────────────────


class TestSplitting:
    def test_quartic_blocks(self, quartic_model):
        r, theta = 20.0, 0.6
        sample = splitting(quartic_model, 0.0, r, theta)
        c, s = math.cos(theta), math.sin(theta)
        assert sample.c[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert sample.c[0, 1] == pytest.approx(0.0, abs=1e-15)
        assert sample.c[1, 0] == pytest.approx(-2.0 * GAMMA * c ** 4 / r ** 2)
        assert sample.c[1, 1] == pytest.approx(-8.0 * GAMMA * c ** 3 * s / r)

    def test_quintic_remainder_enters_c(self, quartic_perturbation):
        delta = 0.02
        model = _with_quintic(quartic_perturbation, delta)
        r, theta = 20.0, 0.6
        sample = splitting(model, 0.0, r, theta)
        c, s = math.cos(theta), math.sin(theta)
        scale = (2.0 * r) ** -2.5
        # u~ = delta cos^5 / (2r)^{5/2}; the quartic part only reaches the second row
        assert sample.c[0, 0] == pytest.approx(10.0 * r * delta * c ** 4 * s * scale, rel=1e-9)
        assert sample.c[0, 1] == pytest.approx(4.0 * r ** 2 * delta * (20.0 * c ** 3 * s ** 2 - 5.0 * c ** 5) * scale,
                                               rel=1e-9)
        assert sample.b12 == pytest.approx(splitting(VortexModel(quartic_perturbation), 0.0, r, theta).b12)

    def test_quintic_remainder_scaled_norms_bounded(self, quartic_perturbation):
        model = _with_quintic(quartic_perturbation, 0.02)
        table = splitting_scan(model, [10.0, 100.0, 1000.0], n_theta=32, n_t=4)
        assert np.all(table[:, :2] > 0)
        passed, _ = norms_bounded(table)
        assert passed

    def test_integrable_remainder_vanishes(self, zero_model):
        sample = splitting(zero_model, 0.3, 4.0, 1.0)
        assert np.array_equal(sample.c, np.zeros((2, 2)))
        assert sample.b12 == 0.0

    def test_below_a_star(self, quartic_model):
        with pytest.raises(DomainError):
            splitting(quartic_model, 0.0, 0.54, 0.0)

    def test_scaled_norms_bounded(self, quartic_model):
        table = splitting_scan(quartic_model, [10.0, 100.0, 1000.0], n_theta=32, n_t=4)
        assert table.shape == (3, 4)
        assert np.allclose(table[:, 2], 2.0 * GAMMA, rtol=1e-9)
        passed, spreads = norms_bounded(table)
        assert passed
        assert spreads[2] == pytest.approx(1.0)

    def test_norms_bounded_flags_growth(self):
        table = np.array([[1.0, 0.0], [10.0, 0.0]])
        passed, spreads = norms_bounded(table)
        assert not passed
        assert spreads == [10.0, 1.0]

    def test_derivative_estimates_constant_for_pure_quartic(self, quartic_model):
        table = derivative_estimates(quartic_model, [10.0, 1000.0], n_theta=16, n_t=4)
        assert np.all(table[:, :2] == 0.0)
        assert np.allclose(table[0], table[1], rtol=1e-9)


# ── oscillatory integrals ───────────────────────────────────────


class TestOscillatoryDecay:
    def test_polynomial_q(self):
        q = polynomial_q([MonomialTerm(i=1, j=2, cos=(1.0,))])
        assert q(0.0, 2.0, 3.0) == pytest.approx(18.0)
        assert q(0.5, 2.0, 3.0) == pytest.approx(-18.0)

    def test_circular_mean_of_cosine(self):
        assert circular_mean(_cosine_integral()) < 1e-12

    def test_inverse_lambda_decay(self):
        integral = oscillatory_decay(_cosine_integral())
        assert integral.fitted_exponent <= -0.9
        assert integral.c_rl_hat < 10.0
        assert integral.integrals.shape == LAMBDAS.shape

    def test_a_priori_constant_dominates(self):
        integral = oscillatory_decay(_cosine_integral())
        bound = rl_constant_bound(integral)
        assert bound == pytest.approx(2.4, rel=1e-3)
        assert bound >= integral.c_rl_hat

    def test_nonzero_mean_rejected(self):
        integral = OscillatoryIntegral(poly=polynomial_q([MonomialTerm(i=2, j=0, a0=1.0)]), degree=2, lambdas=LAMBDAS)
        with pytest.raises(HypothesisError):
            oscillatory_decay(integral)

    def test_narrow_lambda_span(self):
        with pytest.raises(ValueError, match="two decades"):
            oscillatory_decay(_cosine_integral(np.array([100.0, 1000.0])))

    def test_nonpositive_lambda(self):
        with pytest.raises(ValueError):
            oscillatory_decay(_cosine_integral(np.array([0.0, 1e3, 1e4])))

    def test_trajectory_integral_decays(self, quartic_flow):
        integral = oscillatory_decay(trajectory_integral(quartic_flow, 5.0, 0.3, LAMBDAS))
        assert integral.fitted_exponent <= -0.8
        assert integral.degree == 4

    def test_weak_b12_integral_shrinks(self, quartic_flow):
        values = weak_b12_scan(quartic_flow, [5.0, 50.0, 500.0])
        assert np.all(np.diff(values) < 0)

    def test_weak_b12_vanishes_without_perturbation(self, zero_flow):
        assert np.all(weak_b12_scan(zero_flow, [5.0, 50.0]) == 0.0)


# ── monodromy ───────────────────────────────────────────────────


class TestMonodromy:
    def test_limit_approached(self, quartic_flow):
        scan = monodromy_limit_scan(quartic_flow, [100.0, 10.0], theta0=0.4)
        assert scan.decreasing
        assert scan.deviations[0] < scan.deviations[1]
        assert scan.r0_list == [100.0, 10.0]

    def test_integrable_monodromy_exact(self, zero_flow):
        scan = monodromy_limit_scan(zero_flow, [3.0, 30.0])
        assert max(scan.deviations) < 1e-9

    def test_uniformity(self, quartic_flow):
        ratio, values = monodromy_uniformity(quartic_flow, 20.0, n_theta=4)
        assert len(values) == 4
        assert ratio >= 1.0


def test_check_to_dict():
    check = Check(name="window", values=[0.5], threshold=1e-8, passed=True)
    assert check.to_dict() == {"name": "window", "values": [0.5], "threshold": 1e-8, "pass": True}
