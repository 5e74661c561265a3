"""Tests for the augmented time-1 flow."""

import math

import numpy as np
import pytest

from vortex_mather.errors import DomainExit
from vortex_mather.flow import (
    TRAJECTORY_COLUMNS,
    AugmentedState,
    symplectic_weight,
    symplectic_weight_inverse,
    symplectic_weight_prime,
)
from vortex_mather.model import from_regularized

INTEGRABLE_MONODROMY = np.array([[1.0, 0.0], [2.0, 1.0]])


class TestSymplecticWeight:
    def test_values(self):
        assert symplectic_weight(1.0) == -0.25
        assert symplectic_weight_prime(0.5) == pytest.approx(1.0)

    def test_inverse(self):
        assert symplectic_weight_inverse(symplectic_weight(3.0)) == pytest.approx(3.0)


# ── integrable case ─────────────────────────────────────────────


class TestIntegrableFlow:
    def test_poincare_at_pi(self, zero_flow):
        res = zero_flow.poincare(math.pi, 0.0)
        assert res.r1 == pytest.approx(math.pi, abs=1e-9)
        assert res.theta1 == pytest.approx(2.0 * math.pi, abs=1e-9)
        assert np.allclose(res.Y1, INTEGRABLE_MONODROMY, atol=1e-9)
        assert res.S == pytest.approx(-0.5 - 0.5 * math.log(2.0 * math.pi), abs=1e-9)

    @pytest.mark.parametrize("r0", [5.0, 27.0, 100.0])
    @pytest.mark.parametrize("theta0", [0.0, 2.5])
    def test_closed_form_grid(self, zero_flow, r0, theta0):
        res = zero_flow.poincare(r0, theta0)
        assert res.r1 == pytest.approx(r0, abs=1e-9)
        assert res.theta1 == pytest.approx(theta0 + 2.0 * r0, abs=1e-9)
        assert np.allclose(res.Y1, INTEGRABLE_MONODROMY, atol=1e-9)
        assert res.S == pytest.approx(-0.5 - 0.5 * math.log(2.0 * r0), abs=1e-9)

    def test_growth_deviation_vanishes(self, zero_flow):
        trajectory = zero_flow.integrate(AugmentedState.initial(4.0, 1.0), 0.0, 1.0, t_eval=np.linspace(0, 1, 9))
        assert zero_flow.growth_deviation(trajectory) < 1e-9

    def test_cartesian_conjugacy(self, zero_flow):
        x0, y0 = from_regularized(2.0, 0.3)
        assert zero_flow.conjugacy_check(x0, y0, tol=1e-12) < 1e-9


# ── perturbed case ──────────────────────────────────────────────


class TestPerturbedFlow:
    @pytest.mark.parametrize("r0, theta0", [(1.0, 0.0), (3.0, 1.7), (12.0, 4.0)])
    def test_symplectic_defect(self, quartic_flow, r0, theta0):
        res = quartic_flow.poincare(r0, theta0)
        expected = (res.r1 / r0) ** 2
        assert abs(np.linalg.det(res.Y1) - expected) / expected < 1e-8

    def test_monodromy_matches_finite_differences(self, quartic_flow):
        r0, theta0, h = 2.0, 0.6, 1e-4
        res = quartic_flow.poincare(r0, theta0)
        plus, minus = quartic_flow.poincare(r0 + h, theta0), quartic_flow.poincare(r0 - h, theta0)
        assert res.Y1[0, 0] == pytest.approx((plus.r1 - minus.r1) / (2 * h), abs=1e-5)
        assert res.dG_dr0 == pytest.approx((plus.theta1 - minus.theta1) / (2 * h), abs=1e-5)

    def test_lift_equivariance(self, quartic_flow):
        base = quartic_flow.poincare(2.5, 0.4)
        shifted = quartic_flow.poincare(2.5, 0.4 + 2.0 * math.pi)
        assert shifted.r1 == pytest.approx(base.r1, abs=1e-8)
        assert shifted.theta1 - base.theta1 == pytest.approx(2.0 * math.pi, abs=1e-8)

    def test_angle_advances(self, quartic_flow):
        trajectory = quartic_flow.integrate(AugmentedState.initial(1.0, 0.0), 0.0, 1.0, t_eval=np.linspace(0, 1, 17))
        assert np.all(quartic_flow.angular_velocity(trajectory) > 0)

    def test_cartesian_conjugacy(self, quartic_flow):
        x0, y0 = from_regularized(3.0, 1.2)
        assert quartic_flow.conjugacy_check(x0, y0) < 1e-6

    def test_tolerance_halving_is_stable(self, quartic_flow):
        coarse = quartic_flow.poincare(4.0, 0.3)
        fine = quartic_flow.with_tolerance(5e-11).poincare(4.0, 0.3)
        assert abs(fine.theta1 - coarse.theta1) < 10 * 1e-10 * (1 + abs(coarse.theta1))
        assert abs(fine.r1 - coarse.r1) < 10 * 1e-10 * (1 + abs(coarse.theta1))


# ── integrate contract ──────────────────────────────────────────


class TestIntegrate:
    def test_start_below_a_star(self, quartic_flow):
        with pytest.raises(DomainExit):
            quartic_flow.poincare(0.52, 0.0)

    def test_start_between_r_star_and_a_star_allowed_when_requested(self, quartic_flow):
        trajectory = quartic_flow.integrate(AugmentedState.initial(0.54, 0.0), 0.0, 0.01, require_a_star=False)
        assert trajectory.final.r > quartic_flow.r_star

    def test_backwards_interval(self, zero_flow):
        with pytest.raises(ValueError):
            zero_flow.integrate(AugmentedState.initial(2.0, 0.0), 1.0, 0.5)

    def test_endpoints_only_by_default(self, zero_flow):
        trajectory = zero_flow.integrate(AugmentedState.initial(2.0, 0.0), 0.0, 1.0)
        assert trajectory.t.tolist() == [0.0, 1.0]

    def test_dense_frame(self, zero_flow):
        frame = zero_flow.integrate(AugmentedState.initial(2.0, 0.0), 0.0, 1.0, dense=True).to_frame()
        assert list(frame.columns) == TRAJECTORY_COLUMNS
        assert len(frame) > 2
        assert frame["r"].iloc[-1] == pytest.approx(2.0)
        assert frame["theta"].iloc[-1] == pytest.approx(4.0)

    def test_t_eval_samples(self, zero_flow):
        times = np.linspace(0.0, 1.0, 5)
        trajectory = zero_flow.integrate(AugmentedState.initial(2.0, 0.0), 0.0, 1.0, t_eval=times)
        assert np.allclose(trajectory.t, times)
        assert np.allclose(trajectory.theta, 4.0 * times)

    def test_state_vector_layout(self):
        state = AugmentedState.initial(2.0, 0.5)
        z = state.as_vector()
        assert z.tolist() == [2.0, 0.5, 1.0, 0.0, 0.0, 1.0, 0.0]
        assert AugmentedState.from_vector(z).r == 2.0
