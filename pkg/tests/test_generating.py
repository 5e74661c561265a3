"""Tests for the generating function h(x, x1) and its partial derivatives."""

import math

import pytest

from vortex_mather.errors import BracketError, NoConvergence
from vortex_mather.flow import symplectic_weight_inverse
from vortex_mather.generating import SAMPLE_COLUMNS, GeneratingFunction, samples_frame
from vortex_mather.schemas import SolverSettings


@pytest.fixture
def zero_h(zero_flow):
    return GeneratingFunction(zero_flow)


@pytest.fixture
def quartic_h(quartic_flow):
    return GeneratingFunction(quartic_flow, K=0.2)


# ── integrable closed form ──────────────────────────────────────


class TestIntegrableClosedForm:
    @pytest.mark.parametrize("x, gap", [(0.0, 2.0), (1.3, 6.0), (5.0, 40.0)])
    def test_values(self, zero_h, x, gap):
        sample = zero_h.h_eval(x, x + gap)
        assert sample.R == pytest.approx(gap / 2.0, abs=1e-10)
        assert sample.R1 == pytest.approx(gap / 2.0, abs=1e-10)
        assert sample.h == pytest.approx(-0.5 - 0.5 * math.log(gap), abs=1e-9)

    def test_partials(self, zero_h):
        gap = 6.0
        sample = zero_h.h_eval(0.4, 0.4 + gap)
        assert sample.d1h == pytest.approx(1.0 / (2.0 * gap))
        assert sample.d2h == pytest.approx(-1.0 / (2.0 * gap))
        assert sample.d12h == pytest.approx(-1.0 / (2.0 * gap ** 2))
        assert sample.d11h == pytest.approx(1.0 / (2.0 * gap ** 2))
        assert sample.d22h == pytest.approx(1.0 / (2.0 * gap ** 2))

    def test_signs(self, zero_h):
        sample = zero_h.h_eval(2.0, 9.0)
        assert sample.d1h > 0
        assert sample.d2h < 0
        assert sample.d12h < 0


# ── perturbed case ──────────────────────────────────────────────


class TestPerturbedPartials:
    @pytest.mark.parametrize("x, x1", [(0.3, 6.3), (2.0, 4.5), (4.1, 30.0)])
    def test_first_partials_match_finite_differences(self, quartic_h, x, x1):
        sample = quartic_h.h_eval(x, x1)
        d1, d2 = quartic_h.fd_partials(x, x1)
        assert abs(d1 - sample.d1h) < 1e-6
        assert abs(d2 - sample.d2h) < 1e-6

    @pytest.mark.parametrize("x, x1", [(0.3, 6.3), (2.0, 9.5), (4.1, 30.0)])
    def test_radius_from_first_partial(self, quartic_h, x, x1):
        sample = quartic_h.h_eval(x, x1)
        assert symplectic_weight_inverse(-sample.d1h) == pytest.approx(sample.R, abs=1e-8)

    @pytest.mark.parametrize("x, x1", [(0.3, 6.3), (2.0, 9.5), (4.1, 30.0)])
    def test_map_reconstruction(self, quartic_h, quartic_flow, x, x1):
        sample = quartic_h.h_eval(x, x1)
        image = quartic_flow.poincare(sample.R, x)
        assert image.r1 == pytest.approx(symplectic_weight_inverse(sample.d2h), abs=1e-7)
        assert image.theta1 == pytest.approx(x1, abs=1e-7)

    def test_mixed_partial_is_negative(self, quartic_h):
        assert quartic_h.h_eval(1.0, 7.0).d12h < 0

    def test_diagonal_partials_match_finite_differences(self, quartic_h):
        x, x1, step = 0.7, 6.5, 1e-3
        sample = quartic_h.h_eval(x, x1)
        d11 = (quartic_h.h_eval(x + step, x1).d1h - quartic_h.h_eval(x - step, x1).d1h) / (2 * step)
        d22 = (quartic_h.h_eval(x, x1 + step).d2h - quartic_h.h_eval(x, x1 - step).d2h) / (2 * step)
        assert sample.d11h == pytest.approx(d11, abs=1e-5)
        assert sample.d22h == pytest.approx(d22, abs=1e-5)

    def test_solve_inverts_the_twist(self, quartic_h, quartic_flow):
        R = quartic_h.solve_R(0.9, 7.2)
        assert quartic_flow.poincare(R, 0.9).theta1 == pytest.approx(7.2, abs=1e-9)

    def test_exact_periodicity(self, quartic_h):
        base = quartic_h.h_eval(0.5, 6.0, use_cache=False)
        shifted = quartic_h.h_eval(0.5 + 2.0 * math.pi, 6.0 + 2.0 * math.pi, use_cache=False)
        assert shifted.h == pytest.approx(base.h, abs=1e-12)
        assert shifted.d1h == pytest.approx(base.d1h, abs=1e-12)
        assert shifted.x == 0.5 + 2.0 * math.pi

    def test_negative_x_is_reduced(self, quartic_h):
        base = quartic_h.h_eval(1.0, 6.0)
        shifted = quartic_h.h_eval(1.0 - 4.0 * math.pi, 6.0 - 4.0 * math.pi)
        assert shifted.h == pytest.approx(base.h, abs=1e-12)


# ── root solve failures ─────────────────────────────────────────


class TestRootSolve:
    def test_bracket_missing_root(self, zero_h):
        with pytest.raises(BracketError):
            zero_h.solve_R(0.0, 10.0, bracket=(4.0, 4.5))

    def test_bracket_at_or_below_a_star(self, zero_h):
        with pytest.raises(BracketError):
            zero_h.solve_R(0.0, 4.0, bracket=(0.5, 3.0))

    def test_empty_bracket(self, zero_h):
        with pytest.raises(BracketError):
            zero_h.solve_R(0.0, 4.0, bracket=(3.0, 2.0))

    def test_iteration_cap(self, quartic_flow):
        h = GeneratingFunction(quartic_flow, settings=SolverSettings(root_max_iter=1), K=0.2)
        with pytest.raises(NoConvergence) as info:
            h.solve_R(0.2, 8.0)
        assert info.value.best == pytest.approx(3.9, abs=0.2)

    def test_default_bracket_stays_above_a_star(self, quartic_h, quartic_flow):
        lo, hi = quartic_h.default_bracket(0.0, 1.1)
        assert lo > quartic_flow.a_star
        assert hi > lo


# ── cache and domain ────────────────────────────────────────────


class TestCacheAndDomain:
    def test_cache_hit_skips_solve(self, zero_flow):
        h = GeneratingFunction(zero_flow)
        h.h_eval(0.1, 5.0)
        count = h.evaluations
        assert count > 0
        h.h_eval(0.1, 5.0)
        h.h_eval(0.1 + 2.0 * math.pi, 5.0 + 2.0 * math.pi)
        assert h.evaluations == count

    def test_clear_cache(self, zero_flow):
        h = GeneratingFunction(zero_flow)
        h.h_eval(0.1, 5.0)
        count = h.evaluations
        h.clear_cache()
        h.h_eval(0.1, 5.0)
        assert h.evaluations > count

    def test_cache_disabled(self, zero_flow):
        h = GeneratingFunction(zero_flow, settings=SolverSettings(cache_size=0))
        h.h_eval(0.1, 5.0)
        count = h.evaluations
        h.h_eval(0.1, 5.0)
        assert h.evaluations == 2 * count

    def test_contains_without_window(self, zero_h):
        with pytest.raises(ValueError):
            zero_h.contains(0.0, 5.0)

    def test_contains_with_window(self, zero_session):
        h = zero_session.generating
        assert h.contains(0.0, 5.0)
        assert not h.contains(0.0, 0.5)

    def test_samples_frame(self, zero_h):
        frame = samples_frame([zero_h.h_eval(0.0, 4.0), zero_h.h_eval(1.0, 6.0)])
        assert list(frame.columns) == SAMPLE_COLUMNS
        assert frame["R"].tolist() == pytest.approx([2.0, 2.5], abs=1e-10)
