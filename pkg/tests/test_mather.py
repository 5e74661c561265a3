"""Tests for periodic orbits, rotation numbers and Mather sets."""

import math

import numpy as np
import pytest

from vortex_mather import mather
from vortex_mather.errors import DepthError, DomainExit, MonotonicityViolation, NoConvergence, WindowError
from vortex_mather.mather import (
    MatherSolver,
    Orbit,
    classify,
    comparable,
    convergents,
    largest_gap,
)
from vortex_mather.schemas import SolverSettings

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@pytest.fixture(scope="module")
def golden_set(quartic_solver):
    return quartic_solver.mather_set(GOLDEN, 6)


# ── continued fractions and ordering ────────────────────────────


class TestConvergents:
    def test_golden_mean(self):
        assert convergents(GOLDEN, 4) == [(2, 1), (3, 2), (5, 3), (8, 5)]

    def test_sqrt_two(self):
        assert convergents(math.sqrt(2.0), 3) == [(3, 2), (7, 5), (17, 12)]

    def test_shifted_golden_mean(self):
        assert convergents(GOLDEN + 1.0, 2) == [(3, 1), (5, 2)]

    def test_rational_terminates(self):
        with pytest.raises(ValueError, match="rational"):
            convergents(1.5, 3)

    def test_depth_must_be_positive(self):
        with pytest.raises(ValueError):
            convergents(GOLDEN, 0)


class TestOrdering:
    def test_equispaced_is_comparable(self):
        x = np.array([0.0, 3.0 * math.pi])
        assert comparable(x, 3, 2, 0, 1)
        assert comparable(x, 3, 2, -1, 1)

    def test_crossing_translate(self):
        x = np.array([0.0, 3.0, 2.5])
        assert not comparable(x, 1, 3, 0, 1)

    def test_largest_gap_wraps(self):
        assert largest_gap([0.0, math.pi / 2.0, math.pi]) == pytest.approx(math.pi)
        assert largest_gap([0.1 + 2.0 * math.pi, 0.1 + math.pi]) == pytest.approx(math.pi)


class TestClassify:
    def test_curve(self):
        assert classify([1.0, 0.5], [5, 8]) == "curve"

    def test_cantor_candidate(self):
        assert classify([3.0, 3.0], [5, 8]) == "cantor-candidate"

    def test_inconclusive(self):
        assert classify([1.0, 3.0], [5, 8]) == "inconclusive"
        assert classify([3.0], [8]) == "inconclusive"

    def test_threshold_is_twice_uniform_spacing(self):
        uniform = 2.0 * math.pi / 8
        assert classify([0.0, 1.99 * uniform], [5, 8]) == "curve"
        assert classify([0.0, 2.01 * uniform], [5, 8]) == "inconclusive"
        assert classify([3.01 * uniform], [8]) == "inconclusive"


# ── periodic orbits ─────────────────────────────────────────────


class TestIntegrableOrbits:
    def test_fixed_point(self, zero_solver):
        orbit = zero_solver.periodic_orbit(1, 1)
        assert orbit.r.tolist() == pytest.approx([math.pi], abs=1e-9)
        assert orbit.x.tolist() == pytest.approx([0.0, 2.0 * math.pi])
        assert orbit.map_residual < 1e-9

    def test_period_two(self, zero_solver):
        orbit = zero_solver.periodic_orbit(3, 2)
        assert orbit.r.tolist() == pytest.approx([1.5 * math.pi, 1.5 * math.pi], abs=1e-9)
        assert orbit.action == pytest.approx(2.0 * (-0.5 - 0.5 * math.log(3.0 * math.pi)), abs=1e-9)

    def test_shifted_start(self, zero_solver):
        orbit = zero_solver.periodic_orbit(1, 1, x0=1.0)
        assert orbit.x[0] == 1.0

    def test_solution_periodicity(self, zero_solver):
        orbit = zero_solver.periodic_orbit(1, 1)
        assert zero_solver.orbit_solution_periodicity(orbit) < 1e-9

    def test_below_window(self, zero_solver):
        with pytest.raises(WindowError):
            zero_solver.periodic_orbit(1, 3)

    def test_not_coprime(self, zero_solver):
        with pytest.raises(ValueError):
            zero_solver.periodic_orbit(2, 2)

    def test_x_init_too_short(self, zero_solver):
        with pytest.raises(ValueError):
            zero_solver.periodic_orbit(3, 2, x_init=[0.0])


class TestPerturbedOrbits:
    @pytest.mark.parametrize("s, q", [(1, 1), (3, 2), (7, 2), (22, 7)])
    def test_residuals(self, quartic_solver, s, q):
        orbit = quartic_solver.periodic_orbit(s, q)
        report = quartic_solver.orbit_residuals(orbit)
        assert report.el < 1e-10
        assert report.map < 1e-6
        assert report.translation < 1e-12
        assert report.deviation_ok
        assert report.comparability
        assert report.increasing

    def test_initial_guess_is_used(self, quartic_solver):
        reference = quartic_solver.periodic_orbit(3, 2)
        orbit = quartic_solver.periodic_orbit(3, 2, x_init=reference.x[:2] + 1e-3)
        assert orbit.el_residual < 1e-10

    @pytest.mark.parametrize("s, q", [(3, 2), (22, 7)])
    def test_local_minimality(self, quartic_solver, s, q):
        orbit = quartic_solver.periodic_orbit(s, q)
        assert quartic_solver.action_stationarity(orbit, delta=1e-4) > -1e-9

    def test_translation_equivariance(self, quartic_solver):
        start = 2.0 * math.pi * 7 * np.arange(2) / 2
        orbit = quartic_solver.periodic_orbit(7, 2, x_init=start)
        shifted = quartic_solver.periodic_orbit(7, 2, x_init=start + 2.0 * math.pi)
        assert np.max(np.abs(shifted.x - orbit.x - 2.0 * math.pi)) < 1e-8
        assert np.max(np.abs(shifted.r - orbit.r)) < 1e-8
        assert quartic_solver.translation_defect(orbit) < 1e-8

    def test_hessian_is_cyclic_tridiagonal(self, quartic_solver):
        orbit = quartic_solver.periodic_orbit(22, 7)
        hess = quartic_solver._hessian(quartic_solver.pair_samples(orbit))
        band = np.abs(np.subtract.outer(np.arange(7), np.arange(7))) % 6 <= 1
        assert np.array_equal(hess, hess.T)
        assert np.all(hess[~band] == 0.0)
        values = np.linalg.eigvalsh(hess)
        assert values[0] > -1e-9 * values[-1]

    def test_pair_samples(self, quartic_solver):
        orbit = quartic_solver.periodic_orbit(3, 2)
        samples = quartic_solver.pair_samples(orbit)
        assert [(p.x, p.x1) for p in samples] == [(orbit.x[0], orbit.x[1]), (orbit.x[1], orbit.x[2])]
        assert [p.R for p in samples] == pytest.approx(orbit.r.tolist(), abs=1e-12)

    def test_solution_periodicity(self, quartic_solver):
        orbit = quartic_solver.periodic_orbit(3, 2)
        assert quartic_solver.orbit_solution_periodicity(orbit) < 1e-6

    def test_to_archive(self, quartic_solver):
        archive = quartic_solver.periodic_orbit(1, 1).to_archive()
        assert set(archive) == {"s", "q", "x", "r", "action", "el_residual", "map_residual"}
        assert len(archive["x"]) == 2
        assert len(archive["r"]) == 1


class TestGradientFallback:
    """Newton is replaced by an ascent direction so only the fallback can make progress."""

    @pytest.fixture
    def stalled_newton(self, zero_solver, monkeypatch):
        monkeypatch.setattr(mather, "MAX_LINE_SEARCH", 4)
        monkeypatch.setattr(zero_solver, "_newton_direction", lambda hess, grad: grad)
        return zero_solver

    def test_descent_recovers_orbit(self, stalled_newton):
        orbit = stalled_newton.periodic_orbit(3, 2, x_init=[0.0, 3.0 * math.pi + 0.05])
        assert orbit.gradient_steps >= 1
        assert orbit.el_residual < 1e-10
        assert orbit.r.tolist() == pytest.approx([1.5 * math.pi, 1.5 * math.pi], abs=1e-7)
        assert orbit.x[1] - orbit.x[0] == pytest.approx(3.0 * math.pi, abs=1e-7)

    def test_both_directions_stalled(self, stalled_newton, monkeypatch):
        monkeypatch.setattr(stalled_newton, "_descent_direction", lambda hess, grad: grad)
        with pytest.raises(NoConvergence) as info:
            stalled_newton.periodic_orbit(3, 2, x_init=[0.0, 3.0 * math.pi + 0.05])
        assert info.value.best.x[1] == pytest.approx(3.0 * math.pi + 0.05)


# ── rotation numbers ────────────────────────────────────────────


class TestRotationNumber:
    def test_integrable(self, zero_solver):
        estimate = zero_solver.rotation_number(math.pi, 0.0, 10)
        assert estimate.alpha == pytest.approx(1.0, abs=1e-10)
        assert estimate.iterates.size == 11

    def test_periodic_orbit(self, quartic_solver):
        orbit = quartic_solver.periodic_orbit(3, 2)
        estimate = quartic_solver.rotation_number(orbit.r[0], orbit.x[0], 16)
        assert estimate.alpha == pytest.approx(1.5, abs=1e-8)

    def test_leaves_strip(self, zero_solver):
        with pytest.raises(DomainExit) as info:
            zero_solver.rotation_number(0.5, 0.0, 5)
        assert info.value.index == 0

    def test_too_few_iterations(self, zero_solver):
        with pytest.raises(ValueError):
            zero_solver.rotation_number(math.pi, 0.0, 1)


# ── Mather sets ─────────────────────────────────────────────────


class TestMatherSet:
    def test_convergent_orbits(self, golden_set):
        assert golden_set.convergents == [(2, 1), (3, 2), (5, 3), (8, 5), (13, 8), (21, 13)]
        assert [orbit.q for orbit in golden_set.orbits] == [1, 2, 3, 5, 8, 13]

    def test_hull_relation(self, quartic_solver, golden_set):
        assert golden_set.hull.violations == 0
        assert quartic_solver.hull_relation_residual(golden_set.hull) < 1e-5

    def test_hull_samples_ordered(self, golden_set):
        assert np.all(np.diff(golden_set.hull.xi) > 0)
        assert np.all(np.diff(golden_set.hull_phi) > 0)
        assert golden_set.hull_eta.shape == (13,)

    def test_classified_as_curve(self, golden_set):
        assert golden_set.classification == "curve"
        assert golden_set.largest_gap < 4.0 * math.pi / 13.0

    def test_archive(self, golden_set):
        archive = golden_set.to_archive()
        assert archive["classification"] == golden_set.classification
        assert len(archive["convergents"]) == 6
        assert set(archive["hull"]) == {"xi", "phi", "eta", "violations", "max_jump"}

    def test_solution_family(self, quartic_solver, golden_set):
        report = quartic_solver.verify_solution_family(golden_set, xi_indices=[0])
        assert report.passed
        assert report.min_thetadot > 0
        assert report.clockwise

    def test_depth_cap(self, zero_session):
        solver = MatherSolver(zero_session.generating, settings=SolverSettings(q_cap=3))
        with pytest.raises(DepthError):
            solver.mather_set(GOLDEN, 4)

    def test_integrable_gaps_are_uniform(self, zero_solver):
        ms = zero_solver.mather_set(GOLDEN, 3)
        assert ms.gaps == pytest.approx([2.0 * math.pi, math.pi, 2.0 * math.pi / 3.0])


class TestHullFunctions:
    @pytest.fixture
    def crossing_orbit(self):
        return Orbit(s=1, q=3, x=np.array([0.0, 3.0, 2.5, 2.0 * math.pi]), r=np.array([1.0, 1.0, 1.0]),
                     action=0.0, el_residual=0.0)

    def test_violation_raised(self, zero_solver, crossing_orbit):
        with pytest.raises(MonotonicityViolation) as info:
            zero_solver.hull_functions(crossing_orbit)
        assert info.value.violations == 1

    def test_violation_reported_without_repair(self, zero_solver, crossing_orbit):
        hull = zero_solver.hull_functions(crossing_orbit, strict=False)
        assert hull.violations == 1
        assert hull.phi.tolist() == [0.0, 3.0, 2.5]

    def test_shifted_index(self, zero_solver):
        orbit = zero_solver.periodic_orbit(3, 2)
        hull = zero_solver.hull_functions(orbit)
        assert hull.shifted_index(1) == (0, 2)
        assert zero_solver.hull_relation_residual(hull) < 1e-9
