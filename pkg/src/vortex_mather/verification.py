"""
Invariant suite behind the `verify` command.

Every check runs on small fixed grids placed relative to the working strip,
so the same suite serves the integrable configuration and perturbed ones.
"""

import logging
import math
from typing import Callable

import numpy as np

from vortex_mather.diagnostics import (
    Check,
    OscillatoryIntegral,
    NOISE_FLOOR,
    derivative_estimates,
    monodromy_limit_scan,
    monodromy_uniformity,
    norms_bounded,
    oscillatory_decay,
    polynomial_q,
    splitting_scan,
    weak_b12_scan,
)
from vortex_mather.errors import VortexMatherError
from vortex_mather.flow import PoincareFlow, symplectic_weight_inverse
from vortex_mather.generating import GeneratingFunction
from vortex_mather.model import VortexModel, from_regularized
from vortex_mather.poincare import exactness_residual, lift_equivariance, monotone_argument, twist_scan
from vortex_mather.schemas import MonomialTerm, Perturbation
from vortex_mather.session import AnalysisSession

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
ORBIT_CANDIDATES = [(1, 1), (3, 2), (7, 2), (22, 7)]
SAMPLE_ANGLES = (0.4, 2.2)
# Points per axis of the (x, x1 - x) grid for the generating function checks
GENERATING_AXIS = 10
HULL_DEPTH = 6


def _base(session: AnalysisSession) -> float:
    return max(1.0, session.strip.r_bar)


def _radii(session: AnalysisSession) -> list[float]:
    base = _base(session)
    return [2.0 * base, 6.0 * base]


def _zero_flow(session: AnalysisSession) -> PoincareFlow:
    model = VortexModel(Perturbation(epsilon=session.config.perturbation.epsilon))
    return PoincareFlow(model, session.config.integrator)


def _check(name: str, values: list, threshold: float | None, passed: bool) -> Check:
    return Check(name=name, values=[float(v) for v in values], threshold=threshold, passed=bool(passed))


# ── model ────────────────────────────────────────────────────────────


def check_field_periodicity(session: AnalysisSession) -> Check:
    model = session.model
    worst = 0.0
    for t in (0.1, 0.37):
        for r in _radii(session):
            for theta in SAMPLE_ANGLES:
                base = np.array(model.regularized_field(t, r, theta))
                later = np.array(model.regularized_field(t + 1.0, r, theta))
                turned = np.array(model.regularized_field(t, r, theta + TWO_PI))
                scale = 1.0 + float(np.max(np.abs(base)))
                worst = max(worst, float(np.max(np.abs(later - base))) / scale,
                            float(np.max(np.abs(turned - base))) / scale)
    return _check("field_periodicity", [worst], 1e-12, worst < 1e-12)


def check_pushforward(session: AnalysisSession) -> Check:
    worst = max(session.model.conjugacy_residual(t, r, theta)
                for t in (0.0, 0.6) for r in _radii(session) for theta in SAMPLE_ANGLES)
    return _check("cartesian_pushforward", [worst], 1e-9, worst < 1e-9)


def check_jacobian(session: AnalysisSession) -> Check:
    model = session.model

    def field(t, r, theta):
        f_val, g_val = model.regularized_field(t, r, theta)
        return np.array([f_val, 2.0 * r + g_val])

    worst = 0.0
    for r in _radii(session):
        for theta in SAMPLE_ANGLES:
            t = 0.25
            h_r, h_theta = 1e-6 * r, 1e-6
            fd = np.column_stack([
                (field(t, r + h_r, theta) - field(t, r - h_r, theta)) / (2.0 * h_r),
                (field(t, r, theta + h_theta) - field(t, r, theta - h_theta)) / (2.0 * h_theta),
            ])
            jac = model.field_jacobian(t, r, theta)
            worst = max(worst, float(np.max(np.abs(fd - jac))) / (1.0 + float(np.max(np.abs(jac)))))
    return _check("jacobian_fd", [worst], 1e-6, worst < 1e-6)


def check_order_scaling(session: AnalysisSession) -> Check:
    eps = session.model.epsilon
    sups = session.model.order_scaling([eps / 2.0, eps / 4.0, eps / 8.0, eps / 16.0])
    passed = bool(np.all(np.isfinite(sups)) and sups[-1] <= 2.0 * np.max(sups[:-1]) + 1e-12)
    return _check("order_scaling", sups.tolist(), None, passed)


# ── flow ─────────────────────────────────────────────────────────────


def check_integrable_closed_form(session: AnalysisSession) -> Check:
    flow = _zero_flow(session)
    identity_twist = np.array([[1.0, 0.0], [2.0, 1.0]])
    worst = 0.0
    for r0 in (5.0, 20.0, 100.0):
        for theta0 in (0.0, 1.3):
            res = flow.poincare(r0, theta0)
            worst = max(worst, abs(res.r1 - r0), abs(res.theta1 - theta0 - 2.0 * r0),
                        float(np.max(np.abs(res.Y1 - identity_twist))),
                        abs(res.S - (-0.5 - 0.5 * math.log(2.0 * r0))))
    return _check("integrable_closed_form", [worst], 1e-9, worst < 1e-9)


def check_symplectic_defect(session: AnalysisSession) -> Check:
    worst = 0.0
    for r0 in _radii(session):
        for theta0 in SAMPLE_ANGLES:
            res = session.flow.poincare(r0, theta0)
            expected = (res.r1 / r0) ** 2
            worst = max(worst, abs(np.linalg.det(res.Y1) - expected) / expected)
    return _check("symplectic_defect", [worst], 1e-8, worst < 1e-8)


def check_tolerance_halving(session: AnalysisSession) -> Check:
    flow = session.flow
    r0, theta0 = _radii(session)[0], 0.7
    coarse = flow.poincare(r0, theta0)
    fine = flow.with_tolerance(flow.settings.rtol / 2.0).poincare(r0, theta0)
    change = max(abs(fine.r1 - coarse.r1), abs(fine.theta1 - coarse.theta1)) / (1.0 + abs(coarse.theta1))
    threshold = 10.0 * flow.settings.rtol
    return _check("tolerance_halving", [change], threshold, change < threshold)


def check_trajectory_conjugacy(session: AnalysisSession) -> Check:
    x0, y0 = from_regularized(_radii(session)[0], 0.4)
    discrepancy = session.flow.conjugacy_check(x0, y0)
    return _check("trajectory_conjugacy", [discrepancy], 1e-6, discrepancy < 1e-6)


def check_growth_bound(session: AnalysisSession) -> Check:
    K = session.strip.K
    if K is None:
        return _check("growth_bound", [], None, True)
    return _check("growth_bound", [K], None, math.isfinite(K))


# ── poincare ─────────────────────────────────────────────────────────


def check_twist_positive(session: AnalysisSession) -> Check:
    scan = twist_scan(session.flow, [session.strip.r_bar] + _radii(session), np.linspace(0.0, TWO_PI, 4, endpoint=False),
                      jobs=session.jobs)
    passed = scan.min_twist > 0 and scan.missing == 0 and scan.fd_agreement < 1e-5
    return _check("twist_positive", [scan.min_twist, scan.fd_agreement], 0.0, passed)


def check_twist_limit(session: AnalysisSession) -> Check:
    base = _base(session)
    scan = twist_scan(session.flow, [10.0 * base, 100.0 * base, 1000.0 * base],
                      np.linspace(0.0, TWO_PI, 4, endpoint=False), jobs=session.jobs)
    devs = scan.sup_dev_by_r
    passed = bool((np.all(np.diff(devs) < 0) or np.max(devs) < 1e-9) and devs[-1] < 0.01)
    return _check("twist_limit", devs.tolist(), 0.01, passed)


def check_exactness(session: AnalysisSession) -> Check:
    report = exactness_residual(session.flow, _radii(session), list(SAMPLE_ANGLES), fd_step=1e-3,
                                richardson=True, jobs=session.jobs)
    return _check("exactness", [report.max_residual], 1e-6, report.max_residual < 1e-6)


def check_lift_equivariance(session: AnalysisSession) -> Check:
    defect = max(lift_equivariance(session.flow, r0, 0.9) for r0 in _radii(session))
    return _check("lift_equivariance", [defect], 1e-8, defect < 1e-8)


def check_window(session: AnalysisSession) -> Check:
    window = session.window
    passed = window.periodicity_defect < 1e-8 and math.isfinite(window.alpha_threshold)
    return _check("window", [window.W_minus, window.alpha_threshold, window.periodicity_defect], 1e-8, passed)


def check_monotone_argument(session: AnalysisSession) -> Check:
    slowest = min(monotone_argument(session.flow, session.strip.r_bar, theta) for theta in SAMPLE_ANGLES)
    return _check("monotone_argument", [slowest], 0.0, slowest > 0)


# ── generating ───────────────────────────────────────────────────────


def generating_grid(session: AnalysisSession) -> list[tuple[float, float]]:
    """Fixed (x, x1) points of B: x across one period, x1 - x = 2R for R in [1.5, 6] base."""
    base = _base(session)
    xs = np.linspace(0.0, TWO_PI, GENERATING_AXIS, endpoint=False)
    radii = np.geomspace(1.5 * base, 6.0 * base, GENERATING_AXIS)
    points = [(float(x), float(x + 2.0 * R)) for x in xs for R in radii]
    return [(x, x1) for x, x1 in points if session.generating.contains(x, x1)]


def check_generating_identities(session: AnalysisSession) -> Check:
    generating = session.generating
    points = generating_grid(session)
    worst, twist_sign = 0.0, -np.inf
    for x, x1 in points:
        sample = generating.h_eval(x, x1)
        d1, d2 = generating.fd_partials(x, x1)
        worst = max(worst, abs(d1 - sample.d1h), abs(d2 - sample.d2h))
        twist_sign = max(twist_sign, sample.d12h)
    passed = bool(points) and worst < 1e-7 and twist_sign < 0
    return _check("generating_identities", [worst, twist_sign, len(points)], 1e-7, passed)


def check_generating_consistency(session: AnalysisSession) -> list[Check]:
    """R from -d1h, periodicity of h, and P(R, x) = (f^-1(d2h), x1) on every tenth grid point."""
    generating, flow = session.generating, session.flow
    consistency = periodicity = reconstruction = 0.0
    for x, x1 in generating_grid(session)[::GENERATING_AXIS]:
        sample = generating.h_eval(x, x1)
        consistency = max(consistency, abs(symplectic_weight_inverse(-sample.d1h) - sample.R))
        shifted = generating.h_eval(x + TWO_PI, x1 + TWO_PI, use_cache=False)
        periodicity = max(periodicity, abs(shifted.h - sample.h))
        image = flow.poincare(sample.R, x)
        reconstruction = max(reconstruction, abs(image.r1 - symplectic_weight_inverse(sample.d2h)),
                             abs(image.theta1 - x1))
    return [
        _check("generating_consistency", [consistency], 1e-8, consistency < 1e-8),
        _check("generating_periodicity", [periodicity], 1e-9, periodicity < 1e-9),
        _check("map_reconstruction", [reconstruction], 1e-7, reconstruction < 1e-7),
    ]


def check_generating_closed_form(session: AnalysisSession) -> Check:
    generating = GeneratingFunction(_zero_flow(session), settings=session.config.solver)
    worst = 0.0
    for x, gap in ((0.3, TWO_PI), (1.0, 10.0), (4.0, 40.0)):
        sample = generating.h_eval(x, x + gap)
        worst = max(worst, abs(sample.h - (-0.5 - 0.5 * math.log(gap))))
    return _check("generating_closed_form", [worst], 1e-9, worst < 1e-9)


# ── mather ───────────────────────────────────────────────────────────


def _admitted_orbits(session: AnalysisSession) -> list[tuple[int, int]]:
    admitted = [(s, q) for s, q in ORBIT_CANDIDATES if session.window.admits(s / q)]
    if not admitted:
        admitted = [(math.floor(session.window.alpha_threshold) + 1, 1)]
    return admitted


def check_orbits(session: AnalysisSession) -> list[Check]:
    solver = session.solver
    el_tol = max(1e-10, session.config.solver.newton_tol)
    checks = []
    for s, q in _admitted_orbits(session):
        orbit = solver.periodic_orbit(s, q)
        report = solver.orbit_residuals(orbit)
        passed = report.el < el_tol and report.map < 1e-6 and report.deviation_ok and report.comparability
        checks.append(_check(f"orbit_{s}_{q}", [report.el, report.map, report.max_deviation], 1e-6, passed))
    return checks


def check_local_minimality(session: AnalysisSession) -> Check:
    solver = session.solver
    worst = min(solver.action_stationarity(solver.periodic_orbit(s, q)) for s, q in _admitted_orbits(session))
    return _check("local_minimality", [worst], -1e-9, worst > -1e-9)


def check_translation_equivariance(session: AnalysisSession) -> Check:
    solver = session.solver
    s, q = _admitted_orbits(session)[0]
    defect = solver.translation_defect(solver.periodic_orbit(s, q))
    return _check("translation_equivariance", [defect], 1e-8, defect < 1e-8)


def check_rotation_number(session: AnalysisSession) -> Check:
    s, q = _admitted_orbits(session)[0]
    orbit = session.solver.periodic_orbit(s, q)
    estimate = session.solver.rotation_number(orbit.r[0], orbit.x[0], 8 * q)
    error = abs(estimate.alpha - s / q)
    return _check("rotation_number", [estimate.alpha, error], 1e-8, error < 1e-8)


def _golden_alpha(session: AnalysisSession) -> float:
    shift = max(0, math.ceil(session.window.alpha_threshold - 1.5 + 1e-9))
    return GOLDEN + shift


def check_hull_relation(session: AnalysisSession) -> Check:
    ms = session.solver.mather_set(_golden_alpha(session), HULL_DEPTH)
    residual = session.solver.hull_relation_residual(ms.hull)
    passed = residual < 1e-5 and ms.hull.violations == 0
    return _check("hull_relation", [residual, ms.hull.violations, ms.largest_gap], 1e-5, passed)


def check_solution_family(session: AnalysisSession) -> Check:
    """Shift and time relations of the continuous solutions through one orbit's hull samples."""
    solver = session.solver
    admitted = _admitted_orbits(session)
    s, q = (7, 2) if (7, 2) in admitted else admitted[0]
    hull = solver.hull_functions(solver.periodic_orbit(s, q), strict=False)
    report = solver.verify_solution_family(hull)
    return _check("solution_family", [report.shift_defect, report.time_defect, report.min_thetadot], 1e-5,
                  report.passed and hull.violations == 0)


# ── diagnostics ──────────────────────────────────────────────────────


def check_rl_decay(session: AnalysisSession) -> Check:
    integral = OscillatoryIntegral(
        poly=polynomial_q([MonomialTerm(i=1, j=0, a0=1.0)]),
        degree=1,
        lambdas=np.geomspace(1e2, 1e4, 7),
        beta=lambda s: 0.1 * np.sin(TWO_PI * np.asarray(s)),
        beta_dot=lambda s: 0.1 * TWO_PI * np.cos(TWO_PI * np.asarray(s)),
    )
    oscillatory_decay(integral)
    passed = integral.fitted_exponent <= -0.9 and integral.c_rl_hat < 10.0
    return _check("rl_decay", [integral.fitted_exponent, integral.c_rl_hat], -0.9, passed)


def check_splitting(session: AnalysisSession) -> Check:
    base = max(1.0, session.model.a_star)
    table = splitting_scan(session.model, [10.0 * base, 100.0 * base, 1000.0 * base], n_theta=32, n_t=4)
    passed, spreads = norms_bounded(table)
    return _check("splitting_bounded", spreads, 3.0, passed)


def check_derivative_estimates(session: AnalysisSession) -> Check:
    """Scaled derivative bounds do not grow with r."""
    base = max(1.0, session.model.a_star)
    table = derivative_estimates(session.model, [10.0 * base, 100.0 * base, 1000.0 * base], n_theta=32, n_t=4)
    growth = float(np.max(table[-1] / np.maximum(table[0], NOISE_FLOOR)))
    passed = bool(np.all(table[-1] <= 3.0 * table[0] + NOISE_FLOOR))
    return _check("derivative_estimates", table[-1].tolist() + [growth], 3.0, passed)


def check_weak_b12(session: AnalysisSession) -> Check:
    base = _base(session)
    values = weak_b12_scan(session.flow, [5.0 * base, 50.0 * base, 500.0 * base])
    passed = bool(np.all(np.diff(values) < 0) or np.max(values) < NOISE_FLOOR)
    return _check("weak_b12", values.tolist(), None, passed)


def check_monodromy_limit(session: AnalysisSession) -> Check:
    base = _base(session)
    scan = monodromy_limit_scan(session.flow, [10.0 * base, 100.0 * base], jobs=session.jobs)
    passed = scan.decreasing or max(scan.deviations) < 1e-9
    return _check("monodromy_limit", scan.deviations, None, passed)


def check_monodromy_uniformity(session: AnalysisSession) -> Check:
    """The worst deviation over theta0 shrinks between 10 and 100 base."""
    base = _base(session)
    _, near = monodromy_uniformity(session.flow, 10.0 * base, n_theta=4, jobs=session.jobs)
    _, far = monodromy_uniformity(session.flow, 100.0 * base, n_theta=4, jobs=session.jobs)
    passed = max(far) < max(near) or max(near + far) < 1e-9
    return _check("monodromy_uniformity", [max(near), max(far)], None, passed)


SUITE: list[Callable[[AnalysisSession], Check | list[Check]]] = [
    check_field_periodicity,
    check_pushforward,
    check_jacobian,
    check_order_scaling,
    check_integrable_closed_form,
    check_symplectic_defect,
    check_tolerance_halving,
    check_trajectory_conjugacy,
    check_growth_bound,
    check_twist_positive,
    check_twist_limit,
    check_exactness,
    check_lift_equivariance,
    check_window,
    check_monotone_argument,
    check_generating_identities,
    check_generating_consistency,
    check_generating_closed_form,
    check_orbits,
    check_local_minimality,
    check_translation_equivariance,
    check_rotation_number,
    check_hull_relation,
    check_solution_family,
    check_rl_decay,
    check_splitting,
    check_derivative_estimates,
    check_weak_b12,
    check_monodromy_limit,
    check_monodromy_uniformity,
]


def run_suite(session: AnalysisSession, suite=None) -> list[Check]:
    """Run every check; a check that raises is recorded as failed with the error text."""
    checks: list[Check] = []
    for run in suite or SUITE:
        name = run.__name__.removeprefix("check_")
        try:
            outcome = run(session)
        except VortexMatherError as e:
            logger.error("check %s raised %s: %s", name, type(e).__name__, e)
            outcome = Check(name=name, values=[f"{type(e).__name__}: {e}"], threshold=None, passed=False)
        for check in outcome if isinstance(outcome, list) else [outcome]:
            logger.info("%-24s %s", check.name, "PASS" if check.passed else "FAIL")
            checks.append(check)
    return checks


def suite_passed(checks: list[Check]) -> bool:
    return all(check.passed for check in checks)
