"""
Numerical checks on the asymptotic machinery behind the twist limit:
Jacobian splitting, oscillatory integral decay, monodromy convergence.
"""

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from vortex_mather.config import parallel_map
from vortex_mather.errors import DomainError, HypothesisError, QuadratureError
from vortex_mather.flow import AugmentedState, PoincareFlow
from vortex_mather.model import VortexModel
from vortex_mather.schemas import MonomialTerm

logger = logging.getLogger(__name__)

A_MATRIX = np.array([[0.0, 0.0], [2.0, 0.0]])
INTEGRABLE_MONODROMY = np.array([[1.0, 0.0], [2.0, 1.0]])
CIRCULAR_MEAN_TOL = 1e-10
# Scaled norms below this are treated as identically zero
NOISE_FLOOR = 1e-12
GAUSS_NODES = 4
PANELS_PER_PERIOD = 8


@dataclass
class Check:
    name: str
    values: list
    threshold: float | None
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "values": self.values, "threshold": self.threshold, "pass": self.passed}


# ── splitting ────────────────────────────────────────────────────────


@dataclass
class SplittingSample:
    t: float
    r: float
    theta: float
    b12: float
    c: np.ndarray
    A: np.ndarray = field(default_factory=lambda: A_MATRIX.copy())

    @property
    def scaled_norms(self) -> tuple[float, float, float, float]:
        r, c = self.r, self.c
        return (r ** 1.5 * abs(c[0, 0]), r ** 0.5 * abs(c[0, 1]), r ** 2 * abs(c[1, 0]), r * abs(c[1, 1]))


def splitting(model: VortexModel, t: float, r: float, theta: float) -> SplittingSample:
    """M = A + B + C with B carrying only b12 = d^2/dtheta^2 T4(t, cos theta, -sin theta).

    Raises:
        DomainError: If r is not above a*.
    """
    if r <= model.a_star:
        raise DomainError(f"r = {r} is not above a* = {model.a_star:.6g}")
    jac = model.field_jacobian(t, r, theta)
    _, b12 = model.angular_leading(t, theta)
    b = np.array([[0.0, float(b12)], [0.0, 0.0]])
    return SplittingSample(t=t, r=r, theta=theta, b12=float(b12), c=jac - A_MATRIX - b)


def splitting_scan(model: VortexModel, r_list, n_theta: int = 64, n_t: int = 8) -> np.ndarray:
    """sup over (t, theta) of the four scaled c-norms, one row per r."""
    ts = np.linspace(0.0, 1.0, n_t, endpoint=False)
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    rows = []
    for r in r_list:
        worst = np.zeros(4)
        for t in ts:
            for theta in angles:
                worst = np.maximum(worst, splitting(model, t, r, theta).scaled_norms)
        rows.append(worst)
    return np.array(rows)


def norms_bounded(table: np.ndarray, ratio: float = 3.0) -> tuple[bool, list[float]]:
    """Does each column vary by less than `ratio` across rows? Zero columns pass."""
    spreads = []
    for column in table.T:
        if np.max(column) < NOISE_FLOOR:
            spreads.append(1.0)
        else:
            spreads.append(float(np.max(column) / max(np.min(column), NOISE_FLOOR)))
    return all(s < ratio for s in spreads), spreads


def derivative_estimates(model: VortexModel, r_list, n_theta: int = 64, n_t: int = 8) -> np.ndarray:
    """Scaled derivative bounds with N = 4, sup over (t, theta), one row per r.

    Columns: r^{5/2}(|p~_theta| + |p~_thetatheta|), r^{7/2}|p~_rtheta|,
    r^3 (|p_r| + |p_rtheta|), r^4 |p_rr|.
    """
    ts = np.linspace(0.0, 1.0, n_t, endpoint=False)
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    rows = []
    for r in r_list:
        worst = np.zeros(4)
        for t in ts:
            rem = model.composed_derivatives(t, r, angles, part="remainder")
            full = model.composed_derivatives(t, r, angles)
            current = np.array([
                r ** 2.5 * np.max(np.abs(rem.u_theta) + np.abs(rem.u_thetatheta)),
                r ** 3.5 * np.max(np.abs(rem.u_rtheta)),
                r ** 3 * np.max(np.abs(full.u_r) + np.abs(full.u_rtheta)),
                r ** 4 * np.max(np.abs(full.u_rr)),
            ])
            worst = np.maximum(worst, current)
        rows.append(worst)
    return np.array(rows)


# ── oscillatory integrals ────────────────────────────────────────────


def polynomial_q(terms: list[MonomialTerm]) -> Callable:
    """q(t, eta, xi) = sum c_ij(t) eta^i xi^j from monomial terms."""

    def q(t, eta, xi):
        t = np.asarray(t, dtype=float)
        total = np.zeros(np.broadcast(t, eta, xi).shape)
        for term in terms:
            total = total + term.value(t) * np.asarray(eta) ** term.i * np.asarray(xi) ** term.j
        return total

    return q


@dataclass
class OscillatoryIntegral:
    """Integrand q(s, cos(lambda s + beta), sin(lambda s + beta)) phi(s) on [0, t_upper]."""

    poly: Callable
    degree: int
    lambdas: np.ndarray
    beta: Callable = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    phi: Callable = lambda s: np.ones_like(np.asarray(s, dtype=float))
    beta_dot: Callable | None = None
    t_upper: float = 1.0
    integrals: np.ndarray | None = None
    sup_integrals: np.ndarray | None = None
    fitted_exponent: float | None = None
    c_rl_hat: float | None = None


def circular_mean(integral: OscillatoryIntegral, n_t: int = 16) -> float:
    """max over sampled t of |integral_0^{2 pi} q(t, cos theta, sin theta) d theta|."""
    n_theta = 4 * integral.degree + 8
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    worst = 0.0
    for t in np.linspace(0.0, integral.t_upper, n_t):
        values = integral.poly(t, np.cos(angles), np.sin(angles))
        worst = max(worst, abs(2.0 * np.pi * float(np.mean(values))))
    return worst


def _beta_rate(integral: OscillatoryIntegral) -> float:
    grid = np.linspace(0.0, integral.t_upper, 2049)
    if integral.beta_dot is not None:
        rate = np.asarray(integral.beta_dot(grid))
    else:
        rate = np.gradient(np.asarray(integral.beta(grid), dtype=float), grid)
    return float(np.max(np.abs(rate)))


def _panel_integral(integral: OscillatoryIntegral, lam: float, panels: int) -> tuple[float, float]:
    """Gauss-Legendre sum over equal panels; returns (I(t_upper), sup_t |I(t)| at panel ends)."""
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_NODES)
    edges = np.linspace(0.0, integral.t_upper, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = mid[:, None] + half[:, None] * nodes[None, :]
    phase = lam * s + integral.beta(s)
    values = integral.poly(s, np.cos(phase), np.sin(phase)) * integral.phi(s)
    partial_sums = np.cumsum(np.sum(values * weights[None, :], axis=1) * half)
    return float(partial_sums[-1]), float(np.max(np.abs(partial_sums)))


def oscillatory_decay(integral: OscillatoryIntegral, rtol: float = 1e-8) -> OscillatoryIntegral:
    """Integrals over lambda, envelope slope over the top decade, and max lambda |I|.

    The slope and C_RL estimate use sup over t of |I_t(lambda)|, which avoids
    the zeros of I(lambda) at the fixed upper limit.

    Raises:
        HypothesisError: If the circular mean of q is not zero.
        ValueError: If the lambdas are not positive or span less than two decades.
        QuadratureError: If doubling the panel count changes a result beyond rtol.
    """
    mean = circular_mean(integral)
    if mean > CIRCULAR_MEAN_TOL:
        raise HypothesisError(f"circular mean of q is {mean:.3e}, not zero")
    lambdas = np.asarray(integral.lambdas, dtype=float)
    if lambdas.size < 2 or np.any(lambdas <= 0):
        raise ValueError("lambdas must be positive and at least two")
    if lambdas.max() / lambdas.min() < 100.0:
        raise ValueError("lambdas must span at least two decades")

    beta_rate = _beta_rate(integral)
    logger.info("oscillatory integral: degree %d, |beta'|_inf = %.4g", integral.degree, beta_rate)

    integrals, sups = [], []
    for lam in lambdas:
        omega = max(integral.degree, 1) * (lam + beta_rate)
        period = 2.0 * np.pi / omega
        panels = int(np.ceil(integral.t_upper * PANELS_PER_PERIOD / period))
        value, sup = _panel_integral(integral, lam, panels)
        refined, _ = _panel_integral(integral, lam, 2 * panels)
        if abs(refined - value) > 1e-13 + rtol * abs(refined):
            raise QuadratureError(f"lambda={lam:g}: {value:.6e} vs refined {refined:.6e}")
        integrals.append(abs(refined))
        sups.append(sup)

    integral.integrals = np.array(integrals)
    integral.sup_integrals = np.array(sups)
    top = lambdas >= lambdas.max() / 10.0
    if np.count_nonzero(top) < 2:
        top = np.ones_like(lambdas, dtype=bool)
    slope, _ = np.polyfit(np.log(lambdas[top]), np.log(integral.sup_integrals[top]), 1)
    integral.fitted_exponent = float(slope)
    integral.c_rl_hat = float(np.max(lambdas * integral.sup_integrals))
    logger.info("oscillatory decay: exponent %.3f, C_RL_hat %.4g", integral.fitted_exponent, integral.c_rl_hat)
    return integral


def rl_constant_bound(integral: OscillatoryIntegral, n_t: int = 513) -> float:
    """A priori constant C with |I_t(lambda)| <= C / lambda.

    Expands q(t, cos theta, sin theta) in e^{ik theta}; integration by parts on
    each mode gives sum over k != 0 of (2|g_k|_inf + |g_k'|_1 + |k| |g_k beta'|_1) / |k|
    with g_k = q_k phi.
    """
    n_theta = 4 * integral.degree + 8
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    ts = np.linspace(0.0, integral.t_upper, n_t)
    modes = np.array([np.fft.fft(integral.poly(t, np.cos(angles), np.sin(angles))) / n_theta for t in ts])
    weight = np.asarray(integral.phi(ts), dtype=float)
    rate = np.asarray(integral.beta_dot(ts)) if integral.beta_dot is not None else \
        np.gradient(np.asarray(integral.beta(ts), dtype=float), ts)

    total = 0.0
    for k in range(1, integral.degree + 1):
        for column in (k, n_theta - k):
            g = modes[:, column] * weight
            dg = np.gradient(g, ts)
            sup = np.max(np.abs(g))
            if sup < NOISE_FLOOR:
                continue
            total += (2.0 * sup + np.trapezoid(np.abs(dg), ts) + k * np.trapezoid(np.abs(g * rate), ts)) / k
    return float(total)


def trajectory_integral(flow: PoincareFlow, r0: float, theta0: float, lambdas, n_samples: int = 1025) -> OscillatoryIntegral:
    """Oscillatory integral with q = b12 and beta(t) = theta(t) - 2 r0 t taken from an actual trajectory."""
    ts = np.linspace(0.0, 1.0, n_samples)
    trajectory = flow.integrate(AugmentedState.initial(r0, theta0), 0.0, 1.0, t_eval=ts)
    beta = CubicSpline(ts, trajectory.theta - 2.0 * r0 * ts)
    beta_dot = beta.derivative()
    logger.info("trajectory beta from r0=%g: |beta|_inf = %.4g, |beta'|_inf = %.4g",
                r0, float(np.max(np.abs(beta(ts)))), float(np.max(np.abs(beta_dot(ts)))))

    model = flow.model

    def q(t, eta, xi):
        _, b12 = model.angular_leading(t, np.arctan2(xi, eta))
        return b12

    return OscillatoryIntegral(poly=q, degree=4, lambdas=np.asarray(lambdas, dtype=float), beta=beta, beta_dot=beta_dot)


def weak_b12_scan(flow: PoincareFlow, r0_list, theta0: float = 0.0, samples_per_radian: int = 20) -> np.ndarray:
    """sup over t in [0, 1] of |integral_0^t b12(s, theta(s)) ds| along trajectories."""
    values = []
    for r0 in r0_list:
        n = max(257, int(2.0 * r0 * samples_per_radian) + 1)
        ts = np.linspace(0.0, 1.0, n)
        trajectory = flow.integrate(AugmentedState.initial(r0, theta0), 0.0, 1.0, t_eval=ts)
        _, b12 = flow.model.angular_leading(ts, trajectory.theta)
        values.append(float(np.max(np.abs(cumulative_trapezoid(b12, ts, initial=0.0)))))
    return np.array(values)


# ── monodromy ────────────────────────────────────────────────────────


@dataclass
class MonodromyScan:
    r0_list: list[float]
    theta0: float
    deviations: list[float]
    decreasing: bool


def _monodromy_deviation(flow: PoincareFlow, theta0: float, r0: float) -> float:
    result = flow.poincare(r0, theta0)
    return float(np.max(np.abs(result.Y1 - INTEGRABLE_MONODROMY)))


def monodromy_limit_scan(flow: PoincareFlow, r0_list, theta0: float = 0.0, jobs: int = 1) -> MonodromyScan:
    """max-norm distance of Y(1; r0, theta0) from [[1, 0], [2, 1]], in input order."""
    deviations = parallel_map(partial(_monodromy_deviation, flow, theta0), list(r0_list), jobs)
    order = np.argsort(r0_list)
    tail = np.asarray(deviations)[order]
    decreasing = bool(np.all(np.diff(tail) < 0)) if tail.size > 1 else True
    return MonodromyScan(r0_list=list(r0_list), theta0=theta0, deviations=deviations, decreasing=decreasing)


def monodromy_uniformity(flow: PoincareFlow, r0: float, n_theta: int = 8, jobs: int = 1) -> tuple[float, list[float]]:
    """max / min of the monodromy deviation over theta0 samples at fixed r0."""
    angles = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    values = [monodromy_limit_scan(flow, [r0], theta0=a, jobs=1).deviations[0] for a in angles]
    return float(max(values) / max(min(values), NOISE_FLOOR)), values
