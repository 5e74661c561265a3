"""Grid scans of the Poincare map: twist, exactness, growth, and the rotation window."""

import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import pandas as pd

from vortex_mather.config import parallel_map
from vortex_mather.errors import DomainError, DomainExit
from vortex_mather.flow import AugmentedState, PoincareFlow, PoincareResult, symplectic_weight
from vortex_mather.schemas import StripSettings

logger = logging.getLogger(__name__)

TWIST_LIMIT = 2.0
FD_CHECK_AGREEMENT = 1e-5


def _grid(r_list, theta_list) -> list[tuple[float, float]]:
    return [(float(r), float(theta)) for r in r_list for theta in theta_list]


def _poincare_point(flow: PoincareFlow, point: tuple[float, float]) -> PoincareResult:
    r0, theta0 = point
    try:
        return flow.poincare(r0, theta0)
    except DomainExit:
        logger.warning("DomainExit at (r0=%g, theta0=%g); recorded as missing", r0, theta0)
        return PoincareResult.missing(r0, theta0)


def _fd_theta1_in_r0(flow: PoincareFlow, r0: float, theta0: float) -> float:
    h = 1e-4 * max(1.0, r0)
    return (flow.poincare(r0 + h, theta0).theta1 - flow.poincare(r0 - h, theta0).theta1) / (2.0 * h)


def fit_power_law(r_values, deviations) -> float | None:
    """Slope of log(deviation) against log(r); None with fewer than two usable points."""
    r_values = np.asarray(r_values, dtype=float)
    deviations = np.asarray(deviations, dtype=float)
    usable = np.isfinite(deviations) & (deviations > 0)
    if np.count_nonzero(usable) < 2:
        return None
    slope, _ = np.polyfit(np.log(r_values[usable]), np.log(deviations[usable]), 1)
    return float(slope)


# ── twist ────────────────────────────────────────────────────────────


@dataclass
class TwistScan:
    r_grid: np.ndarray
    theta_grid: np.ndarray
    dG_dr0: np.ndarray
    sup_dev: float
    sup_dev_by_r: np.ndarray
    fd_agreement: float
    decay_exponent: float | None = None

    @property
    def min_twist(self) -> float:
        return float(np.nanmin(self.dG_dr0))

    @property
    def missing(self) -> int:
        return int(np.count_nonzero(~np.isfinite(self.dG_dr0)))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.dG_dr0, index=self.r_grid, columns=self.theta_grid)
        frame.index.name = "r0"
        return frame


def twist_scan(flow: PoincareFlow, r_list, theta_list, jobs: int = 1) -> TwistScan:
    """d theta1 / d r0 from the monodromy on an (r0, theta0) grid.

    Three fixed grid points (first, middle, last) are cross-checked against
    central differences of theta1 in r0.
    """
    r_grid = np.asarray(r_list, dtype=float)
    theta_grid = np.asarray(theta_list, dtype=float)
    points = _grid(r_grid, theta_grid)
    results = parallel_map(partial(_poincare_point, flow), points, jobs)
    twist = np.array([res.dG_dr0 for res in results]).reshape(r_grid.size, theta_grid.size)

    deviation = np.abs(twist - TWIST_LIMIT)
    sup_dev_by_r = np.nanmax(deviation, axis=1) if np.isfinite(deviation).any() else np.full(r_grid.size, np.nan)

    fd_agreement = 0.0
    for k in sorted({0, len(points) // 2, len(points) - 1}):
        res = results[k]
        if res.domain_exit:
            continue
        fd = _fd_theta1_in_r0(flow, res.r0, res.theta0)
        fd_agreement = max(fd_agreement, abs(fd - res.dG_dr0))
    if fd_agreement > FD_CHECK_AGREEMENT:
        logger.warning("twist FD cross-check disagreement %.3e exceeds %.0e", fd_agreement, FD_CHECK_AGREEMENT)

    exponent = fit_power_law(r_grid, sup_dev_by_r)
    if exponent is not None:
        logger.info("twist deviation decays like r^%.3f (exploratory fit)", exponent)

    return TwistScan(
        r_grid=r_grid,
        theta_grid=theta_grid,
        dG_dr0=twist,
        sup_dev=float(np.nanmax(sup_dev_by_r)),
        sup_dev_by_r=sup_dev_by_r,
        fd_agreement=fd_agreement,
        decay_exponent=exponent,
    )


# ── exactness ────────────────────────────────────────────────────────


@dataclass
class ExactnessReport:
    max_residual: float
    location: tuple[float, float]
    residuals: np.ndarray


def _central(fn, x: float, h: float) -> float:
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def _exactness_point(flow: PoincareFlow, fd_step: float, richardson: bool, point: tuple[float, float]) -> float:
    r0, theta0 = point
    base = flow.poincare(r0, theta0)
    f1 = symplectic_weight(base.r1)
    predicted_r = f1 * base.Y1[1, 0]
    predicted_theta = f1 * base.Y1[1, 1] - symplectic_weight(r0)

    def s_of_r(r):
        return flow.poincare(r, theta0).S

    def s_of_theta(theta):
        return flow.poincare(r0, theta).S

    def derivative(fn, x):
        coarse = _central(fn, x, fd_step)
        if not richardson:
            return coarse
        fine = _central(fn, x, fd_step / 2.0)
        return (4.0 * fine - coarse) / 3.0

    return max(abs(derivative(s_of_r, r0) - predicted_r), abs(derivative(s_of_theta, theta0) - predicted_theta))


def exactness_residual(flow: PoincareFlow, r_list, theta_list, fd_step: float = 1e-3,
                       richardson: bool = False, jobs: int = 1) -> ExactnessReport:
    """Compare finite differences of S with f(r1) grad theta1 - f(r0) grad theta0.

    Raises:
        ValueError: If fd_step is outside [1e-7, 1e-3].
    """
    if not 1e-7 <= fd_step <= 1e-3:
        raise ValueError(f"fd_step must lie in [1e-7, 1e-3], got {fd_step}")
    points = _grid(r_list, theta_list)
    residuals = np.array(parallel_map(partial(_exactness_point, flow, fd_step, richardson), points, jobs))
    worst = int(np.argmax(residuals))
    return ExactnessReport(max_residual=float(residuals[worst]), location=points[worst],
                           residuals=residuals.reshape(len(r_list), len(theta_list)))


# ── growth bound ─────────────────────────────────────────────────────


def _growth_point(flow: PoincareFlow, n_t: int, point: tuple[float, float]) -> float:
    r0, theta0 = point
    trajectory = flow.integrate(AugmentedState.initial(r0, theta0), 0.0, 1.0, t_eval=np.linspace(0.0, 1.0, n_t))
    return flow.growth_deviation(trajectory)


def estimate_K(flow: PoincareFlow, r_list, theta_list, n_t: int = 33, jobs: int = 1) -> tuple[float, np.ndarray]:
    """Empirical sup of |r - r0| + |theta - theta0 - 2 r0 t| over grid and t samples.

    Returns:
        (K_hat, per-point maxima shaped like the grid)
    """
    values = np.array(parallel_map(partial(_growth_point, flow, n_t), _grid(r_list, theta_list), jobs))
    values = values.reshape(len(r_list), len(theta_list))
    return float(np.max(values)), values


def monotone_argument(flow: PoincareFlow, r0: float, theta0: float, n_samples: int = 33) -> float:
    """Smallest sampled thetadot along the trajectory from (r0, theta0)."""
    trajectory = flow.integrate(AugmentedState.initial(r0, theta0), 0.0, 1.0, t_eval=np.linspace(0.0, 1.0, n_samples))
    return float(np.min(flow.angular_velocity(trajectory)))


def lift_equivariance(flow: PoincareFlow, r0: float, theta0: float) -> float:
    """Defect of P(r0, theta0 + 2 pi) = P(r0, theta0) + (0, 2 pi)."""
    base = flow.poincare(r0, theta0)
    shifted = flow.poincare(r0, theta0 + 2.0 * np.pi)
    return max(abs(shifted.r1 - base.r1), abs(shifted.theta1 - base.theta1 - 2.0 * np.pi))


# ── working strip and window ─────────────────────────────────────────


@dataclass
class StripEstimate:
    """Lower edge r_bar = max{a*, a1, a2} + K of the working strip."""

    r_bar: float
    a_star: float
    a1: float | None = None
    a2: float | None = None
    K: float | None = None
    sample_r: list[float] = field(default_factory=list)


def default_sample_r(a_star: float, count: int = 6) -> np.ndarray:
    return np.geomspace(1.01 * a_star, 20.0 * a_star, count)


def working_strip(flow: PoincareFlow, settings: StripSettings | None = None, jobs: int = 1) -> StripEstimate:
    """Lower edge of the strip where the map twists and the argument is monotone.

    An explicit settings.r_bar is taken as-is.

    Raises:
        DomainError: If no sample radius shows positive twist.
    """
    settings = settings or StripSettings()
    a_star = flow.a_star
    c1 = a_star - flow.r_star
    a1 = float(np.sqrt(c1) / 2.0)

    if settings.r_bar is not None:
        if settings.r_bar <= a_star:
            raise DomainError(f"configured r_bar = {settings.r_bar} is not above a* = {a_star:.6g}")
        return StripEstimate(r_bar=settings.r_bar, a_star=a_star, a1=a1)

    sample_r = np.asarray(settings.sample_r or default_sample_r(a_star), dtype=float)
    sample_theta = np.linspace(0.0, 2.0 * np.pi, settings.sample_theta, endpoint=False)
    scan = twist_scan(flow, sample_r, sample_theta, jobs=jobs)

    row_ok = np.nanmin(scan.dG_dr0, axis=1) > 0
    a2 = None
    for k in range(sample_r.size):
        if row_ok[k:].all():
            a2 = float(sample_r[k])
            break
    if a2 is None:
        raise DomainError("no sample radius shows positive twist; extend strip.sample_r")
    logger.info("a2 surrogate from sample grid: %.6g (%d radii)", a2, sample_r.size)

    K, _ = estimate_K(flow, sample_r, sample_theta, n_t=settings.sample_t, jobs=jobs)
    r_bar = max(a_star, a1, a2) + K
    logger.info("working strip: a*=%.6g a1=%.6g a2=%.6g K=%.6g -> r_bar=%.6g", a_star, a1, a2, K, r_bar)
    return StripEstimate(r_bar=r_bar, a_star=a_star, a1=a1, a2=a2, K=K, sample_r=sample_r.tolist())


@dataclass
class FrequencyWindow:
    """alpha^-(x) sampled at the strip edge, and the admissible rotation threshold.

    W_plus is unbounded for this system and never evaluated.
    """

    r_bar: float
    theta_grid: np.ndarray
    alpha_minus_samples: np.ndarray
    W_minus: float
    alpha_threshold: float
    coarse_threshold: float | None = None
    periodicity_defect: float = 0.0
    W_plus: float = float("inf")

    def alpha_minus(self, x) -> np.ndarray:
        """Periodic linear interpolation of the alpha^- samples."""
        return np.interp(x, self.theta_grid, self.alpha_minus_samples, period=2.0 * np.pi)

    def admits(self, alpha: float) -> bool:
        return alpha > self.alpha_threshold

    def summary(self) -> dict:
        return {
            "r_bar": self.r_bar,
            "W_minus": self.W_minus,
            "alpha_threshold": self.alpha_threshold,
            "coarse_threshold": self.coarse_threshold,
            "spread": float(np.ptp(self.alpha_minus_samples)),
            "periodicity_defect": self.periodicity_defect,
        }


def boundary_frequencies(flow: PoincareFlow, r_bar: float, theta_grid, K: float | None = None) -> FrequencyWindow:
    """alpha^-(x) = (theta1(r_bar, x) - x) / 2pi on the grid, W^- = max.

    With K known the coarser threshold (2 r_bar + K + 2) / 2pi is reported too.
    """
    if r_bar <= flow.a_star:
        raise DomainExit(f"r_bar = {r_bar} is not above a* = {flow.a_star:.6g}")
    theta_grid = np.asarray(theta_grid, dtype=float)
    samples = np.array([(flow.poincare(r_bar, x).theta1 - x) / (2.0 * np.pi) for x in theta_grid])
    shifted = (flow.poincare(r_bar, theta_grid[0] + 2.0 * np.pi).theta1 - theta_grid[0] - 2.0 * np.pi) / (2.0 * np.pi)

    w_minus = float(np.max(samples))
    return FrequencyWindow(
        r_bar=r_bar,
        theta_grid=theta_grid,
        alpha_minus_samples=samples,
        W_minus=w_minus,
        alpha_threshold=(w_minus * 2.0 * np.pi + 2.0) / (2.0 * np.pi),
        coarse_threshold=None if K is None else (2.0 * r_bar + K + 2.0) / (2.0 * np.pi),
        periodicity_defect=abs(shifted - samples[0]),
    )
