"""
Time-1 flow of the regularized vortex system, integrated together with its
variational equation and the action integrand.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from vortex_mather.errors import DomainError, DomainExit, SingularityError, StepFailure
from vortex_mather.model import VortexModel, to_regularized
from vortex_mather.schemas import IntegratorSettings

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["t", "r", "theta", "y11", "y12", "y21", "y22", "action"]

# Cartesian runs stop if the radius shrinks below this fraction of its start
COLLAPSE_FRACTION = 1e-6


def symplectic_weight(r):
    """f(r) = -1/(4r); the area form is f'(r) dr ^ dtheta."""
    return -1.0 / (4.0 * r)


def symplectic_weight_prime(r):
    return 1.0 / (4.0 * r * r)


def symplectic_weight_inverse(value):
    return -1.0 / (4.0 * value)


@dataclass
class AugmentedState:
    r: float
    theta: float
    Y: np.ndarray = field(default_factory=lambda: np.eye(2))
    action: float = 0.0

    @classmethod
    def initial(cls, r0: float, theta0: float) -> "AugmentedState":
        return cls(r=float(r0), theta=float(theta0))

    @classmethod
    def from_vector(cls, z: np.ndarray) -> "AugmentedState":
        return cls(r=float(z[0]), theta=float(z[1]), Y=np.array(z[2:6], dtype=float).reshape(2, 2),
                   action=float(z[6]))

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.r, self.theta], np.asarray(self.Y, dtype=float).ravel(), [self.action]))


@dataclass
class PoincareResult:
    """Image of (r0, theta0) under the time-1 map, with monodromy and action."""

    r0: float
    theta0: float
    r1: float
    theta1: float
    Y1: np.ndarray
    S: float
    domain_exit: bool = False

    @property
    def dG_dr0(self) -> float:
        """d theta1 / d r0, the lower-left monodromy entry."""
        return float(self.Y1[1, 0])

    @classmethod
    def missing(cls, r0: float, theta0: float) -> "PoincareResult":
        nan = float("nan")
        return cls(r0, theta0, nan, nan, np.full((2, 2), nan), nan, domain_exit=True)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def theta(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final(self) -> AugmentedState:
        return AugmentedState.from_vector(self.states[-1])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(np.column_stack([self.t, self.states]), columns=TRAJECTORY_COLUMNS)


class PoincareFlow:
    """Integrator for (r, theta, Y, action) under one perturbation."""

    def __init__(self, model: VortexModel, settings: IntegratorSettings | None = None):
        self.model = model
        self.settings = settings or IntegratorSettings()

    @property
    def r_star(self) -> float:
        return self.model.r_star

    @property
    def a_star(self) -> float:
        return self.model.a_star

    def with_tolerance(self, rtol: float, atol: float | None = None) -> "PoincareFlow":
        settings = self.settings.model_copy(update={"rtol": rtol, "atol": atol or min(self.settings.atol, rtol * 1e-2)})
        return PoincareFlow(self.model, settings)

    def _rhs(self, t: float, z: np.ndarray) -> np.ndarray:
        r, theta = float(z[0]), float(z[1])
        c = self.model.composed_scalar(t, r, theta)
        r4 = 4.0 * r * r
        j11 = 8.0 * r * c.u_theta + r4 * c.u_rtheta
        j12 = r4 * c.u_thetatheta
        j21 = 2.0 - 8.0 * r * c.u_r - r4 * c.u_rr
        j22 = -r4 * c.u_rtheta
        y11, y12, y21, y22 = z[2], z[3], z[4], z[5]
        # r dH/dr + H with H = -ln(2r)/2 + u
        integrand = -0.5 + r * c.u_r - 0.5 * math.log(2.0 * r) + c.u
        return np.array([
            r4 * c.u_theta,
            2.0 * r - r4 * c.u_r,
            j11 * y11 + j12 * y21, j11 * y12 + j12 * y22,
            j21 * y11 + j22 * y21, j21 * y12 + j22 * y22,
            integrand,
        ])

    def integrate(self, state0: AugmentedState, t0: float, t1: float, dense: bool = False,
                  t_eval=None, require_a_star: bool = True) -> Trajectory:
        """Integrate the augmented system from t0 to t1.

        With dense=True every accepted step is returned; t_eval picks explicit
        sample times instead. Otherwise only the endpoints are kept.

        Raises:
            DomainExit: If r0 is not above a* (or r* when require_a_star is
                False), or if r(t) reaches r* during the run.
            StepFailure: If the integrator cannot make progress.
        """
        floor = self.a_star if require_a_star else self.r_star
        if state0.r <= floor:
            raise DomainExit(f"r0 = {state0.r} is not above {'a*' if require_a_star else 'r*'} = {floor:.6g}", t=t0)
        if t1 <= t0:
            raise ValueError(f"t1 must exceed t0 (got {t0}, {t1})")

        r_star = self.r_star

        def leaves_domain(t, z):
            return z[0] - r_star

        leaves_domain.terminal = True
        leaves_domain.direction = -1

        sol = solve_ivp(
            self._rhs,
            (t0, t1),
            state0.as_vector(),
            method="RK45",
            rtol=self.settings.rtol,
            atol=self.settings.atol,
            max_step=self.settings.max_step,
            t_eval=t_eval,
            events=leaves_domain,
        )
        if sol.status == 1:
            t_exit = float(sol.t_events[0][0])
            raise DomainExit(f"trajectory from r0 = {state0.r} reached r* at t = {t_exit:.6g}", t=t_exit)
        if sol.status != 0:
            raise StepFailure(f"integration from r0 = {state0.r}, theta0 = {state0.theta} failed: {sol.message}")

        states = sol.y.T
        times = sol.t
        if not dense and t_eval is None:
            times, states = times[[0, -1]], states[[0, -1]]
        return Trajectory(t=np.asarray(times), states=np.asarray(states))

    def poincare(self, r0: float, theta0: float) -> PoincareResult:
        """P(r0, theta0) = (r(1), theta(1)) with Y(1) and the action S."""
        final = self.integrate(AugmentedState.initial(r0, theta0), 0.0, 1.0).final
        return PoincareResult(r0=r0, theta0=theta0, r1=final.r, theta1=final.theta, Y1=final.Y, S=final.action)

    def growth_deviation(self, trajectory: Trajectory) -> float:
        """sup over samples of |r - r0| + |theta - theta0 - 2 r0 (t - t0)|."""
        r0, theta0, t0 = trajectory.r[0], trajectory.theta[0], trajectory.t[0]
        drift = np.abs(trajectory.r - r0) + np.abs(trajectory.theta - theta0 - 2.0 * r0 * (trajectory.t - t0))
        return float(np.max(drift))

    def angular_velocity(self, trajectory: Trajectory) -> np.ndarray:
        """thetadot = 2r + G at every sample."""
        rates = []
        for t, r, theta in zip(trajectory.t, trajectory.r, trajectory.theta):
            _, g = self.model.regularized_field(t, r, theta)
            rates.append(2.0 * r + g)
        return np.array(rates)

    def conjugacy_check(self, x0: float, y0: float, tol: float = 1e-10, n_samples: int = 11) -> float:
        """Integrate the Cartesian and regularized systems over [0, 1] and compare.

        Returns:
            Max over sample times of |r_c - r| and the wrapped angle difference,
            with the Cartesian solution mapped through to_regularized.

        Raises:
            DomainError: If the regularized start is not above a*.
            SingularityError: If the Cartesian solution collapses onto the vortex.
        """
        r0, theta0 = to_regularized(x0, y0)
        if r0 <= self.a_star:
            raise DomainError(f"start ({x0}, {y0}) maps to r0 = {r0} which is not above a* = {self.a_star:.6g}")

        ts = np.linspace(0.0, 1.0, n_samples)
        rho0_sq = x0 * x0 + y0 * y0
        eps_sq = self.model.epsilon ** 2

        def collapse(t, z):
            return z[0] * z[0] + z[1] * z[1] - (COLLAPSE_FRACTION ** 2) * rho0_sq

        def escape(t, z):
            return eps_sq - z[0] * z[0] - z[1] * z[1]

        collapse.terminal = True
        escape.terminal = True

        sol = solve_ivp(
            lambda t, z: self.model.cartesian_field(t, z[0], z[1]),
            (0.0, 1.0),
            [x0, y0],
            method="RK45",
            rtol=tol,
            atol=tol * np.sqrt(rho0_sq) * 1e-2,
            max_step=self.settings.max_step,
            t_eval=ts,
            events=[collapse, escape],
        )
        if sol.status == 1:
            if sol.t_events[0].size:
                raise SingularityError(f"cartesian trajectory from ({x0}, {y0}) collapsed onto the vortex")
            raise DomainExit(f"cartesian trajectory from ({x0}, {y0}) left the epsilon-disk",
                             t=float(sol.t_events[1][0]))
        if sol.status != 0:
            raise StepFailure(f"cartesian integration from ({x0}, {y0}) failed: {sol.message}")

        regular = self.with_tolerance(tol).integrate(AugmentedState.initial(r0, theta0), 0.0, 1.0, t_eval=ts)

        worst = 0.0
        for k in range(ts.size):
            r_c, theta_c = to_regularized(sol.y[0, k], sol.y[1, k])
            d_theta = np.angle(np.exp(1j * (theta_c - regular.theta[k])))
            worst = max(worst, abs(r_c - regular.r[k]), abs(float(d_theta)))
        logger.debug("conjugacy discrepancy from (%g, %g): %.3e", x0, y0, worst)
        return worst
