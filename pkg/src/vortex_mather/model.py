"""
Perturbed point-vortex field: Cartesian form, regularized form, and the
coordinate change between them.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from vortex_mather.errors import DomainError, SingularityError
from vortex_mather.schemas import Perturbation

logger = logging.getLogger(__name__)

# Closer than this to the vortex the Cartesian field is treated as singular
SINGULAR_RADIUS_SQ = 1e-300


def to_regularized(x: float, y: float) -> tuple[float, float]:
    """(x, y) -> (r, theta) with r = 1/(2(x^2+y^2)) and clockwise theta in (-pi, pi]."""
    rho_sq = x * x + y * y
    if rho_sq <= SINGULAR_RADIUS_SQ:
        raise SingularityError(f"point ({x}, {y}) is the vortex position")
    theta = -float(np.arctan2(y, x))
    if theta <= -np.pi:
        theta = np.pi
    return 1.0 / (2.0 * rho_sq), theta


def from_regularized(r: float, theta: float) -> tuple[float, float]:
    """(r, theta) -> (x, y) = (cos theta, -sin theta) / sqrt(2r)."""
    if r <= 0:
        raise DomainError(f"r must be positive, got {r}")
    scale = 1.0 / np.sqrt(2.0 * r)
    return float(np.cos(theta) * scale), float(-np.sin(theta) * scale)


def _falling(n: np.ndarray, a: int) -> np.ndarray:
    """n (n-1) ... (n-a+1), zero once a exceeds n."""
    out = np.ones_like(n, dtype=float)
    for k in range(a):
        out = out * (n - k)
    return out


class Composed(NamedTuple):
    """u = p o phi and its partials in (r, theta) up to second order."""

    u: np.ndarray
    u_r: np.ndarray
    u_theta: np.ndarray
    u_rr: np.ndarray
    u_rtheta: np.ndarray
    u_thetatheta: np.ndarray


class C1Bound(NamedTuple):
    c1: float
    a_star: float


@dataclass(frozen=True)
class C1Grid:
    """Sample grid for the sup of |F| + 2r|G|.

    r_min / r_max default to 1.001 r* and 100 r*.
    """

    t_samples: int = 32
    theta_samples: int = 256
    r_samples: int = 8
    r_min: float | None = None
    r_max: float | None = None


class VortexModel:
    """Vector fields of the vortex flow for one fixed perturbation."""

    def __init__(self, perturbation: Perturbation):
        self.perturbation = perturbation
        self.r_star = perturbation.r_star
        self._zero = perturbation.is_zero()

        terms = perturbation.all_terms
        self._n_leading = len(perturbation.leading_terms)
        self._i = np.array([t.i for t in terms], dtype=int)
        self._j = np.array([t.j for t in terms], dtype=int)
        n_cos = max((len(t.cos_terms) for t in terms), default=0)
        n_sin = max((len(t.sin_terms) for t in terms), default=0)
        self._a0 = np.array([t.a0 for t in terms], dtype=float)
        self._cos = np.zeros((len(terms), n_cos))
        self._sin = np.zeros((len(terms), n_sin))
        for k, term in enumerate(terms):
            self._cos[k, :len(term.cos_terms)] = term.cos_terms
            self._sin[k, :len(term.sin_terms)] = term.sin_terms
        self._scalar_terms = [(t.i, t.j, t.a0, tuple(t.cos_terms), tuple(t.sin_terms)) for t in terms]

    @property
    def epsilon(self) -> float:
        return self.perturbation.epsilon

    @cached_property
    def a_star(self) -> float:
        bound = self.bound_constant_C1()
        logger.info("C1 = %.6g, a* = %.6g (r* = %.6g)", bound.c1, bound.a_star, self.r_star)
        return bound.a_star

    # ── perturbation evaluation ──────────────────────────────────────

    def _coefficients(self, t: float) -> np.ndarray:
        values = self._a0.copy()
        if self._cos.shape[1]:
            m = np.arange(1, self._cos.shape[1] + 1)
            values += self._cos @ np.cos(2.0 * np.pi * m * t)
        if self._sin.shape[1]:
            m = np.arange(1, self._sin.shape[1] + 1)
            values += self._sin @ np.sin(2.0 * np.pi * m * t)
        return values

    def _select(self, part: str) -> slice:
        if part == "full":
            return slice(None)
        if part == "leading":
            return slice(0, self._n_leading)
        if part == "remainder":
            return slice(self._n_leading, None)
        raise ValueError(f"unknown perturbation part: {part}")

    def _tensor(self, t: float, x, y, order: int, part: str = "full") -> np.ndarray:
        """D[a, b] = d^a/dx^a d^b/dy^b p for a + b <= order (zero elsewhere).

        x and y may be arrays; trailing axes of D follow their broadcast shape.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        tensor = np.zeros((order + 1, order + 1) + shape)
        sel = self._select(part)
        i, j = self._i[sel], self._j[sel]
        if self._zero or i.size == 0:
            return tensor

        coeffs = self._coefficients(t)[sel]
        xs, ys = x[..., None], y[..., None]
        for a in range(order + 1):
            x_part = coeffs * _falling(i, a) * xs ** np.maximum(i - a, 0)
            for b in range(order + 1 - a):
                tensor[a, b] = np.sum(x_part * _falling(j, b) * ys ** np.maximum(j - b, 0), axis=-1)
        return tensor

    def eval_perturbation(self, t: float, x: float, y: float, order: int = 0) -> np.ndarray:
        """Spatial partials of p at (t, x, y).

        Returns:
            (order+1) x (order+1) array D with D[a, b] = d^{a+b} p / dx^a dy^b
            for a + b <= order; entries with a + b > order are zero.

        Raises:
            DomainError: If (x, y) is outside the epsilon-disk.
            ValueError: If order is not in 0..3.
        """
        if not 0 <= order <= 3:
            raise ValueError(f"order must be in 0..3, got {order}")
        if x * x + y * y >= self.epsilon ** 2:
            raise DomainError(f"({x}, {y}) lies outside the disk of radius {self.epsilon}")
        return self._tensor(t, x, y, order)

    def order_scaling(self, radii, t_samples: int = 16, theta_samples: int = 64) -> np.ndarray:
        """sup of (|p_x| + |p_y|) / (|x|^3 + |y|^3) on each circle of the given radii."""
        ts = np.linspace(0.0, 1.0, t_samples, endpoint=False)
        angles = np.linspace(0.0, 2.0 * np.pi, theta_samples, endpoint=False)
        sups = []
        for rho in radii:
            if not 0 < rho < self.epsilon:
                raise DomainError(f"radius {rho} not inside (0, {self.epsilon})")
            x, y = rho * np.cos(angles), rho * np.sin(angles)
            denom = np.abs(x) ** 3 + np.abs(y) ** 3
            worst = 0.0
            for t in ts:
                d = self._tensor(t, x, y, 1)
                worst = max(worst, float(np.max((np.abs(d[1, 0]) + np.abs(d[0, 1])) / denom)))
            sups.append(worst)
        return np.array(sups)

    # ── fields ────────────────────────────────────────────────────────

    def cartesian_field(self, t: float, x: float, y: float) -> tuple[float, float]:
        """(xdot, ydot) = (d_y Psi, -d_x Psi) with Psi = ln(x^2+y^2)/2 + p."""
        rho_sq = x * x + y * y
        if rho_sq <= SINGULAR_RADIUS_SQ:
            raise SingularityError(f"cartesian field evaluated at the vortex ({x}, {y})")
        if rho_sq >= self.epsilon ** 2:
            raise DomainError(f"({x}, {y}) lies outside the disk of radius {self.epsilon}")
        d = self._tensor(t, x, y, 1)
        return float(y / rho_sq + d[0, 1]), float(-(x / rho_sq + d[1, 0]))

    def _check_r(self, r) -> None:
        if np.any(np.asarray(r) <= self.r_star):
            raise DomainError(f"r = {r} is not above r* = {self.r_star}")

    def composed_derivatives(self, t: float, r, theta, part: str = "full") -> Composed:
        """Partials of u(r, theta) = p(t, cos theta / sqrt(2r), -sin theta / sqrt(2r)).

        Chain rule through x_theta = y, y_theta = -x, x_r = -x/(2r), y_r = -y/(2r).
        """
        r = np.asarray(r, dtype=float)
        x = np.cos(theta) / np.sqrt(2.0 * r)
        y = -np.sin(theta) / np.sqrt(2.0 * r)
        d = self._tensor(t, x, y, 2, part)
        p, px, py = d[0, 0], d[1, 0], d[0, 1]
        pxx, pxy, pyy = d[2, 0], d[1, 1], d[0, 2]

        radial = px * x + py * y
        u_theta = px * y - py * x
        u_r = -radial / (2.0 * r)
        u_thetatheta = pxx * y * y - 2.0 * pxy * x * y + pyy * x * x - radial
        u_rtheta = ((pyy - pxx) * x * y + pxy * (x * x - y * y) - u_theta) / (2.0 * r)
        u_rr = (pxx * x * x + 2.0 * pxy * x * y + pyy * y * y + 3.0 * radial) / (4.0 * r * r)
        return Composed(p, u_r, u_theta, u_rr, u_rtheta, u_thetatheta)

    def composed_scalar(self, t: float, r: float, theta: float) -> Composed:
        """Float-only composed_derivatives for the full perturbation; used inside the integrator."""
        if self._zero:
            return Composed(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        scale = 1.0 / math.sqrt(2.0 * r)
        x = math.cos(theta) * scale
        y = -math.sin(theta) * scale
        omega = 2.0 * math.pi * t

        p = px = py = pxx = pxy = pyy = 0.0
        for i, j, a0, cos_terms, sin_terms in self._scalar_terms:
            c = a0
            for m, a in enumerate(cos_terms, start=1):
                c += a * math.cos(m * omega)
            for m, b in enumerate(sin_terms, start=1):
                c += b * math.sin(m * omega)
            if c == 0.0:
                continue
            xi, yj = x ** i, y ** j
            xi1 = i * x ** (i - 1) if i >= 1 else 0.0
            yj1 = j * y ** (j - 1) if j >= 1 else 0.0
            xi2 = i * (i - 1) * x ** (i - 2) if i >= 2 else 0.0
            yj2 = j * (j - 1) * y ** (j - 2) if j >= 2 else 0.0
            p += c * xi * yj
            px += c * xi1 * yj
            py += c * xi * yj1
            pxx += c * xi2 * yj
            pxy += c * xi1 * yj1
            pyy += c * xi * yj2

        radial = px * x + py * y
        u_theta = px * y - py * x
        return Composed(
            p,
            -radial / (2.0 * r),
            u_theta,
            (pxx * x * x + 2.0 * pxy * x * y + pyy * y * y + 3.0 * radial) / (4.0 * r * r),
            ((pyy - pxx) * x * y + pxy * (x * x - y * y) - u_theta) / (2.0 * r),
            pxx * y * y - 2.0 * pxy * x * y + pyy * x * x - radial,
        )

    def regularized_field(self, t: float, r: float, theta: float) -> tuple[float, float]:
        """(F, G) with rdot = F and thetadot = 2r + G.

        Raises:
            DomainError: If r <= r*.
        """
        self._check_r(r)
        c = self.composed_derivatives(t, r, theta)
        return float(4.0 * r * r * c.u_theta), float(-4.0 * r * r * c.u_r)

    def conjugacy_residual(self, t: float, r: float, theta: float) -> float:
        """Gap between (F, 2r + G) and the Cartesian field pushed forward through phi^-1.

        Scaled by 1 + 2r, the size of thetadot.
        """
        x, y = from_regularized(r, theta)
        xdot, ydot = self.cartesian_field(t, x, y)
        rho_sq = x * x + y * y
        r_dot = -(x * xdot + y * ydot) / (rho_sq * rho_sq)
        theta_dot = -(x * ydot - y * xdot) / rho_sq
        f_val, g_val = self.regularized_field(t, r, theta)
        return max(abs(r_dot - f_val), abs(theta_dot - 2.0 * r - g_val)) / (1.0 + 2.0 * r)

    def field_jacobian(self, t: float, r: float, theta: float) -> np.ndarray:
        """d(F, 2r + G)/d(r, theta); equals [[0, 0], [2, 0]] for p = 0."""
        self._check_r(r)
        c = self.composed_derivatives(t, r, theta)
        return self._jacobian(r, c)

    @staticmethod
    def _jacobian(r: float, c: Composed) -> np.ndarray:
        r2 = 4.0 * r * r
        return np.array([
            [8.0 * r * c.u_theta + r2 * c.u_rtheta, r2 * c.u_thetatheta],
            [2.0 - 8.0 * r * c.u_r - r2 * c.u_rr, -r2 * c.u_rtheta],
        ], dtype=float)

    def angular_leading(self, t, theta) -> tuple[np.ndarray, np.ndarray]:
        """d/dtheta and d^2/dtheta^2 of T4(t, cos theta, -sin theta).

        T4 is homogeneous of degree 4, so 4r^2 times its composition with
        phi does not depend on r. t and theta broadcast against each other.
        """
        t, theta = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(theta, dtype=float))
        x, y = np.cos(theta), -np.sin(theta)
        first = np.zeros(t.shape)
        second = np.zeros(t.shape)
        for term in self.perturbation.leading_terms:
            i, j = np.array(term.i), np.array(term.j)
            coeff = term.value(t)
            px = _falling(i, 1) * x ** max(term.i - 1, 0) * y ** term.j
            py = _falling(j, 1) * x ** term.i * y ** max(term.j - 1, 0)
            pxx = _falling(i, 2) * x ** max(term.i - 2, 0) * y ** term.j
            pxy = _falling(i, 1) * _falling(j, 1) * x ** max(term.i - 1, 0) * y ** max(term.j - 1, 0)
            pyy = _falling(j, 2) * x ** term.i * y ** max(term.j - 2, 0)
            first = first + coeff * (px * y - py * x)
            second = second + coeff * (pxx * y * y - 2.0 * pxy * x * y + pyy * x * x - px * x - py * y)
        return first, second

    def bound_constant_C1(self, grid: C1Grid | None = None) -> C1Bound:
        """Empirical sup of |F| + 2r|G| over the grid, with a* = r* + C1."""
        grid = grid or C1Grid()
        r_min = grid.r_min if grid.r_min is not None else 1.001 * self.r_star
        r_max = grid.r_max if grid.r_max is not None else 100.0 * self.r_star
        self._check_r(r_min)
        if self._zero:
            return C1Bound(0.0, self.r_star)

        ts = np.linspace(0.0, 1.0, grid.t_samples, endpoint=False)
        angles = np.linspace(0.0, 2.0 * np.pi, grid.theta_samples, endpoint=False)
        radii = np.geomspace(r_min, r_max, grid.r_samples) if grid.r_samples > 1 else np.array([r_min])
        c1 = 0.0
        for t in ts:
            for r in radii:
                c = self.composed_derivatives(t, r, angles)
                f_val = 4.0 * r * r * c.u_theta
                g_val = -4.0 * r * r * c.u_r
                c1 = max(c1, float(np.max(np.abs(f_val) + 2.0 * r * np.abs(g_val))))
        return C1Bound(c1, self.r_star + c1)
