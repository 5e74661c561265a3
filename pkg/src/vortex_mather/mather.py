"""
Periodic minimal orbits of the Poincare map from the discrete Euler-Lagrange
equations, rotation numbers, and rational-approximant Mather sets.
"""

import logging
import warnings
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from vortex_mather.errors import (
    ClampWarning,
    DepthError,
    DomainExit,
    MonotonicityViolation,
    NoConvergence,
    WindowError,
)
from vortex_mather.flow import AugmentedState, symplectic_weight_inverse
from vortex_mather.generating import GeneratingFunction, GeneratingSample, domain_contains
from vortex_mather.poincare import FrequencyWindow
from vortex_mather.schemas import SolverSettings

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

# Residual below which a continued-fraction expansion is taken to terminate
CF_TERMINATION = 1e-12
# Translates closer than this count as equal when testing comparability
COMPARABILITY_TOL = 1e-9
MAX_LINE_SEARCH = 30
MAX_SADDLE_KICKS = 3


def convergents(alpha: float, depth: int) -> list[tuple[int, int]]:
    """First `depth` continued-fraction convergents s/q of alpha, skipping floor(alpha)/1.

    Raises:
        ValueError: If the expansion terminates before `depth` convergents.
    """
    if depth < 1:
        raise ValueError(f"depth must be positive, got {depth}")
    h_prev, h_prev2 = 1, 0
    k_prev, k_prev2 = 0, 1
    value = float(alpha)
    result = []
    for n in range(depth + 1):
        a = int(np.floor(value))
        h, k = a * h_prev + h_prev2, a * k_prev + k_prev2
        if n > 0:
            result.append((h, k))
        h_prev2, h_prev, k_prev2, k_prev = h_prev, h, k_prev, k
        frac = value - a
        if n < depth and frac < CF_TERMINATION:
            raise ValueError(f"alpha = {alpha} is rational ({h}/{k}) within depth {depth}")
        value = 1.0 / frac if frac else np.inf
    return result


def comparable(x: np.ndarray, s: int, q: int, s_shift: int, q_shift: int, tol: float = COMPARABILITY_TOL) -> bool:
    """Is n -> x_{n+q_shift} + 2 pi s_shift entirely above, below, or equal to x_n?

    `x` holds one period x_0..x_{q-1}; later entries follow x_{n+q} = x_n + 2 pi s.
    """
    n = np.arange(q)
    idx = n + q_shift
    shifted = x[idx % q] + TWO_PI * s * (idx // q) + TWO_PI * s_shift
    diff = shifted - x[:q]
    return bool(np.all(diff > tol) or np.all(diff < -tol) or np.all(np.abs(diff) <= tol))


def largest_gap(points) -> float:
    """Largest spacing of the points on the circle R / 2 pi Z."""
    circle = np.sort(np.mod(np.asarray(points, dtype=float), TWO_PI))
    gaps = np.diff(np.concatenate((circle, [circle[0] + TWO_PI])))
    return float(np.max(gaps))


@dataclass
class Orbit:
    """(s, q)-periodic configuration: x has q+1 lifted entries, r has q."""

    s: int
    q: int
    x: np.ndarray
    r: np.ndarray
    action: float
    el_residual: float
    map_residual: float = float("nan")
    iterations: int = 0
    clamped: int = 0
    gradient_steps: int = 0

    @property
    def rotation(self) -> float:
        return self.s / self.q

    def to_archive(self) -> dict:
        return {
            "s": self.s,
            "q": self.q,
            "x": self.x.tolist(),
            "r": self.r.tolist(),
            "action": self.action,
            "el_residual": self.el_residual,
            "map_residual": self.map_residual,
        }


@dataclass
class OrbitReport:
    el: float
    map: float
    translation: float
    max_deviation: float
    deviation_ok: bool
    comparability: bool
    incomparable: list[tuple[int, int]] = field(default_factory=list)
    increasing: bool = True


@dataclass
class LineSearch:
    x: np.ndarray
    pairs: list[GeneratingSample] | None
    grad: np.ndarray
    action: float
    clamped: int = 0


@dataclass
class RotationEstimate:
    alpha: float
    error: float
    iterates: np.ndarray


@dataclass
class HullSamples:
    """phi and eta sampled at xi_m = 2 pi m / q, m = 0..q-1."""

    alpha: float
    s: int
    q: int
    xi: np.ndarray
    phi: np.ndarray
    eta: np.ndarray
    violations: int
    max_jump: float

    def shifted_index(self, m: int) -> tuple[int, int]:
        """Sample index of xi_m + 2 pi s/q and the number of 2 pi wraps."""
        total = m + self.s
        return total % self.q, total // self.q


@dataclass
class MatherSet:
    alpha: float
    convergents: list[tuple[int, int]]
    orbits: list[Orbit]
    hull: HullSamples
    gaps: list[float]
    largest_gap: float
    classification: str

    @property
    def hull_phi(self) -> np.ndarray:
        return self.hull.phi

    @property
    def hull_eta(self) -> np.ndarray:
        return self.hull.eta

    def to_archive(self) -> dict:
        return {
            "alpha": self.alpha,
            "classification": self.classification,
            "largest_gap": self.largest_gap,
            "convergents": [
                {"s": s, "q": q, "gap": gap, "orbit": orbit.to_archive()}
                for (s, q), gap, orbit in zip(self.convergents, self.gaps, self.orbits)
            ],
            "hull": {
                "xi": self.hull.xi.tolist(),
                "phi": self.hull.phi.tolist(),
                "eta": self.hull.eta.tolist(),
                "violations": self.hull.violations,
                "max_jump": self.hull.max_jump,
            },
        }


@dataclass
class SolutionFamilyReport:
    shift_defect: float
    time_defect: float
    min_thetadot: float
    r_min: float
    r_max: float
    clockwise: bool
    passed: bool


def classify(gaps: list[float], denominators: list[int]) -> str:
    """curve / cantor-candidate / inconclusive from the largest-gap sequence.

    The curve threshold at each depth is 4 pi / q, twice the spacing 2 pi / q of
    an orbit on an invariant circle. The factor 2 is applied once; the threshold
    is not 8 pi / q.
    """
    threshold = 2.0 * TWO_PI / denominators[-1]
    if gaps[-1] < threshold:
        return "curve"
    if len(gaps) >= 2:
        previous_threshold = 2.0 * TWO_PI / denominators[-2]
        stable = abs(gaps[-1] - gaps[-2]) <= 0.2 * gaps[-1]
        if gaps[-2] >= previous_threshold and stable:
            return "cantor-candidate"
    return "inconclusive"


class MatherSolver:
    """Solves the periodic Euler-Lagrange system sum h(x_n, x_{n+1}) -> critical."""

    def __init__(self, generating: GeneratingFunction, window: FrequencyWindow | None = None,
                 settings: SolverSettings | None = None):
        self.generating = generating
        self.flow = generating.flow
        self.window = window if window is not None else generating.window
        self.settings = settings or generating.settings

    # ── Euler-Lagrange system ────────────────────────────────────────

    def _pairs(self, x: np.ndarray, s: int, use_cache: bool = True) -> list[GeneratingSample]:
        q = x.size
        nxt = np.append(x[1:], x[0] + TWO_PI * s)
        return [self.generating.h_eval(x[k], nxt[k], use_cache=use_cache) for k in range(q)]

    @staticmethod
    def _gradient(pairs: list[GeneratingSample]) -> np.ndarray:
        # pairs[-1] closes the cycle: h(x_{q-1} - 2 pi s, x_0) has the same partials
        return np.array([pairs[n].d1h + pairs[n - 1].d2h for n in range(len(pairs))])

    def _diagonals(self, pair: GeneratingSample) -> tuple[float, float]:
        if self.settings.hessian == "analytic":
            return pair.d11h, pair.d22h
        step = self.settings.fd_step
        plus = self.generating.h_eval(pair.x + step, pair.x1)
        minus = self.generating.h_eval(pair.x - step, pair.x1)
        d11 = (plus.d1h - minus.d1h) / (2 * step)
        plus = self.generating.h_eval(pair.x, pair.x1 + step)
        minus = self.generating.h_eval(pair.x, pair.x1 - step)
        d22 = (plus.d2h - minus.d2h) / (2 * step)
        return d11, d22

    def _hessian(self, pairs: list[GeneratingSample]) -> np.ndarray:
        """Cyclic tridiagonal Hessian of the action; pair k couples x_k and x_{k+1 mod q}."""
        q = len(pairs)
        hess = np.zeros((q, q))
        for k, pair in enumerate(pairs):
            i, j = k, (k + 1) % q
            d11, d22 = self._diagonals(pair)
            hess[i, i] += d11
            hess[j, j] += d22
            hess[i, j] += pair.d12h
            hess[j, i] += pair.d12h
        return hess

    def _inside(self, x: np.ndarray, s: int) -> bool:
        if self.window is None:
            return True
        nxt = np.append(x[1:], x[0] + TWO_PI * s)
        return all(domain_contains(a, b, self.window, self.generating.r_cap, self.generating.margin)
                   for a, b in zip(x, nxt))

    def _newton_direction(self, hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Newton step with eigenvalues replaced by their magnitudes.

        The cyclic tridiagonal Hessian goes through a dense eigh, O(q^3) per step.
        Near-null directions (the translation mode) are cut off rather than inverted.
        """
        values, vectors = np.linalg.eigh(hess)
        scale = np.max(np.abs(values)) if values.size else 0.0
        cutoff = 1e-9 * scale
        coeff = vectors.T @ grad
        keep = np.abs(values) > cutoff
        step = np.zeros_like(grad)
        if np.any(keep):
            step = -vectors[:, keep] @ (coeff[keep] / np.abs(values[keep]))
        return step

    @staticmethod
    def _descent_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """-grad scaled by the magnitude of the Hessian diagonal."""
        diag = np.abs(np.diag(hess))
        floor = max(float(np.max(diag)), 1e-12) * 1e-6
        return -grad / np.maximum(diag, floor)

    def _line_search(self, x: np.ndarray, s: int, grad: np.ndarray, action: float,
                     direction: np.ndarray) -> LineSearch:
        """Backtrack along `direction` until the action or the gradient drops."""
        step = 1.0
        clamped = 0
        norm = float(np.linalg.norm(grad))
        slope = float(grad @ direction)
        for _ in range(MAX_LINE_SEARCH):
            trial = x + step * direction
            if not self._inside(trial, s):
                clamped += 1
                step *= self.settings.damping
                continue
            trial_pairs = self._pairs(trial, s)
            trial_grad = self._gradient(trial_pairs)
            trial_action = sum(p.h for p in trial_pairs)
            armijo = trial_action <= action + 1e-4 * step * slope
            smaller = np.linalg.norm(trial_grad) < (1.0 - 1e-4 * step) * norm
            if armijo or (smaller and trial_action <= action + 1e-11 * (1.0 + abs(action))):
                return LineSearch(x=trial, pairs=trial_pairs, grad=trial_grad, action=trial_action, clamped=clamped)
            step *= self.settings.damping
        return LineSearch(x=x, pairs=None, grad=grad, action=action, clamped=clamped)

    def periodic_orbit(self, s: int, q: int, x_init=None, x0: float = 0.0) -> Orbit:
        """(s, q)-periodic solution of d1h(x_n, x_{n+1}) + d2h(x_{n-1}, x_n) = 0.

        Each step is a saddle-free Newton step with backtracking. When the
        backtracking fails the step is retried along the diagonally scaled
        negative gradient before giving up.

        Raises:
            WindowError: If s/q is not above the window threshold.
            NoConvergence: With the best configuration attached as an Orbit.
        """
        if q < 1 or gcd(s, q) != 1:
            raise ValueError(f"need q >= 1 and gcd(s, q) = 1, got s={s}, q={q}")
        if self.window is not None and not self.window.admits(s / q):
            raise WindowError(f"rotation {s}/{q} = {s / q:.6g} is not above the threshold "
                              f"{self.window.alpha_threshold:.6g}")

        if x_init is None:
            x = x0 + TWO_PI * s * np.arange(q) / q
        else:
            x = np.asarray(x_init, dtype=float)[:q].copy()
            if x.size != q:
                raise ValueError(f"x_init needs at least {q} entries")

        tol = self.settings.newton_tol
        clamped = 0
        kicks = 0
        gradient_steps = 0
        pairs = self._pairs(x, s)
        grad = self._gradient(pairs)
        action = sum(p.h for p in pairs)

        for iteration in range(self.settings.max_iter):
            residual = float(np.max(np.abs(grad)))
            logger.debug("(%d,%d) iteration %d: EL residual %.3e, action %.15g", s, q, iteration, residual, action)
            hess = self._hessian(pairs)

            if residual < tol:
                values, vectors = np.linalg.eigh(hess)
                if q > 1 and values[0] < -1e-9 * np.max(np.abs(values)) and kicks < MAX_SADDLE_KICKS:
                    # Critical but not minimal: push off along the unstable direction
                    kicks += 1
                    logger.info("(%d,%d) converged to a saddle; perturbing (kick %d)", s, q, kicks)
                    x = x + 0.25 * (TWO_PI / q) * vectors[:, 0]
                    pairs = self._pairs(x, s)
                    grad = self._gradient(pairs)
                    action = sum(p.h for p in pairs)
                    continue
                orbit = self._finish(s, q, x, pairs, residual, iteration, clamped)
                orbit.gradient_steps = gradient_steps
                return orbit

            direction = self._newton_direction(hess, grad)
            if not np.any(direction):
                direction = self._descent_direction(hess, grad)

            trial = self._line_search(x, s, grad, action, direction)
            clamped += trial.clamped
            if trial.pairs is None:
                logger.info("(%d,%d) Newton line search stalled at EL residual %.3e; trying gradient descent",
                            s, q, residual)
                trial = self._line_search(x, s, grad, action, self._descent_direction(hess, grad))
                clamped += trial.clamped
                gradient_steps += 1
            if trial.pairs is None:
                best = self._build(s, q, x, pairs, residual, iteration, clamped)
                raise NoConvergence(f"({s},{q}) line search stalled at EL residual {residual:.3e}", best=best)
            x, pairs, grad, action = trial.x, trial.pairs, trial.grad, trial.action

        if clamped:
            warnings.warn(f"({s},{q}) iterates left the domain B {clamped} times", ClampWarning)
        best = self._build(s, q, x, pairs, float(np.max(np.abs(grad))), self.settings.max_iter, clamped)
        raise NoConvergence(f"({s},{q}) not converged in {self.settings.max_iter} iterations", best=best)

    def _build(self, s, q, x, pairs, residual, iterations, clamped) -> Orbit:
        r = np.array([symplectic_weight_inverse(-p.d1h) for p in pairs])
        return Orbit(s=s, q=q, x=np.append(x, x[0] + TWO_PI * s), r=r, action=float(sum(p.h for p in pairs)),
                     el_residual=residual, iterations=iterations, clamped=clamped)

    def _finish(self, s, q, x, pairs, residual, iterations, clamped) -> Orbit:
        if clamped:
            warnings.warn(f"({s},{q}) iterates left the domain B {clamped} times", ClampWarning)
        orbit = self._build(s, q, x, pairs, residual, iterations, clamped)
        orbit.map_residual = self.map_residual(orbit)
        logger.info("(%d,%d) orbit: EL residual %.2e, map residual %.2e, %d iterations",
                    s, q, orbit.el_residual, orbit.map_residual, iterations)
        return orbit

    # ── residuals ────────────────────────────────────────────────────

    def map_residual(self, orbit: Orbit) -> float:
        """max_n of |P(r_n, x_n) - (r_{n+1}, x_{n+1})| with r_q = r_0."""
        worst = 0.0
        for n in range(orbit.q):
            image = self.flow.poincare(orbit.r[n], orbit.x[n])
            r_next = orbit.r[(n + 1) % orbit.q]
            worst = max(worst, abs(image.r1 - r_next), abs(image.theta1 - orbit.x[n + 1]))
        return worst

    def el_residual(self, orbit: Orbit) -> float:
        pairs = self._pairs(orbit.x[:orbit.q], orbit.s, use_cache=False)
        return float(np.max(np.abs(self._gradient(pairs))))

    def orbit_residuals(self, orbit: Orbit) -> OrbitReport:
        """Recompute every residual and ordering property of an orbit."""
        s, q = orbit.s, orbit.q
        x = orbit.x[:q]
        n = np.arange(q + 1)
        deviation = np.abs(orbit.x - orbit.x[0] - TWO_PI * n * s / q)

        incomparable = []
        for q_shift in range(1, q + 1):
            for s_shift in range(-abs(s), abs(s) + 1):
                if not comparable(x, s, q, s_shift, q_shift):
                    incomparable.append((s_shift, q_shift))

        return OrbitReport(
            el=self.el_residual(orbit),
            map=self.map_residual(orbit),
            translation=abs(orbit.x[q] - orbit.x[0] - TWO_PI * s),
            max_deviation=float(np.max(deviation)),
            deviation_ok=bool(np.all(deviation < TWO_PI)),
            comparability=not incomparable,
            incomparable=incomparable,
            increasing=bool(np.all(np.diff(orbit.x) > 0)) if s >= 1 else True,
        )

    def orbit_solution_periodicity(self, orbit: Orbit) -> float:
        """Defect of (r, theta)(t + q) = (r, theta)(t) + (0, 2 pi s) at t = 0."""
        r, theta = orbit.r[0], orbit.x[0]
        for _ in range(orbit.q):
            image = self.flow.poincare(r, theta)
            r, theta = image.r1, image.theta1
        return max(abs(r - orbit.r[0]), abs(theta - orbit.x[0] - TWO_PI * orbit.s))

    def pair_samples(self, orbit: Orbit) -> list[GeneratingSample]:
        """Generating function samples at the q consecutive pairs (x_n, x_{n+1})."""
        return self._pairs(orbit.x[:orbit.q], orbit.s)

    def action_stationarity(self, orbit: Orbit, delta: float = 1e-4) -> float:
        """Smallest change of the action when one x_n moves by +-delta.

        Negative values mean the configuration is not a local minimum.
        """
        x = orbit.x[:orbit.q]
        base = sum(p.h for p in self._pairs(x, orbit.s))
        worst = np.inf
        for n in range(orbit.q):
            for sign in (1.0, -1.0):
                moved = x.copy()
                moved[n] += sign * delta
                worst = min(worst, sum(p.h for p in self._pairs(moved, orbit.s)) - base)
        return float(worst)

    def translation_defect(self, orbit: Orbit) -> float:
        """Solve again from x_init + 2 pi and compare with the orbit shifted by 2 pi."""
        shifted = self.periodic_orbit(orbit.s, orbit.q, x_init=orbit.x[:orbit.q] + TWO_PI)
        return float(max(np.max(np.abs(shifted.x - orbit.x - TWO_PI)), np.max(np.abs(shifted.r - orbit.r))))

    def rotation_number(self, r0: float, theta0: float, n_iter: int) -> RotationEstimate:
        """Least-squares slope of x_n / 2 pi over the last half of n_iter iterates.

        Raises:
            DomainExit: If an iterate drops below the strip edge, with its index.
        """
        if n_iter < 2:
            raise ValueError(f"n_iter must be at least 2, got {n_iter}")
        floor = self.window.r_bar if self.window is not None else self.flow.a_star
        xs = np.empty(n_iter + 1)
        xs[0] = theta0
        r, theta = r0, theta0
        for n in range(1, n_iter + 1):
            if r <= floor:
                raise DomainExit(f"iterate {n - 1} at r = {r:.6g} left the strip (edge {floor:.6g})", index=n - 1)
            try:
                image = self.flow.poincare(r, theta)
            except DomainExit as e:
                raise DomainExit(str(e), t=e.t, index=n - 1) from e
            r, theta = image.r1, image.theta1
            xs[n] = theta

        start = n_iter // 2
        n = np.arange(start, n_iter + 1, dtype=float)
        tail = xs[start:] / TWO_PI
        (slope, intercept), residuals, *_ = np.polyfit(n, tail, 1, full=True)
        spread = float(np.sum((n - n.mean()) ** 2))
        dof = max(n.size - 2, 1)
        sigma = float(np.sqrt(residuals[0] / dof)) if residuals.size else 0.0
        return RotationEstimate(alpha=float(slope), error=sigma / np.sqrt(spread), iterates=xs)

    # ── Mather sets ──────────────────────────────────────────────────

    def hull_functions(self, ms_or_orbit, strict: bool = True) -> HullSamples:
        """phi, eta from the deepest orbit: phi(xi_m) = x_n - 2 pi k, eta(xi_m) = r_n.

        Raises:
            MonotonicityViolation: If strict and phi is not monotone (samples are not repaired).
        """
        orbit = ms_or_orbit.orbits[-1] if isinstance(ms_or_orbit, MatherSet) else ms_or_orbit
        s, q = orbit.s, orbit.q
        n = np.arange(q)
        m = (n * s) % q
        wraps = (n * s - m) // q
        order = np.argsort(m)
        xi = TWO_PI * m[order] / q
        phi = (orbit.x[:q] - TWO_PI * wraps)[order]
        eta = orbit.r[order]

        steps = np.diff(np.append(phi, phi[0] + TWO_PI))
        violations = int(np.count_nonzero(steps < 0))
        hull = HullSamples(alpha=s / q, s=s, q=q, xi=xi, phi=phi, eta=eta, violations=violations,
                           max_jump=float(np.max(steps)))
        logger.info("hull functions from (%d,%d): %d monotonicity violations, max phi step %.4g",
                    s, q, violations, hull.max_jump)
        if strict and violations:
            raise MonotonicityViolation(f"phi has {violations} decreasing steps", violations=violations)
        return hull

    def hull_relation_residual(self, hull: HullSamples) -> float:
        """max over samples of |P(eta(xi), phi(xi)) - (eta(xi + 2 pi alpha), phi(xi + 2 pi alpha))|."""
        worst = 0.0
        for k in range(hull.q):
            image = self.flow.poincare(hull.eta[k], hull.phi[k])
            target, wraps = hull.shifted_index(k)
            worst = max(worst, abs(image.r1 - hull.eta[target]),
                        abs(image.theta1 - hull.phi[target] - TWO_PI * wraps))
        return worst

    def mather_set(self, alpha: float, depth: int) -> MatherSet:
        """Convergent orbits of alpha, hull samples and gap statistic.

        Raises:
            DepthError: If a convergent denominator exceeds q_cap.
        """
        pairs = convergents(alpha, depth)
        too_deep = [(s, q) for s, q in pairs if q > self.settings.q_cap]
        if too_deep:
            raise DepthError(f"convergent {too_deep[0][0]}/{too_deep[0][1]} exceeds q_cap = {self.settings.q_cap}")

        orbits = []
        for s, q in pairs:
            orbits.append(self.periodic_orbit(s, q))
        gaps = [largest_gap(orbit.x[:orbit.q]) for orbit in orbits]
        classification = classify(gaps, [q for _, q in pairs])
        hull = self.hull_functions(orbits[-1], strict=False)
        if hull.violations:
            logger.warning("alpha=%.10g: phi has %d monotonicity violations", alpha, hull.violations)
        logger.info("Mather set alpha=%.10g depth %d: gap %.4g -> %s", alpha, depth, gaps[-1], classification)
        return MatherSet(alpha=alpha, convergents=pairs, orbits=orbits, hull=hull, gaps=gaps,
                         largest_gap=gaps[-1], classification=classification)

    def verify_solution_family(self, ms_or_hull, xi_indices=None, t_samples=None,
                               tol: float = 1e-5) -> SolutionFamilyReport:
        """Integrate from hull initial data and check the two solution-family relations.

        Shift: the solution from xi + 2 pi equals the one from xi plus (0, 2 pi).
        Time: the solution from xi at t + 1 equals the one from xi + 2 pi alpha at t.
        """
        hull = ms_or_hull.hull if isinstance(ms_or_hull, MatherSet) else ms_or_hull
        t_samples = np.linspace(0.0, 1.0, 11) if t_samples is None else np.asarray(t_samples, dtype=float)
        indices = range(hull.q) if xi_indices is None else xi_indices

        shift_defect = time_defect = 0.0
        min_rate = np.inf
        r_min, r_max = np.inf, -np.inf
        clockwise = True
        for k in indices:
            start = AugmentedState.initial(hull.eta[k], hull.phi[k])
            base = self.flow.integrate(start, 0.0, 1.0, t_eval=t_samples)
            shifted = self.flow.integrate(AugmentedState.initial(hull.eta[k], hull.phi[k] + TWO_PI), 0.0, 1.0,
                                          t_eval=t_samples)
            shift_defect = max(shift_defect, float(np.max(np.abs(shifted.r - base.r))),
                               float(np.max(np.abs(shifted.theta - base.theta - TWO_PI))))

            end = self.flow.integrate(start, 0.0, 1.0).final
            later = self.flow.integrate(AugmentedState.initial(end.r, end.theta), 1.0, 2.0,
                                        t_eval=t_samples + 1.0, require_a_star=False)
            target, wraps = hull.shifted_index(k)
            advanced = self.flow.integrate(
                AugmentedState.initial(hull.eta[target], hull.phi[target] + TWO_PI * wraps), 0.0, 1.0,
                t_eval=t_samples)
            time_defect = max(time_defect, float(np.max(np.abs(later.r - advanced.r))),
                              float(np.max(np.abs(later.theta - advanced.theta))))

            min_rate = min(min_rate, float(np.min(self.flow.angular_velocity(base))))
            r_min, r_max = min(r_min, float(np.min(base.r))), max(r_max, float(np.max(base.r)))
            clockwise = clockwise and bool(base.theta[-1] > base.theta[0])

        return SolutionFamilyReport(
            shift_defect=shift_defect,
            time_defect=time_defect,
            min_thetadot=min_rate,
            r_min=r_min,
            r_max=r_max,
            clockwise=clockwise,
            passed=bool(shift_defect < tol and time_defect < tol and min_rate > 0
                        and r_min > self.flow.r_star and np.isfinite(r_max) and clockwise),
        )

