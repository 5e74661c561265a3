"""
Generating function h(x, x1) of the Poincare map, evaluated on demand by
inverting the twist x1 = theta1(r, x) for r.
"""

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from vortex_mather.errors import BracketError, NoConvergence
from vortex_mather.flow import (
    PoincareFlow,
    PoincareResult,
    symplectic_weight,
    symplectic_weight_prime,
)
from vortex_mather.poincare import FrequencyWindow
from vortex_mather.schemas import SolverSettings

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
SAMPLE_COLUMNS = ["x", "x1", "R", "h", "d1h", "d2h", "d12h"]

# Smallest half-width of the default root bracket, relative to the initial guess
MIN_BRACKET_FRACTION = 1e-3


@dataclass(frozen=True)
class GeneratingSample:
    x: float
    x1: float
    R: float
    R1: float
    h: float
    d1h: float
    d2h: float
    d12h: float
    d11h: float
    d22h: float

    def as_row(self) -> dict:
        return {name: getattr(self, name) for name in SAMPLE_COLUMNS}


def samples_frame(samples: list[GeneratingSample]) -> pd.DataFrame:
    return pd.DataFrame([s.as_row() for s in samples], columns=SAMPLE_COLUMNS)


def domain_contains(x: float, x1: float, window: FrequencyWindow, r_cap: float = float("inf"),
                    margin: float = 0.0) -> bool:
    """(x, x1) in B: 2 pi alpha^-(x) + margin < x1 - x < 2 r_cap."""
    gap = x1 - x
    lower = TWO_PI * float(window.alpha_minus(x))
    return bool(lower + margin < gap < 2.0 * r_cap)


class GeneratingFunction:
    """h(x, x1) = S(R(x, x1), x) with its first and second partials.

    Evaluations are memoized by (x mod 2 pi, x1 - x); the cache is guarded
    by a lock and can be shared between threads.
    """

    def __init__(self, flow: PoincareFlow, window: FrequencyWindow | None = None,
                 settings: SolverSettings | None = None, K: float = 0.0,
                 r_cap: float = float("inf"), margin: float = 0.0):
        self.flow = flow
        self.window = window
        self.settings = settings or SolverSettings()
        self.r_cap = r_cap
        self.margin = margin
        self.halfwidth = (flow.a_star - flow.r_star) + K
        self._cache: OrderedDict[tuple[float, float], GeneratingSample] = OrderedDict()
        self._lock = threading.Lock()
        self.evaluations = 0

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()

    def default_bracket(self, x: float, x1: float) -> tuple[float, float]:
        """Unperturbed inverse (x1 - x)/2 widened by C1 + K."""
        guess = (x1 - x) / 2.0
        half = max(self.halfwidth, MIN_BRACKET_FRACTION * abs(guess))
        return max(guess - half, self.flow.a_star * (1.0 + 1e-12)), guess + half

    def contains(self, x: float, x1: float) -> bool:
        if self.window is None:
            raise ValueError("generating function has no frequency window attached")
        return domain_contains(x, x1, self.window, self.r_cap, self.margin)

    # ── root solve ───────────────────────────────────────────────────

    def _theta_gap(self, r: float, x: float, x1: float) -> tuple[float, PoincareResult]:
        result = self.flow.poincare(r, x)
        return result.theta1 - x1, result

    def _solve(self, x: float, x1: float, bracket: tuple[float, float]) -> tuple[float, PoincareResult]:
        """Safeguarded Newton-bisection on theta1(r, x) = x1.

        Newton uses d theta1/d r0 from the monodromy. Bracket endpoints are only
        evaluated once a Newton step has to fall back to bisection.
        """
        lo, hi = float(bracket[0]), float(bracket[1])
        if not lo < hi:
            raise BracketError(f"empty bracket ({lo}, {hi})")
        if lo <= self.flow.a_star:
            raise BracketError(f"bracket lower end {lo} is not above a* = {self.flow.a_star:.6g}")

        tol = self.settings.root_tol
        checked = False
        r = min(max((x1 - x) / 2.0, lo), hi)
        best = r
        best_gap = np.inf

        for iteration in range(self.settings.root_max_iter):
            gap, result = self._theta_gap(r, x, x1)
            self.evaluations += 1
            if abs(gap) < best_gap:
                best, best_gap = r, abs(gap)
            if abs(gap) < tol:
                logger.debug("R(%g, %g) = %.15g after %d iterations", x, x1, r, iteration + 1)
                return r, result
            if gap < 0:
                lo = max(lo, r)
            else:
                hi = min(hi, r)

            slope = result.dG_dr0
            step = r - gap / slope if slope > 0 else np.nan
            if np.isfinite(step) and lo < step < hi:
                r = step
                continue

            if not checked:
                gap_lo, _ = self._theta_gap(float(bracket[0]), x, x1)
                gap_hi, _ = self._theta_gap(float(bracket[1]), x, x1)
                if not (gap_lo < 0 < gap_hi):
                    raise BracketError(
                        f"bracket {bracket} does not straddle x1 = {x1} "
                        f"(theta1 - x1 = {gap_lo:.3e}, {gap_hi:.3e})")
                checked = True
            r = 0.5 * (lo + hi)

        raise NoConvergence(f"R({x}, {x1}) not converged in {self.settings.root_max_iter} iterations", best=best)

    def solve_R(self, x: float, x1: float, bracket: tuple[float, float] | None = None) -> float:
        """r with theta1(r, x) = x1 to root_tol.

        Raises:
            BracketError: If the bracket does not straddle the root.
            NoConvergence: After root_max_iter iterations.
        """
        R, _ = self._solve(x, x1, bracket or self.default_bracket(x, x1))
        return R

    # ── evaluation ───────────────────────────────────────────────────

    def _compute(self, x: float, x1: float) -> GeneratingSample:
        R, result = self._solve(x, x1, self.default_bracket(x, x1))
        Y = result.Y1
        R1 = result.r1
        return GeneratingSample(
            x=x,
            x1=x1,
            R=R,
            R1=R1,
            h=result.S,
            d1h=-symplectic_weight(R),
            d2h=symplectic_weight(R1),
            d12h=-symplectic_weight_prime(R) / Y[1, 0],
            d11h=symplectic_weight_prime(R) * Y[1, 1] / Y[1, 0],
            d22h=symplectic_weight_prime(R1) * Y[0, 0] / Y[1, 0],
        )

    def h_eval(self, x: float, x1: float, use_cache: bool = True) -> GeneratingSample:
        """Generating function sample at (x, x1).

        The pair is first translated so x lies in [0, 2 pi); h and its partials
        are invariant under that shift.
        """
        k = np.floor(x / TWO_PI)
        x_red, x1_red = x - k * TWO_PI, x1 - k * TWO_PI
        key = (round(x_red, 12), round(x1_red - x_red, 12))

        sample = None
        if use_cache and self.settings.cache_size:
            with self._lock:
                sample = self._cache.get(key)
                if sample is not None:
                    self._cache.move_to_end(key)
        if sample is None:
            sample = self._compute(x_red, x1_red)
            if use_cache and self.settings.cache_size:
                with self._lock:
                    self._cache[key] = sample
                    while len(self._cache) > self.settings.cache_size:
                        self._cache.popitem(last=False)
        return replace(sample, x=x, x1=x1)

    def fd_partials(self, x: float, x1: float, step: float | None = None) -> tuple[float, float]:
        """Central differences of h in x and in x1."""
        step = step or self.settings.fd_step
        d1 = (self.h_eval(x + step, x1, use_cache=False).h - self.h_eval(x - step, x1, use_cache=False).h) / (2 * step)
        d2 = (self.h_eval(x, x1 + step, use_cache=False).h - self.h_eval(x, x1 - step, use_cache=False).h) / (2 * step)
        return d1, d2
