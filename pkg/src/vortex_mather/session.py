"""Lazily assembled model, flow, strip, window and solver for one run configuration."""

import logging
from functools import cached_property

import numpy as np

from vortex_mather.flow import PoincareFlow
from vortex_mather.generating import GeneratingFunction
from vortex_mather.mather import MatherSolver
from vortex_mather.model import VortexModel
from vortex_mather.poincare import FrequencyWindow, StripEstimate, boundary_frequencies, working_strip
from vortex_mather.schemas import RunConfig

logger = logging.getLogger(__name__)


class AnalysisSession:
    """Everything a command needs, built on first use and reused afterwards."""

    def __init__(self, config: RunConfig, jobs: int = 1):
        self.config = config
        self.jobs = max(1, jobs)

    @cached_property
    def model(self) -> VortexModel:
        return VortexModel(self.config.perturbation)

    @cached_property
    def flow(self) -> PoincareFlow:
        return PoincareFlow(self.model, self.config.integrator)

    @cached_property
    def strip(self) -> StripEstimate:
        return working_strip(self.flow, self.config.strip, jobs=self.jobs)

    @cached_property
    def window(self) -> FrequencyWindow:
        theta_grid = np.linspace(0.0, 2.0 * np.pi, self.config.strip.window_theta, endpoint=False)
        window = boundary_frequencies(self.flow, self.strip.r_bar, theta_grid, K=self.strip.K)
        logger.info("frequency window: W- = %.6g, alpha threshold = %.6g", window.W_minus, window.alpha_threshold)
        return window

    @cached_property
    def generating(self) -> GeneratingFunction:
        return GeneratingFunction(
            self.flow,
            window=self.window,
            settings=self.config.solver,
            K=self.strip.K or 0.0,
            r_cap=self.config.strip.r_cap,
            margin=self.config.strip.margin,
        )

    @cached_property
    def solver(self) -> MatherSolver:
        return MatherSolver(self.generating, self.window, self.config.solver)
