"""Pydantic models for perturbation and run configuration validation."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

LEADING_DEGREE = 4


class TimeCoefficient(BaseModel):
    """Finite Fourier series in t with period 1.

    value(t) = a0 + sum_m a_m cos(2 pi m t) + b_m sin(2 pi m t), m starting at 1.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    a0: float = 0.0
    cos_terms: tuple[float, ...] = Field(default=(), alias="cos")
    sin_terms: tuple[float, ...] = Field(default=(), alias="sin")

    def value(self, t):
        """Coefficient at t; t may be a scalar or an array."""
        t = np.asarray(t, dtype=float)
        total = np.full(t.shape, self.a0)
        if self.cos_terms:
            m = np.arange(1, len(self.cos_terms) + 1)
            total = total + np.cos(2.0 * np.pi * t[..., None] * m) @ np.asarray(self.cos_terms)
        if self.sin_terms:
            m = np.arange(1, len(self.sin_terms) + 1)
            total = total + np.sin(2.0 * np.pi * t[..., None] * m) @ np.asarray(self.sin_terms)
        return float(total) if total.ndim == 0 else total

    def is_zero(self) -> bool:
        return self.a0 == 0.0 and not any(self.cos_terms) and not any(self.sin_terms)


class MonomialTerm(TimeCoefficient):
    """Coefficient of x^i y^j."""

    i: int = Field(ge=0)
    j: int = Field(ge=0)

    @property
    def order(self) -> int:
        return self.i + self.j


class Perturbation(BaseModel):
    """p = T4 + p~ on the disk of radius epsilon.

    `terms` holds the homogeneous degree-4 part, `remainder` every
    monomial of total degree >= 5.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    degree: int = LEADING_DEGREE
    epsilon: float = Field(default=1.0, gt=0)
    leading_terms: tuple[MonomialTerm, ...] = Field(default=(), alias="terms")
    remainder_terms: tuple[MonomialTerm, ...] = Field(default=(), alias="remainder")

    @field_validator("degree")
    @classmethod
    def _degree_is_four(cls, value: int) -> int:
        if value != LEADING_DEGREE:
            raise ValueError(f"perturbation must vanish to order {LEADING_DEGREE}, got degree {value}")
        return value

    @model_validator(mode="after")
    def _check_orders(self) -> "Perturbation":
        for term in self.leading_terms:
            if term.order != LEADING_DEGREE:
                raise ValueError(f"leading term x^{term.i} y^{term.j} is not of degree {LEADING_DEGREE}")
        for term in self.remainder_terms:
            if term.order <= LEADING_DEGREE:
                raise ValueError(f"remainder term x^{term.i} y^{term.j} must have degree >= {LEADING_DEGREE + 1}")
        seen = [(t.i, t.j) for t in self.leading_terms + self.remainder_terms]
        if len(seen) != len(set(seen)):
            raise ValueError("duplicate exponent pair in perturbation terms")
        return self

    @property
    def r_star(self) -> float:
        return 1.0 / (2.0 * self.epsilon ** 2)

    @property
    def all_terms(self) -> tuple[MonomialTerm, ...]:
        return self.leading_terms + self.remainder_terms

    def is_zero(self) -> bool:
        return all(term.is_zero() for term in self.all_terms)


class IntegratorSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    rtol: float = Field(default=1e-10, gt=0)
    atol: float = Field(default=1e-12, gt=0)
    max_step: float = Field(default=1e-2, gt=0)


class StripSettings(BaseModel):
    """Working strip and sample grids for the Poincare map analysis."""

    model_config = ConfigDict(frozen=True)

    r_bar: float | None = Field(default=None, gt=0)
    # Empty means: geometric grid between a* and 20 a*
    sample_r: tuple[float, ...] = ()
    sample_theta: int = Field(default=8, ge=2)
    sample_t: int = Field(default=33, ge=2)
    window_theta: int = Field(default=16, ge=2)
    r_cap: float = Field(default=1e4, gt=0)
    margin: float = Field(default=0.0, ge=0)


class SolverSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    newton_tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=50, ge=1)
    damping: float = Field(default=0.5, gt=0, le=1)
    root_tol: float = Field(default=1e-10, gt=0)
    root_max_iter: int = Field(default=100, ge=1)
    q_cap: int = Field(default=377, ge=1)
    fd_step: float = Field(default=1e-4, ge=1e-7, le=1e-3)
    hessian: Literal["analytic", "fd"] = "analytic"
    cache_size: int = Field(default=4096, ge=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    perturbation: Perturbation = Perturbation()
    integrator: IntegratorSettings = IntegratorSettings()
    strip: StripSettings = StripSettings()
    solver: SolverSettings = SolverSettings()
    output_dir: str = "output"
