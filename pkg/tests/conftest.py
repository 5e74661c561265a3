"""Shared fixtures for the vortex_mather test suite.

Two configurations are used throughout: the integrable case p = 0 and the
quartic test perturbation p = 0.01 cos(2 pi t) x^4, both on the unit disk.
"""

import pytest

from vortex_mather.flow import PoincareFlow
from vortex_mather.model import VortexModel
from vortex_mather.schemas import MonomialTerm, Perturbation, RunConfig
from vortex_mather.session import AnalysisSession

GAMMA = 0.01


@pytest.fixture(scope="session")
def zero_perturbation():
    return Perturbation()


@pytest.fixture(scope="session")
def quartic_perturbation():
    return Perturbation(terms=[MonomialTerm(i=4, j=0, cos=(GAMMA,))])


@pytest.fixture(scope="session")
def zero_model(zero_perturbation):
    return VortexModel(zero_perturbation)


@pytest.fixture(scope="session")
def quartic_model(quartic_perturbation):
    return VortexModel(quartic_perturbation)


@pytest.fixture(scope="session")
def zero_flow(zero_model):
    return PoincareFlow(zero_model)


@pytest.fixture(scope="session")
def quartic_flow(quartic_model):
    return PoincareFlow(quartic_model)


@pytest.fixture(scope="session")
def zero_session(zero_perturbation):
    """Session for p = 0; strip, window and solver are built on first use."""
    return AnalysisSession(RunConfig(perturbation=zero_perturbation))


@pytest.fixture(scope="session")
def quartic_session(quartic_perturbation):
    return AnalysisSession(RunConfig(perturbation=quartic_perturbation))


@pytest.fixture(scope="session")
def zero_solver(zero_session):
    return zero_session.solver


@pytest.fixture(scope="session")
def quartic_solver(quartic_session):
    return quartic_session.solver


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """Route command output into a temporary directory."""
    monkeypatch.setenv("VORTEX_MATHER_OUTPUT_DIR", str(tmp_path))
    return tmp_path
