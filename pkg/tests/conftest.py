import pytest
import os
from unittest.mock import patch

from services.triple_service import DiracParams, RealStructureParams, build_bundle
from utils.lattice import SpinStructure, Truncation
from utils.opalg import PhaseAngle

GOLDEN_TURNS = (5 ** 0.5 - 1) / 2


@pytest.fixture(autouse=True)
def mock_env_vars(tmp_path):
    """Mock environment variables for all tests"""
    env_vars = {
        'LOG_LEVEL': 'DEBUG',
        'NCT_SPIN_THREADS': '2',
        'NCT_OUTPUT_DIR': str(tmp_path / 'output'),
    }

    with patch.dict(os.environ, env_vars):
        yield


@pytest.fixture
def lam():
    return PhaseAngle(GOLDEN_TURNS)


@pytest.fixture
def spins():
    """The four structures in the order (0,0), (0,1/2), (1/2,0), (1/2,1/2)"""
    return SpinStructure.all()


@pytest.fixture
def canonical_bundle(lam):
    """phi=psi=0, tau=(1, i), spin (0,0), n_max=6"""
    return build_bundle(Truncation(6, SpinStructure()), lam)


@pytest.fixture
def spurious_params():
    return RealStructureParams(phi=1.0, psi=0.7), DiracParams(tau1=0j, tau2=0j, tau0=1 + 0j, eps_const=-1 + 0j)


@pytest.fixture
def spurious_bundle(lam, spurious_params):
    rparams, dparams = spurious_params
    return build_bundle(Truncation(6, SpinStructure()), lam, rparams, dparams)


@pytest.fixture
def make_bundle(lam):
    def _make(n_max=6, spin="0,0", lam_turns=None, rparams=None, dparams=None, strict=True):
        phase = lam if lam_turns is None else PhaseAngle(lam_turns)
        return build_bundle(Truncation(n_max, SpinStructure.parse(spin)), phase, rparams, dparams, strict=strict)
    return _make
