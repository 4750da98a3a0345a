"""Shared fixtures.

The expensive artifacts of the default configuration (the evolved seed, the
optimized pulse, its round trip, and the monodromy matrix/spectrum) are
computed once per session and shared between the module tests and the
acceptance suite.
"""

import numpy as np
import pytest

import fiberlaser as fl
from fiberlaser.spectrum import assemble_matrix, classify, eigendecompose, essential_curve


@pytest.fixture(scope="session")
def cfg():
    return fl.default_config()


@pytest.fixture(scope="session")
def seed_pulse(cfg):
    """The stock Gaussian seed evolved ten round trips."""
    seed = fl.gaussian_seed(400.0, 0.3, cfg.grid)
    return fl.evolve_stage(cfg, seed, 10)


@pytest.fixture(scope="session")
def seed_rt(cfg, seed_pulse):
    return fl.round_trip(cfg, seed_pulse, record=True)


@pytest.fixture(scope="session")
def opt_report(cfg, seed_pulse):
    report = fl.optimize(cfg, seed_pulse)
    assert report.converged, f"optimizer failed: {report.reason}"
    return report


@pytest.fixture(scope="session")
def opt_pulse(opt_report):
    return opt_report.psi_opt


@pytest.fixture(scope="session")
def opt_rt(cfg, opt_pulse):
    return fl.round_trip(cfg, opt_pulse, record=True)


@pytest.fixture(scope="session")
def opt_eval(cfg, opt_pulse):
    return fl.evaluate_poincare(cfg, opt_pulse)


@pytest.fixture(scope="session")
def monodromy_matrix(cfg, opt_rt, opt_eval):
    return assemble_matrix(cfg, opt_rt, opt_eval.theta, tasks=2)


@pytest.fixture(scope="session")
def spectrum_report(cfg, monodromy_matrix, opt_rt, opt_eval):
    rep = eigendecompose(monodromy_matrix, top_k=16)
    curve = essential_curve(cfg, opt_rt.gain_integral_fa, opt_eval.theta)
    return classify(rep, curve)


def random_field(grid, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return fl.Field(grid, scale * rng.standard_normal((2, grid.n)))
