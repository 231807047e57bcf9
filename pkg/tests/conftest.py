import pytest

from prandtl_lab.solver import SolverConfig, run_until_blowup


@pytest.fixture(scope="session")
def quick_run():
    """Small blow-up run shared by the solver and modulation suites."""
    cfg = SolverConfig(lambda0=4.0, blowup_threshold=1.0e4, n_nodes=768,
                       remesh_n_factor=1.0, max_steps=120_000)
    return run_until_blowup(cfg)
