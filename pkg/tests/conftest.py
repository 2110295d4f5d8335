import os

import pytest

from loadcast.mcmc import MCMC_PRESETS
from loadcast.simulate import SimilarityScales, default_scenario, run_replications

JOBS = min(2, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def ideal_table():
    """Desk-scale ideal-scenario study (30 replicates, 20000 iterations)."""
    scenario = default_scenario(
        "ideal", replications=30, mcmc=MCMC_PRESETS["desk"], seed=2025
    )
    return run_replications(scenario, jobs=JOBS)


@pytest.fixture(scope="session")
def half_table():
    """Same protocol with the seasonal and heating similarities at 0.5."""
    scenario = default_scenario(
        "half",
        scales=SimilarityScales(alpha=0.5, gamma=0.5),
        replications=30,
        mcmc=MCMC_PRESETS["desk"],
        seed=2026,
    )
    return run_replications(scenario, jobs=JOBS)
