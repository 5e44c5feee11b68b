import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("fibremod", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fibremod")


@pytest.fixture(scope="session")
def main4():
    from fibremod.presets import get_model
    return get_model("main4")


@pytest.fixture(scope="session")
def main_run():
    """The main example through the three-point solve at caps (12, 3)."""
    from fibremod.pipeline import run_couplings
    return run_couplings("main4", (12, 3))


@pytest.fixture(scope="session")
def main_fits(main_run):
    from fibremod.pipeline import fit_report
    return fit_report(main_run, 2)
