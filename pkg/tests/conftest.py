import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from contact_sublaplacian.hypersurface import ModelHypersurface
from contact_sublaplacian.model_spaces import ModelSpace

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SPACES = [("heisenberg", 1, None), ("heisenberg", 2, None), ("sphere", 1, 1.0), ("sphere", 2, 0.5),
          ("ads", 1, 1.0), ("ads", 2, 0.5)]


def space_id(model):
    fam, n, k = model
    return f"{fam}-n{n}" + ("" if k is None else f"-k{k:g}")


@pytest.fixture(params=SPACES, ids=space_id)
def hs(request):
    return ModelHypersurface(ModelSpace(*request.param))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number][1])
