import numpy as np
import pytest

import mmdfuse.backends as backends


@pytest.fixture(params=backends.available_backends())
def backend_name(request):
    """Run the decorated test once per available backend."""
    previous = backends.active_backend().name
    backends.set_backend(request.param)
    yield request.param
    backends.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
