from __future__ import annotations

import pytest

from recsel import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Pay any JIT compilation cost once, before timed tests run.
    _kernels.warmup()
    yield
