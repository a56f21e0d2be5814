import pytest

from gomoku_agent import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT-compile the hot kernels once so per-test timings stay honest.
    _kernels.warmup()
