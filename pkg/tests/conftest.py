import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rgdbek.sparse import SparseMatrix

settings.register_profile(
    "rgdbek",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("rgdbek")


def random_sparse(m, n, density, seed, dist="normal"):
    rng = np.random.default_rng(seed)
    mask = rng.random((m, n)) < density
    vals = rng.standard_normal((m, n)) if dist == "normal" else rng.random((m, n))
    return SparseMatrix.from_dense(np.where(mask, vals, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def record_criterion(number, title, ok, detail):
    """Register one acceptance line; printed again in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} :: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
