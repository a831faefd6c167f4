import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record(criterion, ok, detail=""):
    line = f"{criterion}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_spd(rng, p, cond=None):
    """SPD matrix; with ``cond`` set, eigenvalues are log-spaced to that condition number."""
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    if cond is None:
        eig = rng.uniform(0.5, 2.0, p)
    else:
        eig = np.geomspace(1.0, 1.0 / cond, p)
    s = (q * eig) @ q.T
    return 0.5 * (s + s.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
