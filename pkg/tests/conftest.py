import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ymhlab.algebra import GroupSpec, RepSpec

settings.register_profile(
    "ymhlab", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ymhlab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ew():
    g = GroupSpec(("SU2", "U1"))
    return g, RepSpec.electroweak(g, 3)


@pytest.fixture(scope="session")
def sm():
    g = GroupSpec(("SU3", "SU2", "U1"))
    return g, RepSpec.sm_higgs(g, 3)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the terminal summary."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(label, ok, detail):
        lines.append(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        print(lines[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
