import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sunlib.core import validate

settings.register_profile(
    "sunlib", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("sunlib")


def random_corr(rng, k, ridge=0.5):
    Z = rng.standard_normal((k, k))
    S = Z @ Z.T + ridge * np.eye(k)
    s = np.sqrt(np.diag(S))
    return S / np.outer(s, s)


def random_params(rng, d, m, tau_scale=0.7, ridge=0.5):
    """Random valid SUN parameters built from a random (d+m) correlation matrix."""
    R = random_corr(rng, d + m, ridge)
    sc = rng.uniform(0.5, 2.0, d)
    return validate(
        rng.standard_normal(d),
        R[:d, :d] * np.outer(sc, sc),
        R[:d, d:],
        tau_scale * rng.standard_normal(m),
        R[d:, d:],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def report(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" | {detail}" if detail else "")
        lines.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
