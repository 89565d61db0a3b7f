import numpy as np
import pytest

from smatch.instances import gen_random_gaussian, gen_rotated

BOUNDARY = 1 + 1e-6
EPSILONS = (0.0, 0.05, 0.2, 0.5)


def small_family(count=200, seed=2024):
    """Seeded mix of random and rotated instances with N_x, N_y <= 5, d <= 8.

    Yields ``(label, instance, epsilon)``.
    """
    rng = np.random.default_rng(seed)
    for k in range(count):
        eps = EPSILONS[k % len(EPSILONS)]
        if k % 2 == 0:
            nx, ny = (int(v) for v in rng.integers(1, 6, size=2))
            d = int(rng.integers(1, 9))
            inst = gen_random_gaussian(nx, ny, d, seed=k)
        else:
            d = int(rng.integers(1, 9))
            n = int(rng.integers(1, min(5, d) + 1))
            inst = gen_rotated(n, d, seed=k)
        yield f"{inst.kind}-{k}-eps{eps}", inst, eps


@pytest.fixture(scope="session")
def family():
    return list(small_family())


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key = (marker.args[0], marker.args[1])
    if rep.when == "call" or rep.failed:
        prev = _CRITERIA.get(key, "PASS")
        _CRITERIA[key] = "FAIL" if rep.failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), verdict in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")
