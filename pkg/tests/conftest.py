import numpy as np
import pytest

from fading_ilms import channels as ch
from fading_ilms import network as nw


@pytest.fixture
def scalar_ideal():
    return nw.make_profile([1.0], 0.02, [[1.0]], 0.01, ch.ideal())


@pytest.fixture
def small_shared():
    """Three nodes, M=3, common eigenbasis, mixed links and channel noise."""
    rng = np.random.default_rng(3)
    R = nw.covariances(3, [1.0, 2.0, 1.5], 4.0, "shared", rng)
    links = [ch.rayleigh_from_mean(0.8, 2e-4), ch.deterministic(0.9, 1e-4), ch.rician(0.7, 0.3, 5e-4)]
    return nw.make_profile([0.3, -0.5, 0.8], [0.03, 0.02, 0.04], R, [1e-3, 5e-3, 2e-3], links)


_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _criteria.append((number, title, "PASS" if report.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in sorted(_criteria):
        line = f"{verdict} criterion {number}: {title}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
