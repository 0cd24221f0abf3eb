import math

import pytest

from lyzeros.coupling import coupling_profile
from lyzeros.dynamics import DriveParams, find_zeros
from lyzeros.thermal import ThermalParams

OMEGA = 2 * math.pi * 50e3

_acceptance = []


@pytest.fixture(scope="session")
def ref_profile():
    return coupling_profile(0.47, 63)


@pytest.fixture(scope="session")
def ref_template(ref_profile):
    return ThermalParams(0.5, 0.0, ref_profile)


@pytest.fixture(scope="session")
def drive():
    return DriveParams(OMEGA)


@pytest.fixture(scope="session")
def ref_zeros(ref_template, drive):
    """Zeros over h_r in [0, 15], t in [0, 200 us] from a 16 x 81 coarse scan."""
    return find_zeros(ref_template, drive, (0, 15), (0, 200e-6), counts=(16, 81))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and (rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed")):
        detail = getattr(item, "acceptance_detail", "")
        _acceptance.append((marker.args[0], item.name, rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for cid, name, outcome, detail in sorted(_acceptance, key=lambda r: (int(r[0][1:].split(".")[0]), r[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{cid:<6} {status}  {name}  {detail}")
