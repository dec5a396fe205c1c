import pytest

from uavrel.components import BatteryParams, PropulsionParams, build_battery_model, build_propulsion_model
from uavrel.markov import build_markov_model

_acceptance = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = report.user_properties and dict(report.user_properties).get("acceptance")
    if marker:
        number, title = marker
        ok = _acceptance.get(number, (title, True))[1] and report.passed
        _acceptance[number] = (title, ok)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m:
            item.user_properties.append(("acceptance", (m.args[0], m.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"criterion {number} {title}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture
def two_state():
    return build_markov_model(["Op", "Fail"], [("Op", "Fail", 0.001)], ["Fail"])


@pytest.fixture
def battery_model():
    return build_battery_model(BatteryParams())


@pytest.fixture
def hexa_model():
    return build_propulsion_model(PropulsionParams("PNPNPN", 0.001))
