import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        number, label = marker.args
        status = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {number:>2} ({label}): {status}")
