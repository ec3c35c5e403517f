import re


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call":
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    match = re.match(r"test_criterion_(\d+)_(\w+)", name)
    if not match:
        return
    number = int(match.group(1))
    label = match.group(2).replace("_", " ")
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] criterion {number:2d} ({label}): {verdict}")
