import re

import pytest

_CRITERIA: dict[int, tuple[str, str]] = {}
_PATTERN = re.compile(r"test_criterion_(\d+)_")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    match = _PATTERN.match(item.name)
    if not match or report.when not in ("setup", "call"):
        return
    num = int(match.group(1))
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if report.failed or (report.when == "call" and num not in _CRITERIA):
        _CRITERIA[num] = ("FAIL" if report.failed else "PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status, title = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {title}")
