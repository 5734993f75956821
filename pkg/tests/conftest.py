"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_OUTCOMES: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion tested by this function")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        label, title = mark.args
        passed = call.excinfo is None
        _OUTCOMES[label] = ("PASS" if passed else "FAIL", title)


def _key(label):
    digits = "".join(ch for ch in label if ch.isdigit())
    return (int(digits), label)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_OUTCOMES, key=_key):
        status, title = _OUTCOMES[label]
        terminalreporter.write_line(f"criterion {label:>3}: {status}  {title}")
