import pytest

ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion."""
    entry = {"name": request.node.name, "detail": ""}

    def note(detail):
        entry["detail"] = detail

    yield note
    ACCEPTANCE.append(entry)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "criterion" in item.fixturenames:
        item.stash[_OUTCOME] = report.outcome


_OUTCOME = pytest.StashKey[str]()


def pytest_runtest_teardown(item):
    if "criterion" in item.fixturenames:
        item.config.stash.setdefault(_LINES, []).append(
            (item.name, item.stash.get(_OUTCOME, "error"))
        )


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    details = {e["name"]: e["detail"] for e in ACCEPTANCE}
    terminalreporter.section("acceptance criteria")
    for name, outcome in lines:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {details.get(name, '')}")
