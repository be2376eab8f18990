import pytest

ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def criterion(request):
    """``criterion(number, name, passed, detail)`` logs one pass/fail line."""
    lines = request.config.stash[ACCEPTANCE_LINES]

    def report(number, name, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash[ACCEPTANCE_LINES]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
