import pytest

_verdicts = {}


@pytest.fixture
def verdict():
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""

    def record(name, ok, detail):
        line = f"criterion {name}: {'PASS' if ok else 'FAIL'} - {detail}"
        _verdicts[name] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_verdicts, key=lambda n: (int("".join(c for c in n if c.isdigit())), n)):
        terminalreporter.write_line(_verdicts[name])
