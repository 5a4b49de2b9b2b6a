import pytest

_criterion_lines = []


@pytest.fixture
def criterion():
    """Record a one-line pass/fail verdict, echoed in the terminal summary."""

    def record(num: int, label: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {num:02d} {label}: {'pass' if ok else 'FAIL'}"
        if detail:
            line += f"  [{detail}]"
        _criterion_lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
