import pytest

_ACCEPTANCE: list[tuple[int, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Store one acceptance result; the summary is printed at session end."""
    def record(k: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.append((k, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {detail}")
    passed = sum(ok for _, ok, _ in _ACCEPTANCE)
    terminalreporter.write_line(f"{passed}/{len(_ACCEPTANCE)} criteria passed")
