import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA: dict[int, tuple[str, str, float, str]] = {}


def record(number: int, title: str, passed: bool, seconds: float, note: str = "") -> None:
    CRITERIA[number] = (title, "PASS" if passed else "FAIL", seconds, note)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        title, status, sec, note = CRITERIA[n]
        line = f"{status} criterion {n:2d} {title} ({sec:.1f} s)"
        terminalreporter.write_line(line + (f" {note}" if note else ""))
