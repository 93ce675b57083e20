import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

_ACCEPTANCE = []


def record(name, ok, detail):
    _ACCEPTANCE.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
