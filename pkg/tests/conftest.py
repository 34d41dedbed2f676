import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> list of (ok, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    from test_acceptance import summary_lines

    terminalreporter.section("acceptance criteria")
    for line in summary_lines(ACCEPTANCE):
        terminalreporter.write_line(line)
