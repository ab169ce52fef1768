import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        verdict, title, detail = results[number]
        line = f"{verdict} criterion {number:2d}: {title}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)
