"""Shared pytest config.

Prints a one-line PASS/FAIL verdict per acceptance criterion at the end of
the run (the criterion tests live in test_acceptance.py and are named
test_criterion_<nn>_<slug>).
"""

from __future__ import annotations

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results: dict[int, tuple[str, str]] = {}
    for outcome in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(report, "nodeid", ""))
            if m and getattr(report, "when", "call") == "call":
                verdict = "PASS" if outcome == "passed" else outcome.upper().replace("ERROR", "FAIL")
                results[int(m.group(1))] = (m.group(2), verdict)
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(results):
        slug, verdict = results[num]
        terminalreporter.write_line(f"criterion {num:2d} [{slug}]: {verdict}")
