"""Shared pytest hooks.

Acceptance tests call ``record_property("criterion", ...)`` and
``record_property("detail", ...)``; the terminal summary then prints one
pass/fail line per criterion, whatever the verbosity or capture settings.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))  # lets test modules import the oracles

_RESULTS = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    entry = _RESULTS.setdefault(key, {"outcome": "passed", "detail": "", "duration": 0.0})
    entry["duration"] += report.duration
    if props.get("detail"):
        entry["detail"] = props["detail"]
    if report.failed:
        entry["outcome"] = "failed"
        if not entry["detail"]:
            entry["detail"] = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else ""
    elif report.skipped and entry["outcome"] == "passed" and report.when == "setup":
        entry["outcome"] = "skipped"


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: (len(str(k)), str(k))):
        e = _RESULTS[key]
        word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[e["outcome"]]
        terminalreporter.write_line(f"criterion {key}: {word} ({e['duration']:.1f} s) {e['detail']}")
