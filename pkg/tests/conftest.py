from __future__ import annotations

import pytest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE {status}] {name}", flush=True)


@pytest.fixture
def tmp_jsonl(tmp_path):
    """Write JSONL lines to a temp file and return its path."""

    def _write(lines, name="data.jsonl"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write
