"""Shared pytest fixtures for the simulator test suite."""

from __future__ import annotations

import pytest


@pytest.fixture(scope="session")
def term(request):
    """Terminal reporter handle so acceptance checks can emit one visible
    PASS/FAIL line per criterion even while output capture is active."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    class _Writer:
        def line(self, text: str) -> None:
            if reporter is not None:
                reporter.ensure_newline()
                reporter.write_line(text)
            print(text)

    return _Writer()
