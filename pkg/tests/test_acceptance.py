"""Acceptance criteria: one PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines.
"""
from __future__ import annotations

import pytest

from noslip import verify


@pytest.mark.parametrize("name", list(verify.CHECKS))
def test_criterion(name):
    result = verify.run_check(name)
    print()
    print(result.line())
    print(f"    observed: {result.observed}")
    print(f"    expected: {result.expected}")
    assert result.passed, f"{name}: observed {result.observed}, expected {result.expected}"
