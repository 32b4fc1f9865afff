"""Acceptance criteria, one test each.

Every test prints a single PASS/FAIL line with the measured values, the
tolerance and the time taken, whether or not it passes.
"""
import pytest

from glsurface.verification import CRITERIA

SLOW = {6, 7, 8, 9, 10, 11}


def _params():
    for k in sorted(CRITERIA):
        marks = [pytest.mark.slow] if k in SLOW else []
        yield pytest.param(k, id=f"criterion_{k}", marks=marks)


@pytest.mark.parametrize("key", list(_params()))
def test_criterion(key, capsys):
    result = CRITERIA[key]()
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, result.line()
