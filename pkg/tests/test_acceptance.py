"""Acceptance battery: one verdict line per criterion.

Tolerances live in :mod:`noisygrover.suite`. The verdict line is printed
even under output capture so that ``pytest -v`` logs it.
"""
import pytest

from noisygrover.suite import CRITERIA, format_result, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = run_criterion(number)
    with capsys.disabled():
        print("\n" + format_result(result))
    assert result.passed, result.detail
