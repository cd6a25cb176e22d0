"""The twelve acceptance criteria, one named check each.

Each test prints the check's one-line verdict, for example
``[PASS] single_photon_benchmark: ...``, so ``pytest -s`` or ``-v`` output
reads as a pass/fail report.
"""

import pytest

from tls2p.validation import CHECKS, run_checks

CRITERIA = list(enumerate(CHECKS, start=1))


@pytest.mark.parametrize("number,name", CRITERIA, ids=[f"{n:02d}_{name}" for n, name in CRITERIA])
def test_criterion(number, name, capsys):
    (result,) = run_checks([name])
    with capsys.disabled():
        print(f"\ncriterion {number:2d} {result.line()}")
    assert result.passed, result.detail


def test_all_criteria_have_checks():
    assert len(CHECKS) == 12
