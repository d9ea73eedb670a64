"""Acceptance battery: each criterion at its full configuration.

Every test prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated in the
terminal summary so they show without ``-s``.
"""

import os

import pytest

from shiftconv import acceptance

CTX = acceptance.Context(quick=False, seed=0, workers=int(os.environ.get("SHIFTCONV_WORKERS", "1")))
NAMES = [fn.__name__ for fn in acceptance.CRITERIA]


@pytest.mark.slow
@pytest.mark.parametrize("number", range(1, len(NAMES) + 1), ids=[f"{i}-{n}" for i, n in enumerate(NAMES, 1)])
def test_criterion(number, acceptance_lines):
    r = acceptance.run_criterion(number, CTX)
    acceptance_lines.append(r.line)
    print(r.line)
    assert r.passed, r.line
