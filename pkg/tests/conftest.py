from __future__ import annotations

import cmath
import math

import pytest
from hypothesis import HealthCheck, settings

from shiftconv.coefficients import GL2, SYM2, TAU3, build_stream

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def e(x: float) -> complex:
    return cmath.exp(2j * math.pi * x)


def naive_kloosterman(m: int, n: int, c: int) -> complex:
    # textbook definition, inverse by brute-force search
    total = 0j
    for x in range(c):
        if math.gcd(x, c) != 1:
            continue
        xbar = next(y for y in range(c) if (x * y) % c == 1 % c)
        total += e((m * x + n * xbar) / c)
    return total


@pytest.fixture(scope="session")
def gl2_stream():
    return build_stream(GL2, 3 * 2**12)


@pytest.fixture(scope="session")
def sym2_stream():
    return build_stream(SYM2, 3 * 2**12)


@pytest.fixture(scope="session")
def tau3_stream():
    return build_stream(TAU3, 10_000)


_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_lines(request):
    return request.config.stash.setdefault(_LINES, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
