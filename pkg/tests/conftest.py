import pytest
from hypothesis import settings

settings.register_profile("quadfree", deadline=None)
settings.load_profile("quadfree")

from quadfree.polycore import QuadraticPoly

# intersective quadratics used across the suite, as (a2, a1, a0)
CORPUS = [
    (1, 0, 0), (1, 1, 0), (1, 0, -1), (2, 1, 0), (6, 5, 1),
    (3, -30, 75), (1, -5, 0), (6, -1, -1), (5, 7, -6), (10, 11, 3),
    (12, -5, -2), (1, -3, 2), (7, -19, -6), (6, 4, -2), (1, -8, 16),
    (36, 19, -6), (1, 3, 0), (5, -33, -14), (24, 17, 3), (6, 3, 0),
]


@pytest.fixture(scope="session")
def corpus():
    return [QuadraticPoly(*c) for c in CORPUS]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance") or sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
