import os
import sys
from fractions import Fraction

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("hausspec", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("hausspec")


@pytest.fixture(scope="session")
def constructions_w14():
    from hausspec.mixedlie import construct_density_subalgebra

    return {a: construct_density_subalgebra(a, 2, 3, 14) for a in (Fraction(1, 4), Fraction(1, 2), Fraction(2, 3))}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
