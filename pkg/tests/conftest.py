import os

import hypothesis
import numpy as np
import pytest

from ptdqd.ness import solve_ness, tune_balance
from ptdqd.params import SetupParams

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=300, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def base():
    return SetupParams()


@pytest.fixture(scope="session")
def roots(base):
    return tune_balance(base)


def _at(p, r):
    q = p.with_(eps=r.eps, tc=r.tc)
    return q, solve_ness(q)


@pytest.fixture(scope="session")
def balanced(base, roots):
    """(params, steady state) at the high-inversion balance point."""
    return _at(base, roots[0])


@pytest.fixture(scope="session")
def balanced_low(base, roots):
    return _at(base, roots[1])


# one line per acceptance criterion, filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
