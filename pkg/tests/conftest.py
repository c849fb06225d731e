import json
import os

import pytest

from bouquet_lab.family import FamilyParams
from bouquet_lab.geometry import make_region_scheme
from bouquet_lab.symbolic import covering_scheme

HERE = os.path.dirname(os.path.abspath(__file__))


@pytest.fixture(scope="session")
def frozen():
    with open(os.path.join(HERE, "oracles", "frozen.json")) as fh:
        return json.load(fh)


_schemes = {}


def scheme_for(p, lam=1.0):
    key = (p, lam)
    if key not in _schemes:
        _schemes[key] = make_region_scheme(FamilyParams(p, lam))
    return _schemes[key]


_covers = {}


def cover_for(p, K=3):
    if (p, K) not in _covers:
        _covers[(p, K)] = covering_scheme(scheme_for(p), K)
    return _covers[(p, K)]


@pytest.fixture(scope="session")
def s3():
    return scheme_for(3)


@pytest.fixture(scope="session")
def cov3():
    return cover_for(3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
