"""Fixtures compartilhadas: reações, perfis e execuções curtas na reta"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from kpp.frontsim import DomainPlan, simulate_front  # noqa: E402
from kpp.profiles import make_algebraic  # noqa: E402
from kpp.reaction import make_fisher, make_periodic_fisher  # noqa: E402


@pytest.fixture(scope="session")
def fisher():
    return make_fisher()


@pytest.fixture(scope="session")
def periodic():
    return make_periodic_fisher(0.5, 1.0)


@pytest.fixture(scope="session")
def algebraic2():
    return make_algebraic(2.0)


@pytest.fixture(scope="session")
def short_run(fisher, algebraic2):
    """Fisher homogêneo, alpha = 2, T = 2 em [-20, 120]"""
    plan = DomainPlan(x_left=-20.0, x_right=120.0, dx=0.25)
    return simulate_front(fisher, algebraic2, 2.0, plan, dt=2e-3, stride=50)
