from fractions import Fraction
from pathlib import Path

import pytest

import perfect_mcmc
from perfect_mcmc.chain import Dist, Kernel
from perfect_mcmc.config import get_settings
from perfect_mcmc.poset import Poset
from perfect_mcmc.rules import TransitionRule, independent_transitions_rule


DATA = Path(perfect_mcmc.__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def toy_kernel() -> Kernel:
    return Kernel.from_rows([
        ["1/2", "1/2", "0"],
        ["1/2", "0", "1/2"],
        ["0", "1/2", "1/2"],
    ])


@pytest.fixture
def toy_pi() -> Dist:
    return Dist.uniform(3)


@pytest.fixture
def two_map_rule() -> TransitionRule:
    """Realizes the toy walk; monotone for 0 < 1 < 2"""
    half = Fraction(1, 2)
    return TransitionRule(3, {"down": (0, 0, 1), "up": (1, 2, 2)}, {"down": half, "up": half})


@pytest.fixture
def toy_independent(toy_kernel):
    return independent_transitions_rule(toy_kernel)


@pytest.fixture
def sticky_kernel() -> Kernel:
    return Kernel.from_rows([
        ["3/4", "1/4", "0"],
        ["1/2", "0", "1/2"],
        ["0", "1/4", "3/4"],
    ])


@pytest.fixture
def sticky_pi() -> Dist:
    return Dist((Fraction(2, 5), Fraction(1, 5), Fraction(2, 5)))


@pytest.fixture
def line3() -> Poset:
    return Poset.chain(3)


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
