from fractions import Fraction

import pytest

from perfect_mcmc.rng import BIT_GENERATOR, RngStream


def test_split_keys() -> None:
    root = RngStream(42)
    child = root.split(3).split(1)
    assert child.seed == 42
    assert child.key == (3, 1)
    assert BIT_GENERATOR in repr(child)


def test_replay() -> None:
    weights = [Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)]
    first = [RngStream(7).split(i).index(weights) for i in range(50)]
    again = [RngStream(7).split(i).index(weights) for i in range(50)]
    assert first == again
    assert set(first) <= {0, 1, 2}


def test_point_mass_index() -> None:
    stream = RngStream(0)
    weights = [Fraction(0), Fraction(1), Fraction(0)]
    assert {stream.index(weights) for _ in range(20)} == {1}


def test_index_frequencies() -> None:
    stream = RngStream(2024)
    weights = [Fraction(1, 4), Fraction(3, 4)]
    draws = [stream.index(weights) for _ in range(4000)]
    assert abs(draws.count(1) / 4000 - 0.75) < 0.03


def test_uniform_range() -> None:
    stream = RngStream(1)
    assert all(0.0 <= stream.uniform() < 1.0 for _ in range(100))


def test_negative_seed() -> None:
    with pytest.raises(ValueError, match="non-negative"):
        RngStream(-1)
