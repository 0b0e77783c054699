import pytest

from perfect_mcmc.chain import Dist, Kernel
from perfect_mcmc.exceptions import NotMonotone, PosetTooLarge, UndefinedUpwardRow, ValidationError, ZeroBottomMass
from perfect_mcmc.poset import (
    CrossSmConfig,
    Poset,
    UpwardKernelFamily,
    is_cross_monotone,
    is_cross_realizably_monotone,
    is_realizably_monotone,
    is_stochastically_dominated,
    is_stochastically_monotone,
    upward_family_from_rule,
    upward_row,
)
from perfect_mcmc.rules import TransitionRule


def test_chain_order(line3) -> None:
    assert line3.bottom == 0
    assert line3.top == 2
    assert line3.leq(0, 2)
    assert not line3.leq(2, 1)
    assert len(line3.comparable_pairs(strict=True)) == 3


def test_from_relations_closes_transitively() -> None:
    p = Poset.from_relations(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    assert p.leq(0, 3)
    assert not p.leq(1, 2) and not p.leq(2, 1)
    assert (p.bottom, p.top) == (0, 3)


def test_down_sets() -> None:
    assert len(Poset.chain(3).down_sets()) == 4
    diamond = Poset.from_relations(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    assert len(diamond.down_sets()) == 6
    with pytest.raises(PosetTooLarge):
        diamond.down_sets(cap=3)


def test_invalid_orders() -> None:
    with pytest.raises(ValidationError, match="antisymmetric"):
        Poset([[True, True], [True, True]])
    with pytest.raises(ValidationError, match="bottom"):
        Poset([[True, False], [False, True]])


def test_stochastic_monotonicity(toy_kernel, sticky_kernel, line3) -> None:
    assert is_stochastically_monotone(toy_kernel, line3)
    assert is_stochastically_monotone(sticky_kernel, line3)
    flip = Kernel.from_rows([["0", "1"], ["1", "0"]])
    check = is_stochastically_monotone(flip, Poset.chain(2))
    assert not check
    assert check.witness[:2] == (0, 1)


def test_domination(toy_kernel, line3) -> None:
    assert is_stochastically_dominated(toy_kernel, toy_kernel, line3)
    assert is_cross_monotone(toy_kernel, toy_kernel, line3)
    up = Kernel.from_rows([["0", "0", "1"]] * 3)
    assert is_stochastically_dominated(toy_kernel, up, line3)
    assert not is_stochastically_dominated(up, toy_kernel, line3)


def test_realizable_monotonicity(two_map_rule, toy_independent, line3) -> None:
    assert is_realizably_monotone(two_map_rule, line3)
    check = is_realizably_monotone(toy_independent, line3)
    assert not check
    x, y, u = check.witness
    assert line3.leq(x, y)
    assert not line3.leq(toy_independent.apply(x, u), toy_independent.apply(y, u))


def test_upward_family_from_monotone_rule(two_map_rule, toy_kernel, line3) -> None:
    family = upward_family_from_rule(two_map_rule, line3)
    assert family.check(toy_kernel)
    # given phi(0, U) = 1 the label is "up", which sends 2 to 2
    assert family.row(0, 2, 1) == Dist.point(3, 2)
    with pytest.raises(UndefinedUpwardRow):
        family.row(0, 2, 2)


def test_upward_family_needs_monotone_rule(toy_independent, line3) -> None:
    with pytest.raises(NotMonotone):
        upward_family_from_rule(toy_independent, line3)


def test_upward_row(two_map_rule) -> None:
    assert upward_row(two_map_rule, 1, 1, 0) == Dist.point(3, 0)


def test_inconsistent_family_is_reported(toy_kernel) -> None:
    p = Poset.chain(3)
    rows = {
        (x, y): [Dist.point(3, max(x_next, y)) if toy_kernel.prob(x, x_next) else None for x_next in range(3)]
        for x, y in p.comparable_pairs()
    }
    check = UpwardKernelFamily(p, rows).check(toy_kernel)
    assert not check
    assert check.witness[0] == "consistency"


def test_family_must_cover_every_pair(line3) -> None:
    with pytest.raises(ValidationError, match="missing"):
        UpwardKernelFamily(line3, {(0, 0): [Dist.point(3, 0)] * 3})


def test_cross_sm_config(toy_kernel, toy_pi, line3) -> None:
    cfg = CrossSmConfig.single(toy_kernel, line3, toy_pi)
    assert cfg.rho == 1
    assert cfg.is_single
    down = Kernel.from_rows([["1", "0", "0"]] * 3)
    with pytest.raises(NotMonotone):
        CrossSmConfig(toy_kernel, down, line3)


def test_zero_bottom_mass(line3) -> None:
    k = Kernel.from_rows([["0", "1", "0"], ["0", "0", "1"], ["0", "1", "0"]])
    with pytest.raises(ZeroBottomMass):
        CrossSmConfig.single(k, line3)


def test_cross_realizable_monotonicity(two_map_rule, line3) -> None:
    half = {"down": "1/2", "up": "1/2"}
    above = TransitionRule(3, {"down": (1, 1, 1), "up": (2, 2, 2)}, half)
    below = TransitionRule(3, {"down": (0, 0, 0), "up": (2, 2, 2)}, half)
    assert is_cross_realizably_monotone(two_map_rule, above, line3)
    assert not is_cross_realizably_monotone(two_map_rule, below, line3)
    skewed = TransitionRule(3, {"down": (1, 1, 1), "up": (2, 2, 2)}, {"down": "1/4", "up": "3/4"})
    with pytest.raises(ValidationError, match="share labels"):
        is_cross_realizably_monotone(two_map_rule, skewed, line3)
