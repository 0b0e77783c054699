import random
from fractions import Fraction

import pytest

from perfect_mcmc.chain import Dist, Kernel, is_irreducible, solve_stationary
from perfect_mcmc.detection import BoundingIntervalDetector, FullTrackingDetector
from perfect_mcmc.exceptions import EnumerationTooLarge, ValidationError
from perfect_mcmc.oracle import (
    acceptance_profile,
    enumerate_altalg,
    enumerate_cftp_window,
    enumerate_fill,
    enumerate_fill_sample,
    enumerate_read_once,
    enumerate_sm,
    performance_identity,
)
from perfect_mcmc.poset import CrossSmConfig, Poset, is_stochastically_monotone, upward_family_from_rule
from perfect_mcmc.rules import (
    TransitionRule,
    coupled_inverse_transform_rules,
    independent_transitions_rule,
    inverse_transform_rule,
    kernel_from_rule,
)
from perfect_mcmc.samplers import Search


F = Fraction


def test_fill_on_toy_walk(toy_kernel, toy_pi, toy_independent) -> None:
    report = enumerate_fill(toy_kernel, toy_pi, toy_independent, FullTrackingDetector(toy_independent), 2, 0)
    assert report.p_accept == F(3, 16)
    assert report.cond_law[0] == Dist.uniform(3)
    assert report.cond_law[2] == Dist.point(3, 0)
    assert report.rnd_density == {0: F(3)}
    assert report.first_space_joint[0] == F(1, 16)
    assert report.density_identity() == report.p_accept


@pytest.mark.parametrize("seed, expected", [(0, F(3, 4)), (1, F(0)), (2, F(3, 4))])
def test_fill_with_two_map_rule(toy_kernel, toy_pi, two_map_rule, line3, seed, expected) -> None:
    for det in (FullTrackingDetector(two_map_rule), BoundingIntervalDetector(two_map_rule, line3)):
        report = enumerate_fill(toy_kernel, toy_pi, two_map_rule, det, 2, seed)
        assert report.p_accept == expected
        assert report.density_identity() == expected


def test_fill_with_stationary_seed(toy_kernel, toy_pi, two_map_rule) -> None:
    report = enumerate_fill(toy_kernel, toy_pi, two_map_rule, FullTrackingDetector(two_map_rule), 2, toy_pi)
    assert report.p_accept == F(1, 2)
    assert report.p_first_space == F(1, 2)
    assert report.cond_law[0] == toy_pi


def test_rejected_seed_has_no_conditional_law(toy_kernel, toy_pi, two_map_rule) -> None:
    report = enumerate_fill(toy_kernel, toy_pi, two_map_rule, FullTrackingDetector(two_map_rule), 2, 1)
    assert report.cond_law == {}


def test_acceptance_profile(toy_kernel, toy_pi, two_map_rule) -> None:
    profile = acceptance_profile(toy_kernel, toy_pi, two_map_rule, FullTrackingDetector(two_map_rule), [0, 1, 2], 0)
    assert profile == {0: F(0), 1: F(0), 2: F(3, 4)}


def test_fill_sample_law(toy_kernel, toy_pi, two_map_rule, line3) -> None:
    det = BoundingIntervalDetector(two_map_rule, line3)
    joint = enumerate_fill_sample(toy_kernel, toy_pi, two_map_rule, det, 1, 0, max_attempts=3)
    assert sum(joint.values()) == 1
    assert min(a for a, _ in joint) == 2
    for w in range(3):
        assert sum(p for (_, x), p in joint.items() if x == w) == F(1, 3)


def test_enumeration_cap(toy_kernel, toy_pi, toy_independent) -> None:
    with pytest.raises(EnumerationTooLarge):
        enumerate_fill(toy_kernel, toy_pi, toy_independent, FullTrackingDetector(toy_independent), 2, 0, cap=5)


@pytest.mark.parametrize("search", list(Search))
def test_backward_search_output_is_independent_of_time(toy_kernel, toy_pi, two_map_rule, search) -> None:
    result = enumerate_altalg(toy_kernel, toy_pi, two_map_rule, toy_pi, 12, search, t0=3)
    assert result.output_law() == {0: F(1, 3), 1: F(1, 3), 2: F(1, 3)}
    assert result.factorizes()
    assert min(result.time_law()) >= 2


def test_backward_search_on_sticky_walk(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    result = enumerate_altalg(sticky_kernel, sticky_pi, rule, sticky_pi, 6)
    assert result.report.cond_law[0] == sticky_pi
    assert result.factorizes()
    assert result.report.density_identity() == result.report.p_accept


def test_monotone_sampler(toy_kernel, toy_pi, two_map_rule, line3) -> None:
    m = upward_family_from_rule(two_map_rule, line3)
    report = enumerate_sm(toy_kernel, toy_pi, m, 2, poset=line3)
    assert report.p_accept == F(3, 4)
    assert report.cond_law[0] == toy_pi
    assert report.density_identity() == report.p_accept


def test_performance_identity(toy_kernel, toy_pi, sticky_kernel, sticky_pi, line3) -> None:
    assert performance_identity(CrossSmConfig.single(toy_kernel, line3, toy_pi), 2) == (F(3, 4),) * 3
    identity = performance_identity(CrossSmConfig.single(sticky_kernel, line3, sticky_pi), 2)
    assert tuple(identity) == (F(5, 16),) * 3
    m = upward_family_from_rule(inverse_transform_rule(sticky_kernel), line3)
    assert enumerate_sm(sticky_kernel, sticky_pi, m, 2, poset=line3).p_accept == F(5, 16)


def test_cftp_window(two_map_rule, sticky_kernel) -> None:
    assert enumerate_cftp_window(two_map_rule, 2) == F(1, 2)
    assert enumerate_cftp_window(independent_transitions_rule(sticky_kernel), 2) == F(33, 256)


def test_read_once_on_sticky_walk(sticky_kernel, sticky_pi) -> None:
    result = enumerate_read_once(independent_transitions_rule(sticky_kernel), 2)
    assert result.q == F(33, 256)
    assert result.coalesced_law == Dist((F(4, 11), F(3, 11), F(4, 11)))
    assert result.output_law == sticky_pi


def test_read_once_on_two_map_rule(two_map_rule, toy_pi) -> None:
    result = enumerate_read_once(two_map_rule, 2, max_blocks=8)
    assert result.q == F(1, 2)
    assert result.coalesced_law == Dist((F(1, 2), F(0), F(1, 2)))
    assert result.output_law == toy_pi
    blocks = result.blocks_law()
    assert blocks[2] == F(1, 4)
    assert blocks[3] == F(1, 4)
    assert result.conditional(2) == result.coalesced_law


def test_read_once_needs_coalescing_blocks() -> None:
    swap = TransitionRule(2, {"swap": (1, 0)}, {"swap": 1})
    with pytest.raises(ValidationError, match="never coalesce"):
        enumerate_read_once(swap, 3)
    with pytest.raises(ValidationError, match="max_blocks"):
        enumerate_read_once(swap, 3, max_blocks=1)


def test_fill_conditional_laws_on_sticky_walk(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    report = enumerate_fill(sticky_kernel, sticky_pi, rule, FullTrackingDetector(rule), 2, sticky_pi)
    assert report.cond_law[0] == sticky_pi
    assert report.cond_law[1] == Dist((F(7, 22), F(8, 22), F(7, 22)))
    assert report.cond_law[2] == Dist((F(4, 11), F(3, 11), F(4, 11)))


def test_seed_mixture_of_fill_is_the_cftp_window(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    det = FullTrackingDetector(rule)
    mixed = sum(sticky_pi[z] * enumerate_fill(sticky_kernel, sticky_pi, rule, det, 2, z).p_accept for z in range(3))
    assert mixed == enumerate_cftp_window(rule, 2)


def test_backward_search_ignores_the_seed_law(toy_kernel, toy_pi, two_map_rule) -> None:
    from_point = enumerate_altalg(toy_kernel, toy_pi, two_map_rule, Dist.point(3, 0), 10)
    from_pi = enumerate_altalg(toy_kernel, toy_pi, two_map_rule, toy_pi, 10)
    assert from_point.report.cond_law[0] == toy_pi
    assert from_point.output_law() == from_pi.output_law()


def test_monotone_sampler_is_fill_with_bounding_detection(toy_kernel, toy_pi, two_map_rule, sticky_kernel, sticky_pi, line3) -> None:
    cases = [(toy_kernel, toy_pi, two_map_rule, 2), (sticky_kernel, sticky_pi, inverse_transform_rule(sticky_kernel), 3)]
    for k, pi, rule, t in cases:
        sm = enumerate_sm(k, pi, upward_family_from_rule(rule, line3), t, poset=line3)
        fill = enumerate_fill(k, pi, rule, BoundingIntervalDetector(rule, line3), t, line3.bottom)
        assert sm.p_accept == fill.p_accept
        assert sm.cond_law == fill.cond_law


def test_cross_monotone_acceptance(sticky_kernel, line3) -> None:
    lazy = Kernel.from_rows([
        ["1/2", "1/2", "0"],
        ["1/4", "1/4", "1/2"],
        ["0", "1/4", "3/4"],
    ])
    cfg = CrossSmConfig(sticky_kernel, lazy, line3)
    rule_k, rule_l = coupled_inverse_transform_rules(sticky_kernel, lazy)
    m = upward_family_from_rule(rule_k, line3, rule_l)
    assert m.check(sticky_kernel, lazy)
    report = enumerate_sm(cfg, None, m, 3)
    identity = performance_identity(cfg, 3)
    assert report.p_accept == F(15, 64)
    assert tuple(identity) == (F(15, 64),) * 3
    assert report.cond_law[0] == cfg.pi


def test_performance_identity_with_transient_states_of_l(line3) -> None:
    k = Kernel.from_rows([["1/2", "1/4", "1/4"]] * 3)
    l = Kernel.from_rows([["1/2", "0", "1/2"]] * 3)
    cfg = CrossSmConfig(k, l, line3)
    assert cfg.sigma[1] == 0
    assert tuple(performance_identity(cfg, 2)) == (F(1),) * 3


def test_read_once_law_after_two_blocks_is_not_stationary(sticky_kernel, sticky_pi) -> None:
    result = enumerate_read_once(independent_transitions_rule(sticky_kernel), 2)
    assert result.conditional(2) == result.coalesced_law
    assert result.conditional(2) != sticky_pi


def _random_rule(rng: random.Random, n: int) -> TransitionRule:
    count = rng.randint(1, 3)
    table = {f"u{i}": tuple(rng.randrange(n) for _ in range(n)) for i in range(count)}
    weights = [rng.randint(1, 3) for _ in range(count)]
    return TransitionRule(n, table, {f"u{i}": F(w, sum(weights)) for i, w in enumerate(weights)})


def _random_chains(count: int, seed: int = 1):
    """Irreducible chains on at most 4 states with pi > 0, from random rules"""
    rng = random.Random(seed)
    found = 0
    while found < count:
        n = rng.randint(1, 4)
        rule = _random_rule(rng, n)
        k = kernel_from_rule(rule)
        if not is_irreducible(k):
            continue
        pi = solve_stationary(k)
        if 0 in pi.weights:
            continue
        found += 1
        yield k, pi, rule, rng.randint(0, 3)


def test_exact_samplers_on_random_chains() -> None:
    checked = 0
    for k, pi, rule, t in _random_chains(100):
        n = k.size
        for z in range(n):
            report = enumerate_fill(k, pi, rule, FullTrackingDetector(rule), t, z)
            if report.p_accept:
                assert report.cond_law[0] == pi
            assert report.p_accept == report.p_first_space / pi[z]
        independent = independent_transitions_rule(k)
        report = enumerate_fill(k, pi, independent, FullTrackingDetector(independent), t, 0)
        if report.p_accept:
            assert report.cond_law[0] == pi
        for search in Search:
            result = enumerate_altalg(k, pi, rule, pi, 3, search, t0=2)
            if result.report.p_accept:
                assert result.report.cond_law[0] == pi
                assert result.factorizes()
        line = Poset.chain(n)
        if is_stochastically_monotone(k, line):
            m = upward_family_from_rule(inverse_transform_rule(k), line)
            sm = enumerate_sm(k, pi, m, t, poset=line)
            if sm.p_accept:
                assert sm.cond_law[0] == pi
            assert sm.p_accept == k.power(t).prob(line.top, line.bottom) / pi[line.bottom]
        checked += 1
    assert checked == 100
