from collections import Counter
from fractions import Fraction

import pydantic
import pytest

from perfect_mcmc.chain import Dist, Kernel
from perfect_mcmc.detection import BoundingIntervalDetector, FullTrackingDetector
from perfect_mcmc.exceptions import HorizonExceeded, MaxAttemptsExceeded, ValidationError, ZeroMassSeed
from perfect_mcmc.poset import CrossSmConfig, upward_family_from_rule
from perfect_mcmc.rng import RngStream
from perfect_mcmc.rules import TransitionRule, coupled_inverse_transform_rules, independent_transitions_rule
from perfect_mcmc.samplers import (
    RunOutcome,
    Search,
    altalg_run,
    cftp_run,
    check_search,
    fill_run,
    fill_sample,
    read_once_cftp_run,
    search_stops,
    sm_fill_run,
    tours_generate,
)
from perfect_mcmc.stats import (
    EmpiricalLaw,
    chi_square_gof,
    independence_chi_square,
    lag_pairs,
    mean_and_stderr,
    tv_distance,
)


def tv_of(outputs, target: Dist) -> float:
    return tv_distance(EmpiricalLaw.from_samples(outputs, len(target)), target)


def test_run_outcome_output_iff_accepted() -> None:
    with pytest.raises(pydantic.ValidationError):
        RunOutcome(accepted=True, t_used=0, seed_state=0, rng_seed=0)
    with pytest.raises(pydantic.ValidationError):
        RunOutcome(accepted=False, output=1, t_used=0, seed_state=0, rng_seed=0)


def test_fill_run_is_replayable(toy_kernel, toy_pi, toy_independent) -> None:
    det = FullTrackingDetector(toy_independent)
    first = fill_run(toy_kernel, toy_pi, toy_independent, det, 3, 0, RngStream(7).split(4))
    again = fill_run(toy_kernel, toy_pi, toy_independent, det, 3, 0, RngStream(7).split(4))
    assert first == again
    assert first.t_used == 6
    assert first.rng_key == (4,)


def test_fill_never_accepts_an_unreachable_seed(toy_kernel, toy_pi, two_map_rule) -> None:
    # no two-step composite of the two-map rule is constant at 1
    det = FullTrackingDetector(two_map_rule)
    for i in range(50):
        outcome = fill_run(toy_kernel, toy_pi, two_map_rule, det, 2, 1, RngStream(0).split(i))
        assert not outcome.accepted
        assert outcome.output is None


def test_fill_acceptance_rate(toy_kernel, toy_pi, toy_independent) -> None:
    det = FullTrackingDetector(toy_independent)
    root = RngStream(11)
    reps = 4000
    outcomes = [fill_run(toy_kernel, toy_pi, toy_independent, det, 2, 0, root.split(i)) for i in range(reps)]
    accepted = [o.output for o in outcomes if o.accepted]
    rate = len(accepted) / reps
    assert abs(rate - 3 / 16) < 0.03
    assert tv_of(accepted, toy_pi) < 0.08


def test_fill_rejects_bad_input(toy_kernel, two_map_rule, sticky_kernel) -> None:
    det = FullTrackingDetector(two_map_rule)
    with pytest.raises(ValidationError, match="does not realize"):
        fill_run(sticky_kernel, Dist((Fraction(2, 5), Fraction(1, 5), Fraction(2, 5))), two_map_rule, det, 2, 0, RngStream(0))
    lazy = Kernel.from_rows([["1", "0"], ["1", "0"]])
    rule = TransitionRule(2, {"home": (0, 0)}, {"home": 1})
    with pytest.raises(ZeroMassSeed):
        fill_run(lazy, Dist.point(2, 0), rule, FullTrackingDetector(rule), 1, 1, RngStream(0))


def test_fill_sample_doubles_until_acceptance(toy_kernel, toy_pi, two_map_rule, line3) -> None:
    det = BoundingIntervalDetector(two_map_rule, line3)
    outcome = fill_sample(toy_kernel, toy_pi, two_map_rule, det, 1, 0, RngStream(3), max_attempts=16)
    assert outcome.accepted
    assert outcome.horizon == 2 ** (outcome.attempts - 1)
    assert outcome.t_used == sum(2 * 2 ** i for i in range(outcome.attempts))


def test_fill_sample_gives_up(toy_kernel, toy_pi, two_map_rule) -> None:
    det = FullTrackingDetector(two_map_rule)
    with pytest.raises(MaxAttemptsExceeded):
        fill_sample(toy_kernel, toy_pi, two_map_rule, det, 1, 1, RngStream(0), max_attempts=1)


def test_search_schedules() -> None:
    assert [j for j in range(9) if search_stops(Search.POW2, j, 1)] == [1, 2, 4, 8]
    assert all(search_stops(Search.EVERY, j, 1) for j in range(4))
    assert [j for j in range(6) if search_stops(Search.GUARANTEE, j, 4)] == [3, 4, 5]
    with pytest.raises(ValidationError, match="t0"):
        check_search(Search.GUARANTEE, None, 10)
    assert check_search("pow2", None, 10) == (Search.POW2, 1)


@pytest.mark.parametrize("search", list(Search))
def test_altalg_outputs_are_stationary(sticky_kernel, sticky_pi, search) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    root = RngStream(5)
    outcomes = [altalg_run(sticky_kernel, sticky_pi, rule, sticky_pi, 4096, root.split(i), search, t0=4) for i in range(2000)]
    assert all(o.accepted for o in outcomes)
    assert all(o.horizon >= o.coalescence_time for o in outcomes)
    if search is Search.GUARANTEE:
        assert all(o.horizon >= 3 for o in outcomes)
    assert tv_of([o.output for o in outcomes], sticky_pi) < 0.06


def test_altalg_horizon(toy_kernel, toy_pi) -> None:
    rule = independent_transitions_rule(toy_kernel)
    with pytest.raises(HorizonExceeded):
        altalg_run(toy_kernel, toy_pi, rule, toy_pi, 0, RngStream(0))


def test_sm_sampler(toy_kernel, toy_pi, two_map_rule, line3) -> None:
    m = upward_family_from_rule(two_map_rule, line3)
    root = RngStream(9)
    outcomes = [sm_fill_run(toy_kernel, toy_pi, m, 2, root.split(i), poset=line3, validate=i == 0) for i in range(3000)]
    accepted = [o.output for o in outcomes if o.accepted]
    assert abs(len(accepted) / 3000 - 3 / 4) < 0.04
    assert all(o.seed_state == line3.bottom for o in outcomes)
    assert tv_of(accepted, toy_pi) < 0.06


def test_sm_sampler_needs_a_poset(toy_kernel, toy_pi, two_map_rule, line3) -> None:
    m = upward_family_from_rule(two_map_rule, line3)
    with pytest.raises(ValidationError, match="poset"):
        sm_fill_run(toy_kernel, toy_pi, m, 2, RngStream(0))


def test_cftp(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    root = RngStream(21)
    outcomes = [cftp_run(rule, root.split(i)) for i in range(2000)]
    windows = Counter(o.backward_time for o in outcomes)
    assert all(w & (w - 1) == 0 for w in windows)
    assert tv_of([o.output for o in outcomes], sticky_pi) < 0.06


def test_cftp_horizon() -> None:
    swap = TransitionRule(2, {"swap": (1, 0)}, {"swap": 1})
    with pytest.raises(HorizonExceeded):
        cftp_run(swap, RngStream(0), t_max=8)


def test_read_once_cftp(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    root = RngStream(33)
    outcomes = [read_once_cftp_run(rule, 2, root.split(i)) for i in range(2000)]
    assert min(o.blocks_used for o in outcomes) >= 2
    assert tv_of([o.output for o in outcomes], sticky_pi) < 0.06


def test_read_once_cftp_block_cap() -> None:
    swap = TransitionRule(2, {"swap": (1, 0)}, {"swap": 1})
    with pytest.raises(HorizonExceeded):
        read_once_cftp_run(swap, 3, RngStream(0), max_blocks=5)


def test_tours(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    batch = tours_generate(sticky_kernel, sticky_pi, rule, 3, 5, RngStream(2))
    assert len(batch) == 5
    assert not batch.approximate
    for tour in batch.tours:
        assert len(tour) == 3
        for a, b in zip(tour, list(tour)[1:]):
            assert sticky_kernel.prob(a, b) > 0


def test_tours_with_a_fixed_seed(sticky_kernel, sticky_pi, caplog) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    batch = tours_generate(sticky_kernel, sticky_pi, rule, 2, 3, RngStream(2), seed_state=0)
    assert batch.approximate
    assert "approximately stationary" in caplog.text
    exact = tours_generate(sticky_kernel, sticky_pi, rule, 2, 3, RngStream(2), seed_state=0, seed_is_exact=True)
    assert not exact.approximate


def test_tours_first_marginal_is_stationary(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    root = RngStream(8)
    firsts = [tours_generate(sticky_kernel, sticky_pi, rule, 2, 1, root.split(i)).tours[0][0] for i in range(1500)]
    assert tv_of(firsts, sticky_pi) < 0.07


def test_fill_sample_attempts_and_law(toy_kernel, toy_pi, two_map_rule) -> None:
    # each window-2 attempt from the bottom accepts with probability 3/4
    det = FullTrackingDetector(two_map_rule)
    root = RngStream(42)
    outcomes = [
        fill_sample(toy_kernel, toy_pi, two_map_rule, det, 2, 0, root.split(i), doubling=False)
        for i in range(100_000)
    ]
    mean, se = mean_and_stderr([o.attempts for o in outcomes])
    assert abs(mean - 4 / 3) < 3 * se
    assert all(o.horizon == 2 and o.t_used == 4 * o.attempts for o in outcomes)
    law = EmpiricalLaw.from_samples((o.output for o in outcomes), 3)
    assert tv_distance(law, toy_pi) < 0.015
    assert chi_square_gof(law, toy_pi).p_value > 1e-4


def test_fill_sample_is_replayable(toy_kernel, toy_pi, toy_independent) -> None:
    det = FullTrackingDetector(toy_independent)
    first = fill_sample(toy_kernel, toy_pi, toy_independent, det, 1, 0, RngStream(5).split(2), doubling=False)
    again = fill_sample(toy_kernel, toy_pi, toy_independent, det, 1, 0, RngStream(5).split(2), doubling=False)
    assert first == again
    assert first.rng_key == (2,)


def test_cross_monotone_sampler(sticky_kernel, sticky_pi, line3) -> None:
    lazy = Kernel.from_rows([
        ["1/2", "1/2", "0"],
        ["1/4", "1/4", "1/2"],
        ["0", "1/4", "3/4"],
    ])
    cfg = CrossSmConfig(sticky_kernel, lazy, line3)
    rule_k, rule_l = coupled_inverse_transform_rules(sticky_kernel, lazy)
    m = upward_family_from_rule(rule_k, line3, rule_l)
    root = RngStream(21)
    outcomes = [sm_fill_run(cfg, None, m, 3, root.split(i), validate=i == 0) for i in range(5000)]
    accepted = [o.output for o in outcomes if o.accepted]
    assert abs(len(accepted) / 5000 - 15 / 64) < 0.03
    assert tv_of(accepted, sticky_pi) < 0.07


def test_tours_are_one_dependent(toy_kernel, toy_pi, two_map_rule) -> None:
    batch = tours_generate(toy_kernel, toy_pi, two_map_rule, 2, 10_000, RngStream(1))
    tours = [tuple(tour) for tour in batch.tours]
    assert independence_chi_square(lag_pairs(tours, 2, stride=1)).p_value > 1e-4
    assert independence_chi_square(lag_pairs(tours, 1, stride=1)).p_value < 1e-6


def test_read_once_output_depends_on_blocks_used(sticky_kernel, sticky_pi) -> None:
    rule = independent_transitions_rule(sticky_kernel)
    root = RngStream(5)
    outcomes = [read_once_cftp_run(rule, 2, root.split(i)) for i in range(100_000)]
    assert independence_chi_square([(o.blocks_used, o.output) for o in outcomes], cap=6).p_value < 1e-4
    after_two = EmpiricalLaw.from_samples((o.output for o in outcomes if o.blocks_used == 2), 3)
    assert chi_square_gof(after_two, sticky_pi).p_value < 1e-4
    assert tv_of([o.output for o in outcomes], sticky_pi) < 0.015
